// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gres/potential.hpp"

using namespace gres;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) { return (Vector(2) << x, y).finished(); }

}  // namespace

TEST_CASE("builtin potentials at reference points", "[potential]") {
  const auto single = builtin_potential("single_well_1d");
  const auto dw = builtin_potential("double_well_1d");
  const auto asym = builtin_potential("asym_double_well_2d");
  CHECK(single.evaluate(v1(0.0)) == 0.0);
  CHECK_THAT(single.evaluate(v1(1.0)), WithinRel(0.6, 1e-15));
  CHECK(dw.evaluate(v1(0.0)) == 4.0);
  CHECK_THAT(dw.evaluate(v1(std::sqrt(2.0))), WithinAbs(0.0, 1e-14));
  CHECK_THAT(dw.evaluate(v1(-std::sqrt(2.0))), WithinAbs(0.0, 1e-14));
  CHECK(dw.evaluate(v1(1.0)) == 1.0);
  CHECK(asym.evaluate(v2(0, 0)) == 4.0);
  const auto h = builtin_potential("harmonic", {.omega = 1.0, .mass = 1.0, .dim = 1});
  CHECK(h.evaluate(v1(2.0)) == 2.0);
  CHECK_THROWS_AS(builtin_potential("triple_well"), ValidationError);
  CHECK_THROWS_AS(builtin_potential("harmonic", {.omega = -1.0}), ValidationError);
}

TEST_CASE("builtins match their factored forms", "[potential][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  const auto single = builtin_potential("single_well_1d");
  const auto dw = builtin_potential("double_well_1d");
  const auto asym = builtin_potential("asym_double_well_2d");
  const auto h3 = builtin_potential("harmonic", {.omega = 1.7, .mass = 0.6, .dim = 3});
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng);
    const double fs = 0.5 * x * x + 0.1 * std::pow(x, 4);
    const double fd = 4 - 4 * x * x + std::pow(x, 4);
    const double fa = std::pow(x * x - 2, 2) + 0.1 * x + 0.5 * std::pow(y - 0.5 * x, 2) + 0.1 * std::pow(y, 4);
    const double fh = 0.5 * 0.6 * 1.7 * 1.7 * (x * x + y * y + z * z);
    CHECK_THAT(single.evaluate(v1(x)), WithinRel(fs, 1e-12));
    CHECK_THAT(dw.evaluate(v1(x)), WithinAbs(fd, 1e-12 * (4 + 4 * x * x + std::pow(x, 4))));
    CHECK_THAT(asym.evaluate(v2(x, y)), WithinRel(fa, 1e-12));
    CHECK_THAT(h3.evaluate((Vector(3) << x, y, z).finished()), WithinRel(fh, 1e-12));
  }
}

TEST_CASE("Gaussian-weighted terms", "[potential]") {
  Matrix a(2, 2);
  a << 2.0, 0.5, 0.5, 1.0;
  const Vector s = v2(0.3, -0.2);
  PolyGaussTerm t{1.5, Polynomial::monomial(2, Monomial::power(0, 1) * Monomial::power(1, 2)), s, a};
  const Vector x = v2(0.7, 1.1);
  const Vector d = x - s;
  CHECK_THAT(t.evaluate(x), WithinRel(1.5 * 0.7 * 1.21 * std::exp(-0.5 * d.dot(a * d)), 1e-14));

  Matrix bad = a;
  bad(0, 1) = 0.4;
  CHECK_THROWS_AS((PolyGaussTerm{1.0, Polynomial::constant(2, 1.0), s, bad}.validate(2)), ValidationError);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -0.1;
  CHECK_THROWS_AS((PolyGaussTerm{1.0, Polynomial::constant(2, 1.0), s, indefinite}.validate(2)),
                  ValidationError);
  CHECK_THROWS_AS(Potential(2).evaluate(v1(0.0)), ValidationError);
}

TEST_CASE("mass matrix validation", "[potential]") {
  Matrix m(2, 2);
  m << 2.0, 0.1, 0.1, 1.0;
  const MassMatrix mm(m);
  CHECK((mm.inverse() * m - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK_THAT(mm.log_det(), WithinRel(std::log(1.99), 1e-14));
  CHECK_FALSE(mm.is_diagonal());
  Matrix asym = m;
  asym(0, 1) = 0.2;
  CHECK_THROWS_AS(MassMatrix(asym), ValidationError);
  CHECK_THROWS_AS(MassMatrix(-m), ValidationError);
}

TEST_CASE("text form round trips exactly", "[potential]") {
  const auto asym = builtin_potential("asym_double_well_2d");
  const auto back = parse_potential(to_text(asym), 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const Vector x = v2(u(rng), u(rng));
    CHECK(back.evaluate(x) == asym.evaluate(x));
  }

  Potential g(2);
  Matrix a(2, 2);
  a << 0.1, 0.2, 0.2, 3.0;
  g.add(PolyGaussTerm{1.0 / 3.0, Polynomial::monomial(2, Monomial::power(1, 3)), v2(0.1, 1.0 / 7.0), a});
  const auto gb = parse_potential(to_text(g), 2);
  CHECK(gb.evaluate(v2(0.4, -0.9)) == g.evaluate(v2(0.4, -0.9)));
  CHECK(to_text(gb) == to_text(g));
}

TEST_CASE("text form parsing and diagnostics", "[potential]") {
  const auto p = parse_potential("# comment\n0.5 * x1^2\n\n0.1*x1^4  # quartic\n", 1);
  CHECK_THAT(p.evaluate(v1(1.0)), WithinRel(0.6, 1e-15));
  const auto q = parse_potential("2 * x1 * x2^2 * gauss(0, 0; 1, 0, 0, 1)", 2);
  CHECK_THAT(q.evaluate(v2(1.0, 1.0)), WithinRel(2.0 * std::exp(-1.0), 1e-14));
  CHECK_THROWS_WITH(parse_potential("1\n0.5 * x2^2\n", 1), ContainsSubstring("line 2"));
  CHECK_THROWS_WITH(parse_potential("0.5 * x1^", 1), ContainsSubstring("line 1"));
  CHECK_THROWS_AS(parse_potential("abc", 1), ValidationError);
  CHECK_THROWS_AS(parse_potential("1 * gauss(0; 1)", 2), ValidationError);
}

TEST_CASE("monomial and polynomial algebra", "[potential]") {
  const auto m = Monomial::power(0, 2) * Monomial::power(2, 3);
  CHECK(m.degree() == 5);
  CHECK(m.exponent(2) == 3);
  CHECK_THROWS_AS(Monomial::power(0, 10) * Monomial::power(0, 10), ValidationError);
  CHECK_THROWS_AS(Monomial::power(16, 1), ValidationError);

  const auto p = Polynomial::monomial(1, Monomial::power(0, 3));
  const auto shifted = p.translated(v1(2.0));
  for (double x : {-1.0, 0.0, 0.5, 3.0}) CHECK_THAT(shifted.evaluate(v1(x)), WithinRel(std::pow(x + 2, 3), 1e-14));
  const auto sq = (p + Polynomial::constant(1, 1.0)) * (p + Polynomial::constant(1, -1.0));
  CHECK_THAT(sq.evaluate(v1(1.5)), WithinRel(std::pow(1.5, 6) - 1, 1e-14));
}
