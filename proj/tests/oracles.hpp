// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

// Test-only reference computations: adaptive quadrature of matrix elements
// straight from the wavefunction formulas, and finite-difference derivatives
// of the analytic overlap/Hamiltonian elements. Nothing here goes through the
// moment recursion.

#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gres/gaussmath.hpp"

namespace gres::testing {

inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           double tol = 1e-14) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol);
}

inline double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx,
                           double ay, double by, double tol = 1e-13) {
  return integrate_1d(
      [&](double x) { return integrate_1d([&](double y) { return f(x, y); }, ay, by, tol); }, ax,
      bx, tol);
}

/// Integrates f over a box wide enough for the product of two Gaussians.
inline double integrate_pair(const GaussianParam& bra, const GaussianParam& ket,
                             const std::function<double(const Vector&)>& f) {
  const int d = bra.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(bra.width + ket.width);
  const double sigma = 1.0 / std::sqrt(es.eigenvalues().minCoeff());
  Vector lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = std::min(bra.center[i], ket.center[i]) - 16.0 * sigma;
    hi[i] = std::max(bra.center[i], ket.center[i]) + 16.0 * sigma;
  }
  if (d == 1) {
    Vector x(1);
    return integrate_1d([&](double t) { x[0] = t; return f(x); }, lo[0], hi[0]);
  }
  if (d == 2) {
    Vector x(2);
    return integrate_2d([&](double s, double t) { x[0] = s; x[1] = t; return f(x); }, lo[0], hi[0],
                        lo[1], hi[1]);
  }
  throw std::runtime_error("quadrature oracle supports D <= 2");
}

inline double quad_overlap(const GaussianParam& bra, const GaussianParam& ket) {
  return integrate_pair(bra, ket, [&](const Vector& x) { return bra.value(x) * ket.value(x); });
}

inline double quad_observable(const GaussianParam& bra, const GaussianParam& ket,
                              const Potential& a) {
  return integrate_pair(bra, ket,
                        [&](const Vector& x) { return bra.value(x) * a.evaluate(x) * ket.value(x); });
}

/// 1/2 integral of grad(bra)^T M^-1 grad(ket) (integration by parts form).
inline double quad_kinetic(const GaussianParam& bra, const GaussianParam& ket,
                           const MassMatrix& mass) {
  return integrate_pair(bra, ket, [&](const Vector& x) {
    const Vector gb = -(bra.width * (x - bra.center)) * bra.value(x);
    const Vector gk = -(ket.width * (x - ket.center)) * ket.value(x);
    return 0.5 * gb.dot(mass.inverse() * gk);
  });
}

/// Central difference with one Richardson extrapolation step.
inline double richardson(const std::function<double(double)>& diff_quotient, double h) {
  return (4.0 * diff_quotient(0.5 * h) - diff_quotient(h)) / 3.0;
}

inline GaussianParam perturbed(const GaussianParam& p, int index, double h) {
  Vector v = pack(p);
  v[index] += h;
  return unpack(v, p.dim());
}

inline double fd_step(const GaussianParam& p, int index) {
  return 2e-3 * std::max(1.0, std::abs(pack(p)[index]));
}

/// d^2 <lambda'|lambda> / d lambda'_a d lambda_b at lambda' = lambda.
inline Matrix fd_gram(const GaussianParam& lambda, const ParamMask& mask) {
  const int n = mask.count();
  Matrix out(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int ia = mask.indices()[a];
      const int ib = mask.indices()[b];
      const double h = std::min(fd_step(lambda, ia), fd_step(lambda, ib));
      out(a, b) = richardson(
          [&](double s) {
            auto k = [&](double sa, double sb) {
              return overlap(perturbed(lambda, ia, sa), perturbed(lambda, ib, sb));
            };
            return (k(s, s) - k(s, -s) - k(-s, s) + k(-s, -s)) / (4.0 * s * s);
          },
          h);
    }
  }
  return out;
}

/// d <lambda'|H|lambda> / d lambda'_a at lambda' = lambda.
inline Vector fd_force(const GaussianParam& lambda, const MassMatrix& mass, const Potential& u,
                       const ParamMask& mask) {
  const int n = mask.count();
  Vector out(n);
  for (int a = 0; a < n; ++a) {
    const int ia = mask.indices()[a];
    out[a] = richardson(
        [&](double s) {
          return (hamiltonian_element(perturbed(lambda, ia, s), lambda, mass, u) -
                  hamiltonian_element(perturbed(lambda, ia, -s), lambda, mass, u)) /
                 (2.0 * s);
        },
        fd_step(lambda, ia));
  }
  return out;
}

// Random instances -----------------------------------------------------------

inline Matrix random_spd(std::mt19937_64& rng, int d, double floor) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = u(rng);
  }
  Matrix s = 0.5 * a * a.transpose() + floor * Matrix::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline GaussianParam random_gaussian(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> uq(-1.5, 1.5);
  std::uniform_real_distribution<double> ug(-0.5, 0.5);
  Vector q(d);
  for (int i = 0; i < d; ++i) q[i] = uq(rng);
  return GaussianParam(random_spd(rng, d, 0.4), q, ug(rng));
}

/// A few random monomials of degree <= 4 plus one Gaussian-weighted term.
inline Potential random_potential(std::mt19937_64& rng, int d, bool with_gaussian = true) {
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  std::uniform_int_distribution<int> ue(0, 2);
  Potential p(d);
  for (int t = 0; t < 4; ++t) {
    Monomial m;
    for (int i = 0; i < d; ++i) m = m * Monomial::power(i, ue(rng));
    if (m.degree() > 4) m = Monomial::power(0, 2);
    p.add(make_term(d, uc(rng), m));
  }
  if (with_gaussian) {
    Vector s(d);
    for (int i = 0; i < d; ++i) s[i] = uc(rng);
    Monomial m = Monomial::power(d - 1, 1);
    p.add(PolyGaussTerm{uc(rng), Polynomial::monomial(d, m), s, random_spd(rng, d, 0.2)});
  }
  return p;
}

inline double max_rel(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace gres::testing
