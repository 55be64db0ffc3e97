// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gres/runner.hpp"

using namespace gres;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const char* kHarmonic = R"(# harmonic oscillator, all three methods
method = all
dim = 1
potential <<
0.5 * x1^2
>>
grid.min = -7.5
grid.max = 7.5
grid.points = 60
temperatures = 0.5, 1, 2
observable.x2 = 1 * x1^2
thermal_energy = true
ed.min = -10
ed.max = 10
ed.points = 201
classical.min = -15
classical.max = 15
output.prefix = harm
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("run file parsing", "[runfile]") {
  const auto c = parse_runfile(kHarmonic);
  CHECK(c.dim == 1);
  CHECK(c.methods == std::vector<Method>{Method::gauss, Method::ed, Method::classical});
  CHECK(c.potential.evaluate(Vector::Constant(1, 2.0)) == 2.0);
  CHECK(build_grid(c.grid).size() == 60);
  CHECK(c.temperatures == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(c.observable_names == std::vector<std::string>{"x2"});
  CHECK(c.thermal_energy);
  CHECK(c.effective_tau_max() == 1.0);
  CHECK(c.integrator.initial_time == 0.01);
  CHECK(c.ed.points == std::vector<int>{201});
  CHECK(c.output_prefix == "harm");

  const auto t = detail::parse_temperatures("logspace(0.1, 10, 40)");
  REQUIRE(t.size() == 40);
  CHECK(t.front() == 0.1);
  CHECK(t.back() == 10.0);
  CHECK_THAT(t[1] / t[0], WithinRel(std::pow(100.0, 1.0 / 39), 1e-13));
  CHECK(detail::parse_temperatures("linspace(1, 2, 3)") == std::vector<double>{1.0, 1.5, 2.0});
}

TEST_CASE("run file diagnostics name the line", "[runfile]") {
  const std::string base = kHarmonic;
  CHECK_THROWS_WITH(parse_runfile(base + "colour = blue\n"), ContainsSubstring("line 19: unknown key 'colour'"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, "grid.points = 60", "grid.points = six")),
                    ContainsSubstring("line 9: grid.points"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, "0.5 * x1^2", "0.5 * x2^2")), ContainsSubstring("line 5"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, ">>\n", "")), ContainsSubstring("line 4: block 'potential'"));
  CHECK_THROWS_WITH(parse_runfile(base + "dim = 2\n"), ContainsSubstring("duplicate key 'dim'"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, "method = all", "method = pimc")),
                    ContainsSubstring("line 2: method"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, "temperatures = 0.5, 1, 2", "temperatures = 0.5, -1")),
                    ContainsSubstring("line 10"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, "dim = 1\n", "")), ContainsSubstring("missing required key 'dim'"));
  CHECK_THROWS_WITH(parse_runfile(replace(base, "temperatures = 0.5, 1, 2", "temperatures = 100")),
                    ContainsSubstring("integrator.tau0"));
  CHECK_THROWS_AS(parse_runfile(base + "symmetry.sectors = boson\n"), ValidationError);
  CHECK_THROWS_AS(parse_runfile(base + "tau_max = 0.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_runfile(replace(base, "ed.points = 201", "ed.points = 2")), ValidationError);
  CHECK_THROWS_AS(parse_runfile("just text\n"), ValidationError);
}

TEST_CASE("canonical form round trips and drives the hash", "[runfile][property]") {
  for (const auto& name : preset_names()) {
    const auto c = parse_runfile(preset_runfile(name));
    const auto text = canonical_runfile(c);
    const auto back = parse_runfile(text);
    CHECK(canonical_runfile(back) == text);
    CHECK(config_hash(back) == config_hash(c));
  }
  const auto base = parse_runfile(kHarmonic);
  const std::string h0 = config_hash(base);
  // spacing, comments and defaults written out do not change the inputs
  CHECK(config_hash(parse_runfile(std::string(kHarmonic) + "# trailing\nintegrator.rel_tol = 1e-8\n")) == h0);
  CHECK(config_hash(parse_runfile(std::string(kHarmonic) + "workers = 3\n")) == h0);
  // any real input change does
  for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>>{
           {"grid.points = 60", "grid.points = 61"},
           {"0.5 * x1^2", "0.50000000000001 * x1^2"},
           {"temperatures = 0.5, 1, 2", "temperatures = 0.5, 1, 2.5"},
           {"ed.points = 201", "ed.points = 203"},
           {"observable.x2 = 1 * x1^2", "observable.x2b = 1 * x1^2"},
           {"output.prefix = harm", "output.prefix = harm2"}}) {
    CHECK(config_hash(parse_runfile(replace(kHarmonic, from, to))) != h0);
  }
  CHECK(config_hash(parse_runfile(std::string(kHarmonic) + "integrator.rel_tol = 1e-9\n")) != h0);
}

TEST_CASE("presets match the published setups", "[runfile]") {
  const auto f1 = parse_runfile(preset_runfile("fig1"));
  CHECK(build_grid(f1.grid).size() == 10);
  CHECK(f1.effective_tau_max() == 50.0);
  CHECK(f1.integrator.initial_time == 0.01);
  CHECK(f1.temperatures.size() == 40);
  CHECK(f1.temperatures.front() == 0.1);
  CHECK(f1.temperatures.back() == 10.0);
  const auto f2 = parse_runfile(preset_runfile("fig2"));
  CHECK(build_grid(f2.grid).size() == 14);
  CHECK(f2.symmetry == SymmetryGroup::reflection);
  CHECK(f2.sectors == std::vector<Sector>{Sector::even, Sector::odd});
  CHECK(parse_runfile(preset_runfile("fig2_unsym")).symmetry == SymmetryGroup::none);
  const auto f3 = parse_runfile(preset_runfile("fig3"));
  CHECK(f3.density.temperatures == std::vector<double>{0.5});
  const auto f4 = parse_runfile(preset_runfile("fig4"));
  const auto g4 = build_grid(f4.grid);
  CHECK(g4.size() == 256);
  CHECK(g4[0].weight == 0.25);
  CHECK(f4.temperatures.front() == 0.2);
  CHECK_THROWS_AS(preset_runfile("fig5"), ValidationError);
}

TEST_CASE("method=all agrees across methods on the harmonic oscillator", "[runfile]") {
  const auto c = parse_runfile(kHarmonic);
  const auto r = execute(c, 2);
  const auto& g = r.output(Method::gauss).scan;
  const auto& e = r.output(Method::ed).scan;
  const auto& k = r.output(Method::classical).scan;
  for (std::size_t i = 0; i < c.temperatures.size(); ++i) {
    const auto h = harmonic_analytic(1.0, 1.0, 1.0 / c.temperatures[i]);
    CHECK_THAT(g.rows[i].values[0], WithinRel(h.x2, 1e-3));
    CHECK_THAT(e.rows[i].values[0], WithinRel(h.x2, 1e-8));
    CHECK_THAT(k.rows[i].values[0], WithinRel(c.temperatures[i], 1e-8));
    CHECK_THAT(g.rows[i].energy, WithinRel(h.energy, 1e-3));
  }
  CHECK(r.gauss.members == 60);
}

TEST_CASE("outputs are written atomically with a manifest", "[runfile]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gres_runfile_test";
  fs::remove_all(dir);
  const auto c = parse_runfile(preset_runfile("fig3"));
  const auto r = execute(c, 1);
  const auto files = write_outputs(c, r, dir, "preset:fig3", 1);
  CHECK(files.size() == 7);
  for (const auto& f : files) CHECK(fs::exists(dir / f));
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");

  std::ifstream mf(dir / "fig3_manifest.json");
  const auto m = nlohmann::json::parse(mf);
  CHECK(m["config_hash"] == config_hash(c));
  CHECK(m["gauss"]["members"] == 28);
  CHECK(m["gauss"]["dropped"].empty());

  std::ifstream df(dir / "fig3_gauss_density.csv");
  const auto density = read_csv(df);
  CHECK(density.columns == std::vector<std::string>{"x", "rho_kT=0.5"});
  CHECK(density.rows.size() == 141);

  // identical inputs give identical tables
  const auto again = execute(c, 3);
  std::ostringstream a, b;
  write_scan_csv(a, r.output(Method::gauss).scan);
  write_scan_csv(b, again.output(Method::gauss).scan);
  CHECK(a.str() == b.str());
  fs::remove_all(dir);
}

TEST_CASE("table diff", "[runfile]") {
  auto table = [](std::vector<std::vector<double>> rows) {
    CsvTable t;
    t.columns = {"kT", "beta", "Z", "var_x"};
    t.rows = std::move(rows);
    return t;
  };
  const auto a = table({{0.5, 2.0, 1.0, 0.4}, {1.0, 1.0, 2.0, 0.8}});
  const auto b = table({{0.5, 2.0, 1.0, 0.41}, {1.0, 1.0, 2.0, 0.8}});
  const auto same = diff_tables(a, a, {});
  CHECK(same.pass);
  CHECK(same.columns[1].max_rel == 0.0);

  DiffTolerance tol;
  tol.rtol = 0.03;
  CHECK(diff_tables(a, b, tol).pass);
  CHECK(diff_tables(b, a, tol).pass);
  tol.columns = {"var_x"};
  const auto r = diff_tables(a, b, tol);
  CHECK_THAT(r.columns[0].max_rel, WithinRel(0.01 / 0.41, 1e-12));
  CHECK(r.columns[0].worst_kt == 0.5);
  tol.rtol = 0.01;
  CHECK_FALSE(diff_tables(a, b, tol).pass);
  CHECK_FALSE(diff_tables(b, a, tol).pass);
  tol.kt_min = 0.9;
  CHECK(diff_tables(a, b, tol).pass);

  auto other = a;
  other.columns[3] = "var_y";
  CHECK_THROWS_AS(diff_tables(a, other, {}), ValidationError);
  auto shifted = a;
  shifted.rows[1][0] = 1.1;
  CHECK_THROWS_AS(diff_tables(a, shifted, {}), ValidationError);
}
