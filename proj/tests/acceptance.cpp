// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails. Pass a criterion number to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gres/runner.hpp"
#include "oracles.hpp"

using namespace gres;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel(double a, double ref) { return std::abs(a - ref) / std::abs(ref); }

RunConfig preset(const char* name) { return parse_runfile(preset_runfile(name)); }

RunConfig only(RunConfig c, std::vector<Method> methods) {
  c.methods = std::move(methods);
  return c;
}

// 1 -----------------------------------------------------------------------

Outcome harmonic_exactness() {
  const auto c = parse_runfile(R"(method = gauss
dim = 1
potential = builtin harmonic
grid.min = -6
grid.max = 6
grid.points = 20
temperatures = 0.2, 0.5, 1, 2, 5, 10
)");
  const auto r = execute(c);
  const auto& scan = r.output(Method::gauss).scan;
  Outcome o;
  double worst_x2 = 0.0, worst_z = 0.0;
  for (const auto& row : scan.rows) {
    const auto h = harmonic_analytic(1.0, 1.0, row.beta);
    const double ex = rel(row.variances[0], h.x2);
    const double ez = rel(row.z, h.z);
    worst_x2 = std::max(worst_x2, ex);
    worst_z = std::max(worst_z, ez);
    if (ex > 1e-3 || ez > 1e-3) {
      o.pass = false;
      o.detail += fmt(" kT=%g:", row.kT) + fmt(" dx2=%.2e", ex) + fmt(" dZ=%.2e", ez);
    }
  }
  o.detail = fmt("max rel <x^2> %.2e", worst_x2) + fmt(", max rel Z %.2e (tol 1e-3)", worst_z) + o.detail;
  return o;
}

// 2, 3, 5 -----------------------------------------------------------------

struct VarianceGap {
  double worst = 0.0;
  double at_kt = 0.0;
};

VarianceGap variance_gap(const ThermalScan& a, const ThermalScan& ref, double kt_min, int coord) {
  VarianceGap g;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].kT < kt_min) continue;
    const double e = rel(a.rows[i].variances[coord], ref.rows[i].variances[coord]);
    if (e > g.worst) g = {e, a.rows[i].kT};
  }
  return g;
}

Outcome fig1_reproduction() {
  const auto r = execute(only(preset("fig1"), {Method::gauss, Method::ed}));
  const auto g = variance_gap(r.output(Method::gauss).scan, r.output(Method::ed).scan, 0.0, 0);
  return {g.worst <= 0.02, fmt("max rel variance error %.2e", g.worst) + fmt(" at kT=%.4g (tol 2e-2)", g.at_kt)};
}

Outcome fig2_reproduction() {
  const auto sym = execute(only(preset("fig2"), {Method::gauss, Method::ed}));
  const auto unsym = execute(preset("fig2_unsym"));
  const auto& ed = sym.output(Method::ed).scan;
  const auto& gs = sym.output(Method::gauss).scan;
  const auto& gu = unsym.output(Method::gauss).scan;
  const auto g = variance_gap(gs, ed, 0.4, 0);
  Outcome o{g.worst <= 0.05, fmt("kT>=0.4: max rel variance error %.2e", g.worst) +
                                 fmt(" at kT=%.4g (tol 5e-2)", g.at_kt)};
  int cold = 0, ordered = 0;
  for (std::size_t i = 0; i < ed.rows.size(); ++i) {
    if (ed.rows[i].kT > 0.3) continue;
    ++cold;
    const double es = rel(gs.rows[i].variances[0], ed.rows[i].variances[0]);
    const double eu = rel(gu.rows[i].variances[0], ed.rows[i].variances[0]);
    ordered += eu > es;
  }
  o.pass = o.pass && cold > 0 && ordered == cold;
  o.detail += "; kT<=0.3: unsymmetrized worse at " + std::to_string(ordered) + "/" + std::to_string(cold);
  return o;
}

double trapezoid(const std::vector<Vector>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i][0] - x[i - 1][0]);
  return s;
}

Outcome fig3_reproduction() {
  const auto c = only(preset("fig3"), {Method::gauss, Method::ed});
  const auto r = execute(c);
  const auto& g = *r.output(Method::gauss).density;
  const auto& e = *r.output(Method::ed).density;
  std::vector<double> diff(g.points.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(g.values[0][i] - e.values[0][i]);
  const double l1 = trapezoid(g.points, diff);
  const double mass = trapezoid(g.points, g.values[0]);
  return {l1 <= 0.02 && std::abs(mass - 1.0) <= 1e-3,
          fmt("L1 %.2e (tol 2e-2)", l1) + fmt(", integral %.6f (tol 1e-3)", mass)};
}

Outcome fig4_reproduction() {
  const auto r = execute(only(preset("fig4"), {Method::gauss, Method::ed}));
  const auto gx = variance_gap(r.output(Method::gauss).scan, r.output(Method::ed).scan, 0.5, 0);
  const auto gy = variance_gap(r.output(Method::gauss).scan, r.output(Method::ed).scan, 0.5, 1);
  return {gx.worst <= 0.05 && gy.worst <= 0.05,
          fmt("kT>=0.5: max rel var_x error %.2e", gx.worst) + fmt(" at kT=%.4g", gx.at_kt) +
              fmt(", var_y %.2e", gy.worst) + fmt(" at kT=%.4g (tol 5e-2)", gy.at_kt)};
}

// 6, 8 --------------------------------------------------------------------

Outcome derivative_correctness() {
  std::mt19937_64 rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3;
    const auto p = testing::random_gaussian(rng, d);
    const auto u = testing::random_potential(rng, d);
    const MassMatrix m(testing::random_spd(rng, d, 0.5));
    const auto mask = ParamMask::full(d);
    worst = std::max(worst, testing::max_rel(gram_matrix(p, mask), testing::fd_gram(p, mask)));
    worst = std::max(worst, testing::max_rel(force_vector(p, m, u, mask), testing::fd_force(p, m, u, mask)));
  }
  return {worst <= 1e-6, fmt("max rel error %.2e over 100 instances (tol 1e-6)", worst)};
}

Outcome element_oracle() {
  std::mt19937_64 rng(4051);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 2;
    const auto a = testing::random_gaussian(rng, d);
    const auto b = testing::random_gaussian(rng, d);
    const auto u = testing::random_potential(rng, d);
    const auto obs = testing::random_potential(rng, d, false);
    const MassMatrix m(testing::random_spd(rng, d, 0.5));
    worst = std::max(worst, rel(overlap(a, b), testing::quad_overlap(a, b)));
    worst = std::max(worst, rel(kinetic_element(a, b, m), testing::quad_kinetic(a, b, m)));
    worst = std::max(worst, rel(potential_element(a, b, u), testing::quad_observable(a, b, u)));
    worst = std::max(worst, rel(observable_element(a, b, obs), testing::quad_observable(a, b, obs)));
  }
  return {worst <= 1e-8, fmt("max rel error %.2e over 200 instances (tol 1e-8)", worst)};
}

// 7 -----------------------------------------------------------------------

struct FlowCheck {
  double worst_rate = 0.0;
  double worst_rise = 0.0;
  long points = 0;
};

/// d ln<lambda|lambda>/dtau from a Richardson central difference along the
/// flow direction, against -2 <H>/<lambda|lambda>.
void check_flow(const RunConfig& c, FlowCheck& out) {
  const auto ens = run_ensemble(c);
  const auto mask = c.mask();
  const double eps = c.integrator.gram_regularization;
  for (const auto& m : ens.members) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& cp : m.trajectory.checkpoints) {
      GaussianParam lam = cp.param;
      const auto rate = sym_eom_rhs(lam, ens.symmetry, m.sector, c.mass, c.potential, mask, eps).rate;
      lam.log_scale = 0.0;
      const Vector base = pack(lam);
      const double h = 1e-3 * (1.0 + base.cwiseAbs().maxCoeff()) / std::max(rate.cwiseAbs().maxCoeff(), 1e-300);
      auto log_norm = [&](double s) {
        const auto p = unpack(base + s * rate, lam.dim());
        return std::log(sym_overlap(p, p, ens.symmetry, m.sector));
      };
      const double slope =
          testing::richardson([&](double s) { return (log_norm(s) - log_norm(-s)) / (2.0 * s); }, h);
      const double n = sym_overlap(lam, lam, ens.symmetry, m.sector);
      const double r = sym_hamiltonian(lam, lam, ens.symmetry, m.sector, c.mass, c.potential) / n;
      out.worst_rate = std::max(out.worst_rate, std::abs(slope + 2.0 * r) / std::abs(2.0 * r));
      if (std::isfinite(prev)) out.worst_rise = std::max(out.worst_rise, (r - prev) / std::abs(prev));
      prev = r;
      ++out.points;
    }
  }
}

Outcome flow_identities() {
  FlowCheck f;
  const auto c1 = preset("fig1");
  const auto c2 = preset("fig2");
  check_flow(c1, f);
  check_flow(c2, f);
  const double tol = 10.0 * std::max(c1.integrator.rel_tol, c2.integrator.rel_tol);
  return {f.worst_rate <= tol && f.worst_rise <= tol,
          fmt("%.0f checkpoints: ", static_cast<double>(f.points)) + fmt("max rel norm-rate error %.2e", f.worst_rate) +
              fmt(", max rel Rayleigh rise %.2e", f.worst_rise) + fmt(" (tol %.0e)", tol)};
}

// 9 -----------------------------------------------------------------------

Outcome classical_limit() {
  auto c = preset("fig1");
  c.temperatures = {0.2, 10.0};
  const auto r = execute(c);
  const auto& g = r.output(Method::gauss).scan.rows;
  const auto& e = r.output(Method::ed).scan.rows;
  const auto& k = r.output(Method::classical).scan.rows;
  const double hot = rel(g[1].variances[0], k[1].variances[0]);
  const double gauss_cold = std::abs(g[0].variances[0] - e[0].variances[0]);
  const double classical_cold = std::abs(k[0].variances[0] - e[0].variances[0]);
  return {hot <= 0.02 && gauss_cold < classical_cold,
          fmt("kT=10 rel gap %.2e (tol 2e-2)", hot) + fmt("; kT=0.2 |gauss-ED| %.2e", gauss_cold) +
              fmt(" vs |classical-ED| %.2e", classical_cold)};
}

// 10 ----------------------------------------------------------------------

Outcome statistics_sanity() {
  const MassMatrix m2 = MassMatrix::scalar(2, 1.0);
  BuiltinParams hp;
  hp.dim = 2;
  const auto u = builtin_potential("harmonic", hp);
  const std::vector<double> temps = {0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0};
  const Vector lo = Vector::Constant(2, -8.0), hi = Vector::Constant(2, 8.0);
  const auto cps = checkpoints_for(temps);
  const auto ens = propagate_ensemble(build_grid(GridSpec::equidistant(lo, hi, {16, 16})), m2, u, cps.back(), cps, ParamMask::full(2), {},
                                      SymmetryAdapter::permutation(2, 1));
  Outcome o;
  double worst = 0.0;
  for (Sector s : {Sector::boson, Sector::fermion}) {
    Ensemble part = ens;
    std::erase_if(part.members, [&](const auto& m) { return m.sector != s; });
    EDConfig ec;
    ec.lower = Vector::Constant(2, -10.0);
    ec.upper = Vector::Constant(2, 10.0);
    ec.points = {81, 81};
    ec.statistics = s == Sector::boson ? PairStatistics::boson : PairStatistics::fermion;
    const auto spec = ed_solve(u, m2, ec);
    for (double kT : temps) {
      const double e = rel(thermal_energy(part, 1.0 / kT, m2, u), ed_thermal(spec, 1.0 / kT).energy);
      worst = std::max(worst, e);
      if (e > 0.05) {
        o.pass = false;
        o.detail += std::string(" ") + to_string(s) + fmt(" kT=%g", kT) + fmt(" %.2e", e);
      }
    }
    if (s == Sector::fermion) {
      std::vector<Vector> pts;
      std::vector<bool> diagonal;
      for (double a = -3.0; a <= 3.0; a += 0.25) {
        for (double b = -3.0; b <= 3.0; b += 0.25) {
          Vector x(2);
          x << a, b;
          pts.push_back(x);
          diagonal.push_back(a == b);
        }
      }
      double worst_diag = 0.0, mx = 0.0;
      for (double kT : temps) {
        const auto rho = density_profile(part, 1.0 / kT, pts);
        double peak = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          peak = std::max(peak, std::abs(rho[i]));
          if (diagonal[i]) diag = std::max(diag, std::abs(rho[i]));
        }
        worst_diag = std::max(worst_diag, diag / peak);
        mx = std::max(mx, peak);
      }
      if (!(worst_diag <= 1e-12) || !(mx > 0.0)) o.pass = false;
      o.detail = fmt("fermion diagonal rho/max %.2e (tol 1e-12)", worst_diag) + o.detail;
    }
  }
  o.detail = fmt("max rel energy error %.2e (tol 5e-2); ", worst) + o.detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "harmonic exactness", 10, harmonic_exactness},
      {2, "fig1 single well vs ED", 60, fig1_reproduction},
      {3, "fig2 double well vs ED", 60, fig2_reproduction},
      {4, "fig3 density vs ED", 30, fig3_reproduction},
      {5, "fig4 2D double well vs ED", 600, fig4_reproduction},
      {6, "derivatives vs finite differences", 30, derivative_correctness},
      {7, "variational flow identities", 0, flow_identities},
      {8, "elements vs quadrature", 60, element_oracle},
      {9, "classical limit", 0, classical_limit},
      {10, "boson and fermion statistics", 60, statistics_sanity},
  };
  const int selected = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (const auto& c : criteria) {
    if (selected != 0 && c.id != selected) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.pass = false;
      o.detail += fmt("; runtime over %.0f s", c.time_limit);
    }
    std::printf("criterion %2d %-34s %s  %s  [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
