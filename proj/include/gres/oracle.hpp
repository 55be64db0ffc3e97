// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <lapacke.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gres/errors.hpp"
#include "gres/potential.hpp"
#include "gres/scan.hpp"

namespace gres {

// Exact diagonalization on a sinc-DVR grid -------------------------------------

enum class PairStatistics { none, boson, fermion };

struct EDConfig {
  Vector lower;             // box per dimension; both ends are grid points
  Vector upper;
  std::vector<int> points;  // grid points per dimension
  int check_states = 20;    // lowest states whose residual and edge weight are checked
  PairStatistics statistics = PairStatistics::none;  // D = 2 only: exchange of x1 and x2

  void validate() const {
    const auto d = lower.size();
    if (d < 1 || d > 2) throw ValidationError("exact diagonalization supports D = 1 or 2");
    if (upper.size() != d || points.size() != static_cast<std::size_t>(d)) {
      throw ValidationError("ED box and point counts must be given for every dimension");
    }
    for (int i = 0; i < d; ++i) {
      if (!(lower[i] < upper[i])) throw ValidationError("ED box needs min < max");
      if (points[i] < 3) throw ValidationError("ED grid needs at least 3 points per dimension");
    }
    if (check_states < 0) throw ValidationError("ED check_states must be non-negative");
    if (statistics != PairStatistics::none) {
      if (d != 2) throw ValidationError("pair statistics need a 2-dimensional problem");
      if (lower[0] != lower[1] || upper[0] != upper[1] || points[0] != points[1]) {
        throw ValidationError("pair statistics need identical grids for both particles");
      }
    }
  }
};

/// Eigenpairs on the grid. Eigenvectors are unit vectors of grid amplitudes,
/// so psi_n(x_i) = c_in / sqrt(cell volume).
struct SpectralData {
  int dim = 1;
  std::vector<Vector> axes;  // 1D grids
  Matrix points;             // one row per grid point, first coordinate slowest
  double cell = 1.0;         // grid cell volume
  Vector energies;           // ascending
  Matrix vectors;            // grid point x state

  int size() const { return static_cast<int>(points.rows()); }
  int states() const { return static_cast<int>(energies.size()); }
};

namespace detail {

/// Colbert-Miller kinetic matrix for one dimension with spacing dx.
inline Matrix sinc_dvr_kinetic(int n, double dx, double mass) {
  Matrix t(n, n);
  const double pre = 1.0 / (2.0 * mass * dx * dx);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int k = i - j;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      t(i, j) = pre * sign * (k == 0 ? std::numbers::pi * std::numbers::pi / 3.0 : 2.0 / (k * k));
    }
  }
  return t;
}

inline void symmetric_eigensolve(Matrix& a, Vector& w) {
  const int n = static_cast<int>(a.rows());
  w.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data());
  if (info != 0) throw NumericalError("symmetric eigensolver failed (info " + std::to_string(info) + ")");
}

}  // namespace detail

/// Diagonalizes H = T + U on a sinc-DVR grid. M must be diagonal.
inline SpectralData ed_solve(const Potential& u, const MassMatrix& mass, const EDConfig& config) {
  config.validate();
  const int d = static_cast<int>(config.lower.size());
  if (u.dim() != d || mass.dim() != d) throw ValidationError("ED dimension mismatch");
  if (!mass.is_diagonal()) throw ValidationError("ED needs a diagonal mass matrix");

  SpectralData s;
  s.dim = d;
  std::vector<double> dx(d);
  for (int i = 0; i < d; ++i) {
    const int n = config.points[i];
    dx[i] = (config.upper[i] - config.lower[i]) / (n - 1);
    s.axes.push_back(Vector::LinSpaced(n, config.lower[i], config.upper[i]));
    s.cell *= dx[i];
  }
  const int nx = config.points[0];
  const int ny = d == 2 ? config.points[1] : 1;
  const int n = nx * ny;
  s.points.resize(n, d);
  Matrix h = Matrix::Zero(n, n);
  const Matrix tx = detail::sinc_dvr_kinetic(nx, dx[0], mass.matrix()(0, 0));
  if (d == 1) {
    h = tx;
    for (int i = 0; i < nx; ++i) s.points(i, 0) = s.axes[0][i];
  } else {
    const Matrix ty = detail::sinc_dvr_kinetic(ny, dx[1], mass.matrix()(1, 1));
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const int a = i * ny + j;
        s.points(a, 0) = s.axes[0][i];
        s.points(a, 1) = s.axes[1][j];
        for (int k = 0; k < nx; ++k) h(a, k * ny + j) += tx(i, k);
        for (int l = 0; l < ny; ++l) h(a, i * ny + l) += ty(j, l);
      }
    }
  }
  for (int a = 0; a < n; ++a) h(a, a) += u.evaluate(s.points.row(a).transpose());

  // Exchange-(anti)symmetric subspace: each pair state touches at most two
  // grid points, so the projection is done entry by entry.
  const Matrix h_full = h;
  Matrix a;
  std::vector<std::array<std::pair<int, double>, 2>> basis;
  if (config.statistics != PairStatistics::none) {
    const bool fermion = config.statistics == PairStatistics::fermion;
    const double r = std::sqrt(0.5);
    for (int i = 0; i < nx; ++i) {
      for (int j = fermion ? i + 1 : i; j < nx; ++j) {
        if (i == j) {
          basis.push_back({{{i * ny + j, 1.0}, {i * ny + j, 0.0}}});
        } else {
          basis.push_back({{{i * ny + j, r}, {j * ny + i, fermion ? -r : r}}});
        }
      }
    }
    const int nb = static_cast<int>(basis.size());
    a.resize(nb, nb);
    for (int k = 0; k < nb; ++k) {
      for (int l = k; l < nb; ++l) {
        double v = 0.0;
        for (const auto& [pi, bi] : basis[k]) {
          for (const auto& [pj, bj] : basis[l]) v += bi * bj * h(pi, pj);
        }
        a(k, l) = a(l, k) = v;
      }
    }
  } else {
    a = h;
  }
  Vector w;
  detail::symmetric_eigensolve(a, w);
  s.energies = w;
  if (basis.empty()) {
    s.vectors = std::move(a);
  } else {
    s.vectors = Matrix::Zero(n, a.cols());
    for (std::size_t k = 0; k < basis.size(); ++k) {
      for (const auto& [pi, bi] : basis[k]) s.vectors.row(pi) += bi * a.row(static_cast<Eigen::Index>(k));
    }
  }

  const int k = std::min(config.check_states, s.states());
  const Matrix c = s.vectors.leftCols(k);
  const Matrix residual = h_full * c - c * s.energies.head(k).asDiagonal();
  for (int m = 0; m < k; ++m) {
    if (residual.col(m).norm() > 1e-8 * std::max(1.0, std::abs(s.energies[m]))) {
      throw NumericalError("ED eigenpair " + std::to_string(m) + " fails the residual check");
    }
  }
  if (k > 0 && (c.transpose() * c - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("ED eigenvectors are not orthonormal");
  }
  // Low states must vanish at the box edges, or the box is too small.
  for (int m = 0; m < k; ++m) {
    double edge = 0.0;
    for (int p = 0; p < n; ++p) {
      bool on_edge = false;
      for (int i = 0; i < d; ++i) {
        on_edge |= s.points(p, i) == config.lower[i] || s.points(p, i) == config.upper[i];
      }
      if (on_edge) edge = std::max(edge, c(p, m) * c(p, m));
    }
    if (edge > 1e-10) {
      throw ValidationError("ED state " + std::to_string(m) +
                            " does not decay inside the box; enlarge the box");
    }
  }
  return s;
}

/// Re-solves on a grid with doubled density per dimension and compares the
/// lowest `states` eigenvalues.
inline double ed_refinement_change(const Potential& u, const MassMatrix& mass,
                                   const EDConfig& config, int states) {
  const auto coarse = ed_solve(u, mass, config);
  EDConfig fine = config;
  for (auto& p : fine.points) p = 2 * p - 1;
  const auto refined = ed_solve(u, mass, fine);
  double change = 0.0;
  for (int m = 0; m < std::min({states, coarse.states(), refined.states()}); ++m) {
    change = std::max(change, std::abs(coarse.energies[m] - refined.energies[m]) /
                                  std::max(1.0, std::abs(refined.energies[m])));
  }
  return change;
}

/// Throws with a refinement hint if the lowest eigenvalues move by more than
/// `tol` (relative) under grid doubling.
inline void ed_check_converged(const Potential& u, const MassMatrix& mass, const EDConfig& config,
                               int states, double tol) {
  const double change = ed_refinement_change(u, mass, config, states);
  if (change > tol) {
    throw NumericalError("ED spectrum not converged (relative change " + format_real(change) +
                         " under grid doubling); increase the grid points or the box");
  }
}

struct EDThermal {
  double log_z = 0.0;
  double z = 0.0;
  std::vector<double> expectations;
  double energy = 0.0;
  Vector density;  // rho at each grid point
};

/// Boltzmann averages over the retained spectrum. The weight of the highest
/// retained state relative to Z bounds the truncation error.
inline EDThermal ed_thermal(const SpectralData& s, double beta,
                            const std::vector<Potential>& observables = {},
                            double truncation_tol = 1e-10) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  const int ns = s.states();
  const double e0 = s.energies[0];
  Vector p(ns);
  for (int m = 0; m < ns; ++m) p[m] = std::exp(-beta * (s.energies[m] - e0));
  const double zs = p.sum();
  if (p[ns - 1] / zs > truncation_tol) {
    throw ValidationError("ED spectrum truncated too early for beta=" + format_real(beta) +
                          " (retain more states or use a larger grid)");
  }
  p /= zs;
  EDThermal out;
  out.log_z = std::log(zs) - beta * e0;
  out.z = std::exp(out.log_z);
  out.energy = p.dot(s.energies);
  const Matrix& c = s.vectors;
  out.density = (c.array().square().matrix() * p) / s.cell;
  for (const auto& a : observables) {
    double v = 0.0;
    for (int i = 0; i < s.size(); ++i) v += a.evaluate(s.points.row(i).transpose()) * out.density[i];
    out.expectations.push_back(v * s.cell);
  }
  return out;
}

/// rho(x) off the grid through the sinc interpolant of every thermally
/// populated eigenvector.
inline std::vector<double> ed_density(const SpectralData& s, double beta,
                                      const std::vector<Vector>& points) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  int k = 0;
  while (k < s.states() && std::exp(-beta * (s.energies[k] - s.energies[0])) > 1e-18) ++k;
  Vector p(k);
  for (int m = 0; m < k; ++m) p[m] = std::exp(-beta * (s.energies[m] - s.energies[0]));
  p /= (-beta * (s.energies.array() - s.energies[0])).exp().sum();
  const Matrix c = s.vectors.leftCols(k);
  const Matrix r = c * p.asDiagonal() * c.transpose();

  auto sinc_row = [](const Vector& axis, double x) {
    const double dx = axis[1] - axis[0];
    Vector t(axis.size());
    for (int i = 0; i < axis.size(); ++i) {
      const double u = std::numbers::pi * (x - axis[i]) / dx;
      t[i] = std::abs(u) < 1e-12 ? 1.0 : std::sin(u) / u;
    }
    return t;
  };
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    if (x.size() != s.dim) throw ValidationError("density point dimension mismatch");
    Vector theta = sinc_row(s.axes[0], x[0]);
    if (s.dim == 2) {
      const Vector ty = sinc_row(s.axes[1], x[1]);
      Vector full(theta.size() * ty.size());
      for (int i = 0; i < theta.size(); ++i) full.segment(i * ty.size(), ty.size()) = theta[i] * ty;
      theta = std::move(full);
    }
    out.push_back(theta.dot(r * theta) / s.cell);
  }
  return out;
}

inline ThermalScan ed_scan(const SpectralData& s, const std::vector<double>& temperatures,
                           const std::vector<NamedObservable>& observables, bool energy = false) {
  ThermalScan scan;
  scan.dim = s.dim;
  scan.has_energy = energy;
  std::vector<Potential> ops;
  for (const auto& o : observables) {
    scan.observable_names.push_back(o.name);
    ops.push_back(o.op);
  }
  const std::size_t at = ops.size();
  for (int i = 0; i < s.dim; ++i) {
    ops.push_back(coordinate_power(s.dim, i, 1));
    ops.push_back(coordinate_power(s.dim, i, 2));
  }
  for (double kT : temperatures) {
    const double beta = 1.0 / kT;
    const auto t = ed_thermal(s, beta, ops);
    ScanRow row;
    row.kT = kT;
    row.beta = beta;
    row.z = t.z;
    row.values.assign(t.expectations.begin(), t.expectations.begin() + at);
    row.energy = t.energy;
    for (int i = 0; i < s.dim; ++i) {
      const double m1 = t.expectations[at + 2 * i];
      row.variances.push_back(t.expectations[at + 2 * i + 1] - m1 * m1);
    }
    scan.rows.push_back(std::move(row));
  }
  return scan;
}

// Classical Boltzmann statistics ----------------------------------------------

struct ClassicalConfig {
  Vector lower;
  Vector upper;
  double tolerance = 1e-12;   // relative tolerance of each adaptive integral
  int max_depth = 15;
  double tail_tol = 1e-10;    // allowed Boltzmann mass outside the box
};

struct ClassicalThermal {
  double log_z = 0.0;
  double z = 0.0;                    // includes the momentum integral
  std::vector<double> expectations;  // position observables
  double energy = 0.0;               // <U> + D / (2 beta)
};

namespace detail {

inline double adaptive_box(const std::function<double(const Vector&)>& f, const Vector& lo,
                           const Vector& hi, double tol, int depth) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const int d = static_cast<int>(lo.size());
  if (d == 1) {
    Vector x(1);
    return GK::integrate([&](double t) { x[0] = t; return f(x); }, lo[0], hi[0], depth, tol);
  }
  Vector x(2);
  return GK::integrate(
      [&](double s) {
        return GK::integrate([&](double t) { x[0] = s; x[1] = t; return f(x); }, lo[1], hi[1],
                             depth, tol);
      },
      lo[0], hi[0], depth, tol);
}

}  // namespace detail

/// <A>_cl = int A e^{-beta U} / int e^{-beta U}; the mass matrix only enters Z.
inline ClassicalThermal classical_thermal(const Potential& u, const MassMatrix& mass, double beta,
                                          const std::vector<Potential>& observables,
                                          const ClassicalConfig& config) {
  const int d = u.dim();
  if (d < 1 || d > 2) throw ValidationError("classical oracle supports D = 1 or 2");
  if (config.lower.size() != d || config.upper.size() != d) {
    throw ValidationError("classical box must match the potential dimension");
  }
  for (int i = 0; i < d; ++i) {
    if (!(config.lower[i] < config.upper[i])) throw ValidationError("classical box needs min < max");
  }
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");

  // Shift by the smallest potential value on a coarse grid to keep the
  // Boltzmann factor in range.
  double u_min = std::numeric_limits<double>::infinity();
  {
    const int n = d == 1 ? 2001 : 201;
    Vector x(d);
    for (int i = 0; i < n; ++i) {
      x[0] = config.lower[0] + (config.upper[0] - config.lower[0]) * i / (n - 1);
      if (d == 1) {
        u_min = std::min(u_min, u.evaluate(x));
        continue;
      }
      for (int j = 0; j < n; ++j) {
        x[1] = config.lower[1] + (config.upper[1] - config.lower[1]) * j / (n - 1);
        u_min = std::min(u_min, u.evaluate(x));
      }
    }
  }
  auto boltz = [&](const Vector& x) { return std::exp(-beta * (u.evaluate(x) - u_min)); };
  const double mass_in = detail::adaptive_box(boltz, config.lower, config.upper, config.tolerance,
                                              config.max_depth);
  const Vector pad = 0.5 * (config.upper - config.lower);
  const double mass_big = detail::adaptive_box(boltz, config.lower - pad, config.upper + pad,
                                               config.tolerance, config.max_depth);
  if ((mass_big - mass_in) / mass_big > config.tail_tol) {
    throw ValidationError("classical box misses Boltzmann mass " +
                          format_real((mass_big - mass_in) / mass_big) + " at beta=" +
                          format_real(beta) + "; enlarge the box");
  }
  ClassicalThermal out;
  out.log_z = std::log(mass_in) - beta * u_min +
              0.5 * (mass.log_det() - d * std::log(2.0 * std::numbers::pi * beta));
  out.z = std::exp(out.log_z);
  for (const auto& a : observables) {
    const double num = detail::adaptive_box([&](const Vector& x) { return a.evaluate(x) * boltz(x); },
                                            config.lower, config.upper, config.tolerance,
                                            config.max_depth);
    out.expectations.push_back(num / mass_in);
  }
  const double mean_u = detail::adaptive_box([&](const Vector& x) { return u.evaluate(x) * boltz(x); },
                                             config.lower, config.upper, config.tolerance,
                                             config.max_depth) /
                        mass_in;
  out.energy = mean_u + 0.5 * d / beta;
  return out;
}

/// e^{-beta U(x)} / int e^{-beta U} at the given points.
inline std::vector<double> classical_density(const Potential& u, double beta,
                                             const std::vector<Vector>& points,
                                             const ClassicalConfig& config) {
  const auto t = classical_thermal(u, MassMatrix::scalar(u.dim(), 1.0), beta, {}, config);
  // log_z carries the unit-mass momentum factor; take it back out
  const double log_q = t.log_z - 0.5 * (-u.dim() * std::log(2.0 * std::numbers::pi * beta));
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(std::exp(-beta * u.evaluate(x) - log_q));
  return out;
}

inline ThermalScan classical_scan(const Potential& u, const MassMatrix& mass,
                                  const std::vector<double>& temperatures,
                                  const std::vector<NamedObservable>& observables,
                                  const ClassicalConfig& config, bool energy = false) {
  const int d = u.dim();
  ThermalScan scan;
  scan.dim = d;
  scan.has_energy = energy;
  std::vector<Potential> ops;
  for (const auto& o : observables) {
    scan.observable_names.push_back(o.name);
    ops.push_back(o.op);
  }
  const std::size_t at = ops.size();
  for (int i = 0; i < d; ++i) {
    ops.push_back(coordinate_power(d, i, 1));
    ops.push_back(coordinate_power(d, i, 2));
  }
  for (double kT : temperatures) {
    const double beta = 1.0 / kT;
    const auto t = classical_thermal(u, mass, beta, ops, config);
    ScanRow row;
    row.kT = kT;
    row.beta = beta;
    row.z = t.z;
    row.values.assign(t.expectations.begin(), t.expectations.begin() + at);
    row.energy = t.energy;
    for (int i = 0; i < d; ++i) {
      const double m1 = t.expectations[at + 2 * i];
      row.variances.push_back(t.expectations[at + 2 * i + 1] - m1 * m1);
    }
    scan.rows.push_back(std::move(row));
  }
  return scan;
}

// Harmonic oscillator in closed form ------------------------------------------

struct HarmonicThermal {
  double z = 0.0;
  double x2 = 0.0;
  double energy = 0.0;
  double density_width = 0.0;  // rho(x) = sqrt(a / pi) exp(-a x^2)

  double density(double x) const {
    return std::sqrt(density_width / std::numbers::pi) * std::exp(-density_width * x * x);
  }
};

inline HarmonicThermal harmonic_analytic(double omega, double mass, double beta) {
  if (!(omega > 0.0) || !(mass > 0.0) || !(beta > 0.0)) {
    throw ValidationError("harmonic oracle needs omega, mass, beta > 0");
  }
  const double h = 0.5 * beta * omega;
  HarmonicThermal out;
  out.z = 1.0 / (2.0 * std::sinh(h));
  out.x2 = 1.0 / (2.0 * mass * omega * std::tanh(h));
  out.energy = 0.5 * omega / std::tanh(h);
  out.density_width = mass * omega * std::tanh(h);
  return out;
}

}  // namespace gres
