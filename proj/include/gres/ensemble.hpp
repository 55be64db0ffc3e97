// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gres/errors.hpp"
#include "gres/gaussmath.hpp"
#include "gres/scan.hpp"
#include "gres/symmetry.hpp"
#include "gres/varprop.hpp"

namespace gres {

enum class GridMode { equidistant, explicit_points, uniform_random };

struct GridSpec {
  GridMode mode = GridMode::equidistant;
  Vector lower;             // box (equidistant, uniform_random)
  Vector upper;
  std::vector<int> counts;  // equidistant, per dimension
  std::vector<Vector> points;   // explicit
  std::vector<double> weights;  // explicit; empty means unit weights
  long samples = 0;             // uniform_random
  std::uint64_t seed = 0;

  static GridSpec equidistant(Vector lo, Vector hi, std::vector<int> n) {
    GridSpec g;
    g.mode = GridMode::equidistant;
    g.lower = std::move(lo);
    g.upper = std::move(hi);
    g.counts = std::move(n);
    return g;
  }

  static GridSpec explicit_points(std::vector<Vector> pts, std::vector<double> w = {}) {
    GridSpec g;
    g.mode = GridMode::explicit_points;
    g.points = std::move(pts);
    g.weights = std::move(w);
    return g;
  }

  static GridSpec uniform_random(Vector lo, Vector hi, long n, std::uint64_t seed) {
    GridSpec g;
    g.mode = GridMode::uniform_random;
    g.lower = std::move(lo);
    g.upper = std::move(hi);
    g.samples = n;
    g.seed = seed;
    return g;
  }

  int dim() const {
    if (mode == GridMode::explicit_points) return points.empty() ? 0 : static_cast<int>(points[0].size());
    return static_cast<int>(lower.size());
  }

  long size() const {
    switch (mode) {
      case GridMode::equidistant: {
        long n = 1;
        for (int c : counts) n *= c;
        return n;
      }
      case GridMode::explicit_points: return static_cast<long>(points.size());
      case GridMode::uniform_random: return samples;
    }
    return 0;
  }

  void validate() const {
    if (mode == GridMode::explicit_points) {
      if (points.empty()) throw ValidationError("explicit grid has no points");
      for (const auto& p : points) {
        if (p.size() != points[0].size() || p.size() == 0) {
          throw ValidationError("explicit grid points have inconsistent dimension");
        }
        if (!p.allFinite()) throw ValidationError("explicit grid point is not finite");
      }
      if (!weights.empty()) {
        if (weights.size() != points.size()) {
          throw ValidationError("explicit grid needs one weight per point");
        }
        for (double w : weights) {
          if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("grid weights must be positive");
        }
      }
      return;
    }
    if (lower.size() == 0 || lower.size() != upper.size()) {
      throw ValidationError("grid bounds must be given for every dimension");
    }
    for (int i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
        throw ValidationError("grid bounds must be finite with min < max in every dimension");
      }
    }
    if (mode == GridMode::equidistant) {
      if (counts.size() != static_cast<std::size_t>(lower.size())) {
        throw ValidationError("grid needs a point count for every dimension");
      }
      for (int c : counts) {
        if (c < 1) throw ValidationError("grid counts must be >= 1");
      }
    } else if (samples < 1) {
      throw ValidationError("random grid needs at least one sample");
    }
  }
};

struct GridPoint {
  Vector position;
  double weight = 1.0;
};

/// Equidistant grids use cell centers, so every weight is the cell volume.
/// The first coordinate varies slowest.
inline std::vector<GridPoint> build_grid(const GridSpec& spec) {
  spec.validate();
  std::vector<GridPoint> out;
  const int d = spec.dim();
  switch (spec.mode) {
    case GridMode::equidistant: {
      Vector h(d);
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        h[i] = (spec.upper[i] - spec.lower[i]) / spec.counts[i];
        w *= h[i];
      }
      std::vector<int> idx(d, 0);
      const long n = spec.size();
      out.reserve(n);
      for (long k = 0; k < n; ++k) {
        Vector x(d);
        for (int i = 0; i < d; ++i) x[i] = spec.lower[i] + (idx[i] + 0.5) * h[i];
        out.push_back({std::move(x), w});
        for (int i = d - 1; i >= 0; --i) {
          if (++idx[i] < spec.counts[i]) break;
          idx[i] = 0;
        }
      }
      break;
    }
    case GridMode::explicit_points:
      for (std::size_t k = 0; k < spec.points.size(); ++k) {
        out.push_back({spec.points[k], spec.weights.empty() ? 1.0 : spec.weights[k]});
      }
      break;
    case GridMode::uniform_random: {
      std::mt19937_64 rng(spec.seed);
      double volume = 1.0;
      for (int i = 0; i < d; ++i) volume *= spec.upper[i] - spec.lower[i];
      const double w = volume / static_cast<double>(spec.samples);
      out.reserve(spec.samples);
      for (long k = 0; k < spec.samples; ++k) {
        Vector x(d);
        for (int i = 0; i < d; ++i) {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          x[i] = spec.lower[i] + u * (spec.upper[i] - spec.lower[i]);
        }
        out.push_back({std::move(x), w});
      }
      break;
    }
  }
  return out;
}

enum class FailurePolicy { abort, drop };

struct WeightedTrajectory {
  Vector position;  // q_n
  double weight = 1.0;
  Sector sector = Sector::none;
  Trajectory trajectory;
};

struct DroppedMember {
  Vector position;
  Sector sector = Sector::none;
  std::string reason;
};

struct Ensemble {
  int dim = 1;
  SymmetryAdapter symmetry;
  std::vector<WeightedTrajectory> members;
  std::vector<DroppedMember> dropped;  // failed and removed under FailurePolicy::drop
  std::vector<DroppedMember> empty;    // sector projection of the start state is zero
};

struct EnsembleOptions {
  FailurePolicy policy = FailurePolicy::abort;
  int workers = 0;  // 0: GRES_WORKERS or hardware concurrency
  std::vector<Sector> sectors;  // empty: every sector of the adapter's group
};

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GRES_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::vector<Sector> default_sectors(const SymmetryAdapter& adapter) {
  switch (adapter.group()) {
    case SymmetryGroup::none: return {Sector::none};
    case SymmetryGroup::reflection: return {Sector::even, Sector::odd};
    case SymmetryGroup::permutation: return {Sector::boson, Sector::fermion};
  }
  return {};
}

/// tau = beta / 2 for every temperature, sorted and deduplicated.
inline std::vector<double> checkpoints_for(const std::vector<double>& temperatures) {
  std::vector<double> taus;
  for (double kT : temperatures) {
    if (!(kT > 0.0) || !std::isfinite(kT)) throw ValidationError("temperatures must be positive");
    taus.push_back((1.0 / kT) / 2.0);
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  return taus;
}

namespace detail {

/// Relative sector norm below which a start state counts as outside the sector.
inline constexpr double kEmptySector = 1e-12;

enum class FailureKind { none, validation, numerical, collapse, other };

struct MemberOutcome {
  FailureKind kind = FailureKind::none;
  std::string message;
  bool empty = false;
  Trajectory trajectory;
};

inline std::string format_position(const Vector& q) {
  std::string s = "(";
  for (int i = 0; i < q.size(); ++i) s += (i ? ", " : "") + format_real(q[i]);
  return s + ")";
}

[[noreturn]] inline void rethrow(FailureKind kind, const std::string& msg) {
  switch (kind) {
    case FailureKind::validation: throw ValidationError(msg);
    case FailureKind::collapse: throw SectorCollapse(msg);
    case FailureKind::numerical: throw NumericalError(msg);
    default: throw Error(msg);
  }
}

}  // namespace detail

/// Propagates every grid point (in every requested sector) from a
/// delta-like start through the checkpoints, which must lie in (tau0, tau_max].
inline Ensemble propagate_ensemble(const std::vector<GridPoint>& grid, const MassMatrix& mass,
                                   const Potential& u, double tau_max,
                                   const std::vector<double>& checkpoints, const ParamMask& mask,
                                   const IntegratorConfig& config, const SymmetryAdapter& adapter,
                                   const EnsembleOptions& options = {}) {
  config.validate();
  if (grid.empty()) throw ValidationError("ensemble grid is empty");
  const int d = static_cast<int>(grid[0].position.size());
  if (mass.dim() != d || u.dim() != d || mask.dim() != d || adapter.dim() != d) {
    throw ValidationError("grid, mass, potential, mask and symmetry dimensions disagree");
  }
  for (const auto& g : grid) {
    if (g.position.size() != d) throw ValidationError("grid points have inconsistent dimension");
    if (!(g.weight > 0.0)) throw ValidationError("grid weights must be positive");
  }
  const double tau0 = config.initial_time;
  if (!(tau_max > tau0)) throw ValidationError("tau_max must exceed the initial time");
  std::vector<double> targets;
  for (double t : checkpoints) {
    if (!(t > tau0) || t > tau_max * (1.0 + 1e-12)) {
      throw ValidationError("checkpoint tau=" + format_real(t) + " outside (tau0, tau_max]");
    }
    targets.push_back(t);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  const std::vector<Sector> sectors =
      options.sectors.empty() ? default_sectors(adapter) : options.sectors;
  for (Sector s : sectors) adapter.check_sector(s);
  if (adapter.group() != SymmetryGroup::none) adapter.check_invariant(mass, u);

  struct Task {
    std::size_t grid_index;
    Sector sector;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (Sector s : sectors) tasks.push_back({i, s});
  }
  std::vector<detail::MemberOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto run_task = [&](std::size_t k) {
    const auto& task = tasks[k];
    auto& out = outcomes[k];
    const Vector& q = grid[task.grid_index].position;
    const std::string who = "member " + std::to_string(task.grid_index) + " at q=" +
                            detail::format_position(q) + " (" + to_string(task.sector) + "): ";
    try {
      const GaussianParam start = init_delta(q, mass, u, tau0);
      if (task.sector != Sector::none &&
          std::abs(relative_sector_norm(start, adapter, task.sector)) < detail::kEmptySector) {
        out.empty = true;
        return;
      }
      out.trajectory = sym_propagate(start, tau0, targets, adapter, task.sector, mass, u, mask, config);
    } catch (const SectorCollapse& e) {
      out.kind = detail::FailureKind::collapse;
      out.message = who + e.what();
    } catch (const ValidationError& e) {
      out.kind = detail::FailureKind::validation;
      out.message = who + e.what();
    } catch (const NumericalError& e) {
      out.kind = detail::FailureKind::numerical;
      out.message = who + e.what();
    } catch (const std::exception& e) {
      out.kind = detail::FailureKind::other;
      out.message = who + e.what();
    }
    if (out.kind != detail::FailureKind::none && options.policy == FailurePolicy::abort) {
      stop = true;
    }
  };

  const int workers = std::min<int>(worker_count(options.workers), static_cast<int>(tasks.size()));
  auto worker = [&] {
    for (;;) {
      if (stop) return;
      const std::size_t k = next++;
      if (k >= tasks.size()) return;
      run_task(k);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Ensemble ens;
  ens.dim = d;
  ens.symmetry = adapter;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    auto& out = outcomes[k];
    const auto& g = grid[tasks[k].grid_index];
    if (out.kind != detail::FailureKind::none) {
      if (options.policy == FailurePolicy::abort) detail::rethrow(out.kind, out.message);
      std::cerr << "warning: dropping " << out.message << "\n";
      ens.dropped.push_back({g.position, tasks[k].sector, out.message});
      continue;
    }
    if (out.empty) {
      ens.empty.push_back({g.position, tasks[k].sector, "empty sector"});
      continue;
    }
    ens.members.push_back({g.position, g.weight, tasks[k].sector, std::move(out.trajectory)});
  }
  return ens;
}

inline Ensemble propagate_ensemble(const std::vector<GridPoint>& grid, const MassMatrix& mass,
                                   const Potential& u, double tau_max,
                                   const std::vector<double>& checkpoints, const ParamMask& mask,
                                   const IntegratorConfig& config = {},
                                   const EnsembleOptions& options = {}) {
  if (grid.empty()) throw ValidationError("ensemble grid is empty");
  return propagate_ensemble(grid, mass, u, tau_max, checkpoints, mask, config,
                            SymmetryAdapter::none(static_cast<int>(grid[0].position.size())),
                            options);
}

// Assembly -------------------------------------------------------------------

namespace detail {

/// Member state at beta/2 rescaled to unit plain norm, with the log of the
/// factor (weight, trace factor and norm) that was taken out.
struct ScaledMember {
  GaussianParam lambda;
  double log_factor = 0.0;
  Sector sector = Sector::none;
};

inline std::vector<ScaledMember> scaled_members(const Ensemble& ens, const SymmetryAdapter& adapter,
                                                double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
  const double tau = beta / 2.0;
  const double log_tf = std::log(adapter.trace_factor());
  std::vector<ScaledMember> out;
  out.reserve(ens.members.size());
  for (const auto& m : ens.members) {
    GaussianParam lam = m.trajectory.at(tau).param;
    const double self = log_overlap(lam, lam);
    lam.log_scale -= 0.5 * self;
    out.push_back({std::move(lam), std::log(m.weight) + self + log_tf, m.sector});
  }
  return out;
}

inline double max_log(const std::vector<ScaledMember>& ms) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& m : ms) mx = std::max(mx, m.log_factor);
  return mx;
}

}  // namespace detail

struct Assembly {
  double log_z = 0.0;
  double z = 0.0;
  std::vector<double> expectations;  // per observable
  std::vector<double> density;       // per density point
};

/// Z, observables and diagonal density for the ensemble under `adapter`.
/// Each member contributes w_n * c * <lambda_s|A|lambda_s> with c the trace
/// factor of the group; sectors simply add.
inline Assembly sym_assemble(const Ensemble& ens, const SymmetryAdapter& adapter, double beta,
                             const std::vector<Potential>& observables = {},
                             const std::vector<Vector>& density_points = {}) {
  if (ens.members.empty()) throw ValidationError("ensemble has no members");
  const auto ms = detail::scaled_members(ens, adapter, beta);
  const double shift = detail::max_log(ms);
  double zs = 0.0;
  std::vector<double> num(observables.size(), 0.0);
  std::vector<double> rho(density_points.size(), 0.0);
  for (const auto& m : ms) {
    const double f = std::exp(m.log_factor - shift);
    zs += f * sym_overlap(m.lambda, m.lambda, adapter, m.sector);
    for (std::size_t k = 0; k < observables.size(); ++k) {
      num[k] += f * sym_observable(m.lambda, m.lambda, adapter, m.sector, observables[k]);
    }
    for (std::size_t k = 0; k < density_points.size(); ++k) {
      const double psi = sym_wavefunction(m.lambda, density_points[k], adapter, m.sector);
      rho[k] += f * psi * psi;
    }
  }
  if (!(zs > 0.0)) throw NumericalError("partition function is not positive");
  Assembly out;
  out.log_z = std::log(zs) + shift;
  out.z = std::exp(out.log_z);
  for (double v : num) out.expectations.push_back(v / zs);
  for (double v : rho) out.density.push_back(v / zs);
  return out;
}

inline double log_partition_function(const Ensemble& ens, double beta) {
  return sym_assemble(ens, ens.symmetry, beta).log_z;
}

/// Z = sum_n w_n <lambda_n(beta/2)|lambda_n(beta/2)>; beta/2 must be a checkpoint.
inline double partition_function(const Ensemble& ens, double beta) {
  return sym_assemble(ens, ens.symmetry, beta).z;
}

inline double expectation(const Ensemble& ens, double beta, const Potential& a) {
  return sym_assemble(ens, ens.symmetry, beta, {a}).expectations[0];
}

inline std::vector<double> density_profile(const Ensemble& ens, double beta,
                                           const std::vector<Vector>& points) {
  return sym_assemble(ens, ens.symmetry, beta, {}, points).density;
}

/// <H> = Z^-1 sum_n w_n <lambda_n|H|lambda_n>.
inline double thermal_energy(const Ensemble& ens, double beta, const MassMatrix& mass,
                             const Potential& u) {
  const auto ms = detail::scaled_members(ens, ens.symmetry, beta);
  const double shift = detail::max_log(ms);
  double zs = 0.0, hs = 0.0;
  for (const auto& m : ms) {
    const double f = std::exp(m.log_factor - shift);
    zs += f * sym_overlap(m.lambda, m.lambda, ens.symmetry, m.sector);
    hs += f * sym_hamiltonian(m.lambda, m.lambda, ens.symmetry, m.sector, mass, u);
  }
  return hs / zs;
}

struct ScanOptions {
  bool energy = false;  // needs mass and potential
  const MassMatrix* mass = nullptr;
  const Potential* potential = nullptr;
};

inline ThermalScan thermal_scan(const Ensemble& ens, const std::vector<double>& temperatures,
                                const std::vector<NamedObservable>& observables,
                                const ScanOptions& options = {}) {
  if (options.energy && (!options.mass || !options.potential)) {
    throw ValidationError("thermal energy needs the mass matrix and potential");
  }
  ThermalScan scan;
  scan.dim = ens.dim;
  scan.has_energy = options.energy;
  std::vector<Potential> ops;
  for (const auto& o : observables) {
    scan.observable_names.push_back(o.name);
    ops.push_back(o.op);
  }
  const std::size_t moments_at = ops.size();
  for (int i = 0; i < ens.dim; ++i) {
    ops.push_back(coordinate_power(ens.dim, i, 1));
    ops.push_back(coordinate_power(ens.dim, i, 2));
  }
  for (double kT : temperatures) {
    if (!(kT > 0.0)) throw ValidationError("temperatures must be positive");
    const double beta = 1.0 / kT;
    const auto a = sym_assemble(ens, ens.symmetry, beta, ops);
    ScanRow row;
    row.kT = kT;
    row.beta = beta;
    row.z = a.z;
    row.values.assign(a.expectations.begin(), a.expectations.begin() + moments_at);
    for (int i = 0; i < ens.dim; ++i) {
      const double m1 = a.expectations[moments_at + 2 * i];
      const double m2 = a.expectations[moments_at + 2 * i + 1];
      row.variances.push_back(m2 - m1 * m1);
    }
    if (options.energy) row.energy = thermal_energy(ens, beta, *options.mass, *options.potential);
    for (const auto& m : ens.members) {
      if (m.trajectory.regularized_before(beta / 2.0)) {
        row.regularized = true;
        break;
      }
    }
    scan.rows.push_back(std::move(row));
  }
  return scan;
}

}  // namespace gres
