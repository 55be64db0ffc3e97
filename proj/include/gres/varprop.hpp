// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include "gres/errors.hpp"
#include "gres/gaussmath.hpp"

namespace gres {

struct IntegratorConfig {
  double initial_time = 0.01;  // tau_0
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.5;
  double gram_regularization = 1e-10;  // epsilon
  double min_width = 1e-8;             // floor on eigenvalues of G
  double min_step = 1e-14;
  long max_steps = 2'000'000;

  void validate() const {
    if (!(initial_time > 0.0)) throw ValidationError("integrator initial_time must be > 0");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw ValidationError("integrator tolerances must be > 0");
    }
    if (!(max_step > 0.0)) throw ValidationError("integrator max_step must be > 0");
    if (gram_regularization < 0.0) throw ValidationError("gram_regularization must be >= 0");
    if (!(min_width > 0.0)) throw ValidationError("min_width must be > 0");
  }
};

/// Finite-width stand-in for e^{-tau0 H}|q>:
///   G = M / tau0,  q = q_n,  gamma = 1/2 ln(det M / (2 pi tau0)^D) - U(q_n) tau0.
inline GaussianParam init_delta(const Eigen::Ref<const Vector>& position, const MassMatrix& mass,
                                const Potential& u, double tau0) {
  if (!(tau0 > 0.0)) throw ValidationError("init_delta needs tau0 > 0");
  const int d = static_cast<int>(position.size());
  if (mass.dim() != d || u.dim() != d) {
    throw ValidationError("init_delta: dimension mismatch between position, mass and potential");
  }
  const double gamma =
      0.5 * (mass.log_det() - d * std::log(2.0 * std::numbers::pi * tau0)) - u.evaluate(position) * tau0;
  return GaussianParam(mass.matrix() / tau0, position, gamma);
}

struct EomResult {
  Vector rate;                  // full-length parameter derivative; inactive entries are 0
  double gram_condition = 1.0;  // of the diagonally scaled Gram matrix
  bool regularized = false;
  int frozen = 0;  // null directions of the Gram matrix, held fixed
};

namespace detail {

/// Solves gram * rate = -force on the active parameters. The Gram matrix is
/// scaled to unit diagonal first. Directions it annihilates to rounding
/// accuracy (a vanishing diagonal, or a null eigenvector as for a packet that
/// is its own symmetry image) are held fixed; a condition number of the rest
/// above 1/eps switches to (gram + eps diag(gram)).
inline EomResult solve_eom(const Matrix& gram, const Vector& force, const ParamMask& mask,
                           double eps) {
  constexpr double kNull = 1e-12;
  const int n = static_cast<int>(gram.rows());
  const int full = param_count(mask.dim());
  EomResult out;
  out.rate = Vector::Zero(full);

  const double max_diag = gram.diagonal().cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int a = 0; a < n; ++a) {
    if (gram(a, a) > 1e-14 * max_diag) keep.push_back(a);
  }
  if (keep.empty()) throw NumericalError("Gram matrix vanishes identically");

  const int m = static_cast<int>(keep.size());
  Vector scale(m);
  for (int i = 0; i < m; ++i) scale[i] = 1.0 / std::sqrt(gram(keep[i], keep[i]));
  Matrix s(m, m);
  Vector rhs(m);
  for (int i = 0; i < m; ++i) {
    rhs[i] = -force[keep[i]] * scale[i];
    for (int j = 0; j < m; ++j) s(i, j) = scale[i] * gram(keep[i], keep[j]) * scale[j];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double hi = ev.maxCoeff();
  if (!(hi > 0.0) || !std::isfinite(hi)) throw NumericalError("Gram matrix is not positive");
  int null = 0;
  double lo = hi;
  for (int k = 0; k < m; ++k) {
    if (ev[k] <= kNull * hi) {
      ++null;
    } else {
      lo = std::min(lo, ev[k]);
    }
  }
  out.frozen = n - m + null;
  out.gram_condition = hi / lo;

  const bool regularize = eps > 0.0 && out.gram_condition > 1.0 / eps;
  out.regularized = regularize || out.frozen > 0;
  const double shift = regularize ? eps : 0.0;

  const Vector proj = es.eigenvectors().transpose() * rhs;
  Vector coef = Vector::Zero(m);
  for (int k = 0; k < m; ++k) {
    if (ev[k] > kNull * hi) coef[k] = proj[k] / (ev[k] + shift);
  }
  const Vector y = es.eigenvectors() * coef;
  if (!y.allFinite()) throw NumericalError("Gram system has no finite solution");
  for (int i = 0; i < m; ++i) out.rate[mask.indices()[keep[i]]] = scale[i] * y[i];
  return out;
}

}  // namespace detail

/// Variational imaginary-time flow: solves gram(lambda) * rate = -force(lambda).
inline EomResult eom_rhs(const GaussianParam& lambda, const MassMatrix& mass, const Potential& u,
                         const ParamMask& mask, double eps = 1e-10) {
  const int d = lambda.dim();
  const detail::KetImage identity{Matrix::Identity(d, d), 1.0};
  const auto terms = detail::variational_terms(lambda, std::span(&identity, 1), mass, u, mask);
  return detail::solve_eom(terms.gram, terms.force, mask, eps);
}

struct Checkpoint {
  double tau = 0.0;
  GaussianParam param;
};

struct StepRecord {
  double tau = 0.0;   // end of the step
  double step = 0.0;  // accepted step size
  double gram_condition = 1.0;
  bool regularized = false;
};

/// Gaussian parameters at requested imaginary times plus per-step diagnostics.
struct Trajectory {
  std::vector<Checkpoint> checkpoints;
  std::vector<StepRecord> steps;
  long rejected_steps = 0;

  long regularization_events() const {
    return std::count_if(steps.begin(), steps.end(), [](const StepRecord& s) { return s.regularized; });
  }

  /// True if any step ending at or before tau needed regularization.
  bool regularized_before(double tau) const {
    return std::any_of(steps.begin(), steps.end(),
                       [tau](const StepRecord& s) { return s.regularized && s.tau <= tau; });
  }

  /// Checkpoint at exactly tau (relative tolerance 1e-12); throws otherwise.
  const Checkpoint& at(double tau) const {
    for (const auto& c : checkpoints) {
      if (std::abs(c.tau - tau) <= 1e-12 * std::max(1.0, std::abs(tau))) return c;
    }
    std::ostringstream msg;
    msg << "imaginary time " << tau << " is not a stored checkpoint";
    throw ValidationError(msg.str());
  }

  double final_time() const { return checkpoints.empty() ? 0.0 : checkpoints.back().tau; }
};

namespace detail {

using OdeState = std::vector<double>;

inline std::string describe(const GaussianParam& p) {
  std::ostringstream s;
  s.precision(10);
  s << "q=(" << p.center.transpose() << "), gamma=" << p.log_scale << ", G=[" << p.width << "]";
  return s.str();
}

/// Adaptive Dormand-Prince integration of d(lambda)/d(tau) = flow(lambda).
/// `flow` returns an EomResult for a GaussianParam. Steps land exactly on each
/// target; a step whose end state has a non-positive-definite width is
/// rejected and retried with a smaller step.
template <class Flow>
Trajectory integrate_flow(Flow&& flow, const GaussianParam& start, double tau0,
                          const std::vector<double>& targets, const IntegratorConfig& config) {
  config.validate();
  start.validate();
  const int d = start.dim();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < tau0) throw ValidationError("propagation targets must be >= tau0");
    if (i > 0 && targets[i] < targets[i - 1]) {
      throw ValidationError("propagation targets must be ascending");
    }
  }

  Trajectory traj;
  traj.checkpoints.push_back({tau0, start});

  struct StageStats {
    double condition = 1.0;
    bool regularized = false;
  } stats;

  auto system = [&](const OdeState& x, OdeState& dxdt, double /*t*/) {
    const Vector v = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    const GaussianParam p = unpack(v, d);
    const EomResult r = flow(p);
    stats.condition = std::max(stats.condition, r.gram_condition);
    stats.regularized = stats.regularized || r.regularized;
    dxdt.assign(r.rate.data(), r.rate.data() + r.rate.size());
  };

  const Vector v0 = pack(start);
  OdeState x(v0.data(), v0.data() + v0.size());
  OdeState dxdt(x.size()), x_new(x.size()), dxdt_new(x.size()), xerr(x.size());
  double t = tau0;
  try {
    system(x, dxdt, t);
  } catch (const SectorCollapse& e) {
    throw SectorCollapse(std::string(e.what()) + " at tau=" + format_real(t) + ", " +
                         describe(start));
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at tau=" + format_real(t) + ", " +
                         describe(start));
  }

  boost::numeric::odeint::runge_kutta_dopri5<OdeState> stepper;
  double dt = std::min(config.max_step, 0.01 * tau0);
  std::string last_stage_error;

  std::size_t next = 0;
  while (next < targets.size() && targets[next] <= tau0) ++next;
  long steps = 0;

  while (next < targets.size()) {
    const double target = targets[next];
    if (++steps > config.max_steps) {
      throw NumericalError("step limit exceeded at tau=" + format_real(t));
    }
    if (dt < config.min_step * std::max(1.0, std::abs(t))) {
      throw NumericalError("step size underflow at tau=" + format_real(t) + ", " +
                           describe(unpack(Eigen::Map<const Vector>(x.data(), x.size()), d)) +
                           (last_stage_error.empty() ? "" : " (" + last_stage_error + ")"));
    }
    double h = std::min(dt, config.max_step);
    bool lands = false;
    if (t + h >= target - 1e-13 * std::max(1.0, target)) {
      h = target - t;
      lands = true;
    }

    stats = {};
    bool ok = true;
    try {
      stepper.do_step(system, x, dxdt, t, x_new, dxdt_new, h, xerr);
    } catch (const NumericalError& e) {
      ok = false;
      last_stage_error = e.what();
    }

    double err = 0.0;
    if (ok) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double sc =
            config.abs_tol + config.rel_tol * std::max(std::abs(x[i]), std::abs(x_new[i]));
        err = std::max(err, std::abs(xerr[i]) / sc);
      }
      if (!std::isfinite(err)) ok = false;
    }
    GaussianParam p_new;
    if (ok) {
      p_new = unpack(Eigen::Map<const Vector>(x_new.data(), x_new.size()), d);
      if (!p_new.width_positive_definite()) {
        ok = false;
        last_stage_error = "width matrix lost positive definiteness";
      }
    }
    if (!ok || err > 1.0) {
      ++traj.rejected_steps;
      dt = ok ? h * std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25 * h;
      continue;
    }

    t = lands ? target : t + h;
    x.swap(x_new);
    dxdt.swap(dxdt_new);
    traj.steps.push_back({t, h, stats.condition, stats.regularized});
    const double growth = err > 0.0 ? std::min(5.0, 0.9 * std::pow(err, -0.2)) : 5.0;
    dt = lands ? std::max(dt, h * growth) : h * growth;

    Eigen::SelfAdjointEigenSolver<Matrix> es(p_new.width, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < config.min_width) {
      throw NumericalError("Gaussian width too small: min eigenvalue of G = " +
                           format_real(es.eigenvalues().minCoeff()) + " below floor " +
                           format_real(config.min_width) + " at tau=" + format_real(t) +
                           ", " + describe(p_new));
    }
    while (next < targets.size() && targets[next] <= t) {
      if (traj.checkpoints.back().tau != targets[next]) {
        traj.checkpoints.push_back({targets[next], p_new});
      }
      ++next;
    }
  }
  return traj;
}

}  // namespace detail

/// Integrates the variational flow from lambda0 at tau0, storing the state at
/// every target time. The initial state is always the first checkpoint.
inline Trajectory propagate(const GaussianParam& lambda0, double tau0,
                            const std::vector<double>& targets, const MassMatrix& mass,
                            const Potential& u, const ParamMask& mask,
                            const IntegratorConfig& config = {}) {
  const double eps = config.gram_regularization;
  return detail::integrate_flow(
      [&](const GaussianParam& p) { return eom_rhs(p, mass, u, mask, eps); }, lambda0, tau0,
      targets, config);
}

/// Diagnostic dump: tau, gamma, q components, upper-triangle G entries and the
/// Gram condition estimate of the step that reached the checkpoint.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.checkpoints.empty()) return;
  const int d = traj.checkpoints.front().param.dim();
  out << "tau,gamma";
  for (int i = 0; i < d; ++i) out << ",q" << (i + 1);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) out << ",G" << (i + 1) << (j + 1);
  }
  out << ",gram_condition\n";
  for (const auto& c : traj.checkpoints) {
    double cond = 1.0;
    for (const auto& s : traj.steps) {
      if (s.tau == c.tau) cond = s.gram_condition;
    }
    out << format_real(c.tau) << ',' << format_real(c.param.log_scale);
    for (int i = 0; i < d; ++i) out << ',' << format_real(c.param.center[i]);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) out << ',' << format_real(c.param.width(i, j));
    }
    out << ',' << format_real(cond) << '\n';
  }
}

}  // namespace gres
