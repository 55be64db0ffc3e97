// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gres/errors.hpp"
#include "gres/gaussmath.hpp"
#include "gres/varprop.hpp"

namespace gres {

enum class SymmetryGroup { none, reflection, permutation };

/// Symmetry-adapted subspace a member is propagated in.
enum class Sector { none, even, odd, boson, fermion };

inline const char* to_string(Sector s) {
  switch (s) {
    case Sector::none: return "none";
    case Sector::even: return "even";
    case Sector::odd: return "odd";
    case Sector::boson: return "boson";
    case Sector::fermion: return "fermion";
  }
  return "?";
}

/// A group element acting as psi(x) -> psi(R x); `parity` is +1/-1.
struct GroupElement {
  Matrix map;
  int parity = 1;
};

/// Gaussian with the group element applied: (R^T G R, R^T q, gamma).
inline GaussianParam transform(const GaussianParam& p, const GroupElement& g) {
  return detail::apply_map(p, g.map);
}

/// Enumerates a finite symmetry group and its sign characters.
///
/// Symmetrized kets are n * sum_g s(g) psi(R_g x) with n = 1/sqrt(2) for
/// reflection and n = 1 for permutations. Permutations act on the first N*d
/// coordinates in blocks of d; any trailing coordinates are distinguishable
/// and left alone.
class SymmetryAdapter {
 public:
  static constexpr int kDefaultMaxParticles = 6;

  SymmetryAdapter() = default;

  static SymmetryAdapter none(int dim) {
    SymmetryAdapter a;
    a.group_ = SymmetryGroup::none;
    a.dim_ = dim;
    a.elements_.push_back({Matrix::Identity(dim, dim), 1});
    return a;
  }

  static SymmetryAdapter reflection(int dim) {
    SymmetryAdapter a;
    a.group_ = SymmetryGroup::reflection;
    a.dim_ = dim;
    a.elements_.push_back({Matrix::Identity(dim, dim), 1});
    a.elements_.push_back({-Matrix::Identity(dim, dim), -1});
    return a;
  }

  static SymmetryAdapter permutation(int particles, int dims_per_particle, int total_dim = 0,
                                     int max_particles = kDefaultMaxParticles) {
    if (particles < 1 || dims_per_particle < 1) {
      throw ValidationError("permutation symmetry needs N >= 1 and d >= 1");
    }
    if (particles > max_particles) {
      throw ValidationError("permutation symmetry limited to N <= " + std::to_string(max_particles) +
                            " particles");
    }
    const int core = particles * dims_per_particle;
    if (total_dim == 0) total_dim = core;
    if (total_dim < core) throw ValidationError("dimension smaller than N * d");
    SymmetryAdapter a;
    a.group_ = SymmetryGroup::permutation;
    a.dim_ = total_dim;
    a.particles_ = particles;
    a.dims_per_particle_ = dims_per_particle;
    std::vector<int> perm(particles);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      Matrix r = Matrix::Identity(total_dim, total_dim);
      r.topLeftCorner(core, core).setZero();
      for (int i = 0; i < particles; ++i) {
        for (int c = 0; c < dims_per_particle; ++c) {
          r(i * dims_per_particle + c, perm[i] * dims_per_particle + c) = 1.0;
        }
      }
      int inversions = 0;
      for (int i = 0; i < particles; ++i) {
        for (int j = i + 1; j < particles; ++j) inversions += perm[i] > perm[j];
      }
      a.elements_.push_back({std::move(r), inversions % 2 == 0 ? 1 : -1});
    } while (std::next_permutation(perm.begin(), perm.end()));
    return a;
  }

  SymmetryGroup group() const { return group_; }
  int dim() const { return dim_; }
  int particles() const { return particles_; }
  int dims_per_particle() const { return dims_per_particle_; }
  const std::vector<GroupElement>& elements() const { return elements_; }
  int order() const { return static_cast<int>(elements_.size()); }

  bool allows(Sector s) const {
    switch (group_) {
      case SymmetryGroup::none: return s == Sector::none;
      case SymmetryGroup::reflection: return s == Sector::even || s == Sector::odd;
      case SymmetryGroup::permutation: return s == Sector::boson || s == Sector::fermion;
    }
    return false;
  }

  double sign(const GroupElement& g, Sector s) const {
    return (s == Sector::odd || s == Sector::fermion) ? g.parity : 1.0;
  }

  double ket_normalization() const {
    return group_ == SymmetryGroup::reflection ? 1.0 / std::sqrt(2.0) : 1.0;
  }

  /// Weight turning sum_n w_n <q_n,s|A|q_n,s> into the trace over the sector:
  /// the projector onto a sector maps |q> to |q_s> / (|G| n).
  double trace_factor() const {
    const double n = ket_normalization();
    const double g = order();
    return 1.0 / (g * g * n * n);
  }

  void check_sector(Sector s) const {
    if (!allows(s)) {
      throw ValidationError(std::string("sector '") + to_string(s) +
                            "' is not valid for this symmetry group");
    }
  }

  /// Ket images (R_g, s(g)) for the collapsed sums used with invariant operators.
  std::vector<detail::KetImage> images(Sector s) const {
    check_sector(s);
    std::vector<detail::KetImage> out;
    out.reserve(elements_.size());
    for (const auto& g : elements_) out.push_back({g.map, sign(g, s)});
    return out;
  }

  /// Spot-checks that kinetic and potential energy commute with the group.
  void check_invariant(const MassMatrix& mass, const Potential& u, std::uint64_t seed = 1) const {
    if (mass.dim() != dim_ || u.dim() != dim_) {
      throw ValidationError("symmetry adapter dimension does not match the Hamiltonian");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (const auto& g : elements_) {
      const Matrix m_inv_rot = g.map * mass.inverse() * g.map.transpose();
      if ((m_inv_rot - mass.inverse()).norm() > 1e-12 * mass.inverse().norm()) {
        throw ValidationError("mass matrix is not invariant under the symmetry group");
      }
      for (int trial = 0; trial < 16; ++trial) {
        Vector x(dim_);
        for (auto& v : x) v = dist(rng);
        const double a = u.evaluate(x);
        const double b = u.evaluate(g.map * x);
        if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a))) {
          throw ValidationError("potential is not invariant under the symmetry group");
        }
      }
    }
  }

 private:
  SymmetryGroup group_ = SymmetryGroup::none;
  int dim_ = 1;
  int particles_ = 0;
  int dims_per_particle_ = 0;
  std::vector<GroupElement> elements_;
};

/// <x|lambda_s> = n sum_g s(g) <R_g x|lambda>.
inline double sym_wavefunction(const GaussianParam& lambda, const Eigen::Ref<const Vector>& x,
                               const SymmetryAdapter& adapter, Sector s) {
  if (s == Sector::none) return lambda.value(x);
  double total = 0.0;
  for (const auto& g : adapter.elements()) total += adapter.sign(g, s) * lambda.value(g.map * x);
  return adapter.ket_normalization() * total;
}

/// <bra_s|ket_s> (collapsed single sum: the overlap is group invariant).
inline double sym_overlap(const GaussianParam& bra, const GaussianParam& ket,
                          const SymmetryAdapter& adapter, Sector s) {
  if (s == Sector::none) return overlap(bra, ket);
  adapter.check_sector(s);
  const double n = adapter.ket_normalization();
  double total = 0.0;
  for (const auto& g : adapter.elements()) total += adapter.sign(g, s) * overlap(bra, transform(ket, g));
  return n * n * adapter.order() * total;
}

/// <bra_s|H|ket_s>; H must commute with the group.
inline double sym_hamiltonian(const GaussianParam& bra, const GaussianParam& ket,
                              const SymmetryAdapter& adapter, Sector s, const MassMatrix& mass,
                              const Potential& u) {
  if (s == Sector::none) return hamiltonian_element(bra, ket, mass, u);
  adapter.check_sector(s);
  const double n = adapter.ket_normalization();
  double total = 0.0;
  for (const auto& g : adapter.elements()) {
    total += adapter.sign(g, s) * hamiltonian_element(bra, transform(ket, g), mass, u);
  }
  return n * n * adapter.order() * total;
}

/// <bra_s|A|ket_s> for any position observable (full double sum, so A need
/// not be invariant).
inline double sym_observable(const GaussianParam& bra, const GaussianParam& ket,
                             const SymmetryAdapter& adapter, Sector s, const Potential& a) {
  if (s == Sector::none) return observable_element(bra, ket, a);
  adapter.check_sector(s);
  const double n = adapter.ket_normalization();
  double total = 0.0;
  for (const auto& g : adapter.elements()) {
    const GaussianParam gb = transform(bra, g);
    for (const auto& h : adapter.elements()) {
      total += adapter.sign(g, s) * adapter.sign(h, s) * observable_element(gb, transform(ket, h), a);
    }
  }
  return n * n * total;
}

enum class ElementKind { overlap, hamiltonian, observable };

/// Dispatches to the symmetrized element of the requested kind. `op` is the
/// potential for hamiltonian and the observable for observable.
inline double sym_element(ElementKind kind, const GaussianParam& bra, const GaussianParam& ket,
                          const SymmetryAdapter& adapter, Sector s, const MassMatrix& mass,
                          const Potential& op) {
  switch (kind) {
    case ElementKind::overlap: return sym_overlap(bra, ket, adapter, s);
    case ElementKind::hamiltonian: return sym_hamiltonian(bra, ket, adapter, s, mass, op);
    case ElementKind::observable: return sym_observable(bra, ket, adapter, s, op);
  }
  return 0.0;
}

/// Ratio of the sector norm to |G| n^2 <lambda|lambda>; zero for an empty
/// sector (e.g. fermions on coinciding centers).
inline double relative_sector_norm(const GaussianParam& lambda, const SymmetryAdapter& adapter,
                                   Sector s) {
  if (s == Sector::none) return 1.0;
  const double self = log_overlap(lambda, lambda);
  double total = 0.0;
  for (const auto& g : adapter.elements()) {
    total += adapter.sign(g, s) * std::exp(log_overlap(lambda, transform(lambda, g)) - self);
  }
  return total / adapter.order();
}

/// Variational flow for the symmetrized ansatz. Bra derivatives act on the
/// plain Gaussian; ket derivatives chain through each group image.
inline EomResult sym_eom_rhs(const GaussianParam& lambda, const SymmetryAdapter& adapter, Sector s,
                             const MassMatrix& mass, const Potential& u, const ParamMask& mask,
                             double eps = 1e-10) {
  if (s == Sector::none) return eom_rhs(lambda, mass, u, mask, eps);
  const auto images = adapter.images(s);
  const auto terms = detail::variational_terms(lambda, images, mass, u, mask);
  const double rel = terms.norm / adapter.order();
  if (!(rel > 1e-10)) {
    throw SectorCollapse(std::string("sector-collapse: ") + to_string(s) +
                         " sector norm vanishes (relative norm " + format_real(rel) + ")");
  }
  auto out = detail::solve_eom(terms.gram, terms.force, mask, eps);

  // A packet that is its own image under part of the group stays so; average
  // the rate over that stabilizer so rounding cannot push it off.
  const int d = lambda.dim();
  const double tol = 1e-12 * (1.0 + lambda.width.cwiseAbs().maxCoeff() + lambda.center.cwiseAbs().maxCoeff());
  Vector sum = Vector::Zero(out.rate.size());
  int count = 0;
  for (const auto& g : adapter.elements()) {
    const auto image = transform(lambda, g);
    if ((image.width - lambda.width).cwiseAbs().maxCoeff() > tol ||
        (image.center - lambda.center).cwiseAbs().maxCoeff() > tol) {
      continue;
    }
    const auto rate = unpack(out.rate, d);
    sum += pack(GaussianParam(g.map.transpose() * rate.width * g.map,
                                         g.map.transpose() * rate.center, rate.log_scale));
    ++count;
  }
  if (count > 1) out.rate = sum / count;
  return out;
}

inline Trajectory sym_propagate(const GaussianParam& lambda0, double tau0,
                                const std::vector<double>& targets, const SymmetryAdapter& adapter,
                                Sector s, const MassMatrix& mass, const Potential& u,
                                const ParamMask& mask, const IntegratorConfig& config = {}) {
  if (s == Sector::none) return propagate(lambda0, tau0, targets, mass, u, mask, config);
  adapter.check_sector(s);
  const double eps = config.gram_regularization;
  return detail::integrate_flow(
      [&](const GaussianParam& p) { return sym_eom_rhs(p, adapter, s, mass, u, mask, eps); },
      lambda0, tau0, targets, config);
}

}  // namespace gres
