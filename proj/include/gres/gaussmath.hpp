// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gres/errors.hpp"
#include "gres/moments.hpp"
#include "gres/polynomial.hpp"
#include "gres/potential.hpp"

namespace gres {

/// Real Gaussian <x|lambda> = exp{log_scale - 1/2 (x - center)^T width (x - center)}.
struct GaussianParam {
  Matrix width;     // G, symmetric positive definite
  Vector center;    // q
  double log_scale = 0.0;  // gamma

  GaussianParam() = default;
  GaussianParam(Matrix g, Vector q, double gamma)
      : width(std::move(g)), center(std::move(q)), log_scale(gamma) {}

  /// One-dimensional convenience constructor.
  static GaussianParam scalar(double g, double q, double gamma) {
    return GaussianParam(Matrix::Constant(1, 1, g), Vector::Constant(1, q), gamma);
  }

  int dim() const { return static_cast<int>(center.size()); }

  double log_value(const Eigen::Ref<const Vector>& x) const {
    const Vector d = x - center;
    return log_scale - 0.5 * d.dot(width * d);
  }
  double value(const Eigen::Ref<const Vector>& x) const { return std::exp(log_value(x)); }

  bool width_positive_definite() const {
    Eigen::LLT<Matrix> llt(width);
    return llt.info() == Eigen::Success;
  }

  void validate() const {
    if (width.rows() != dim() || width.cols() != dim()) {
      throw ValidationError("Gaussian width matrix does not match center dimension");
    }
    if ((width - width.transpose()).norm() > 0.0) {
      throw ValidationError("Gaussian width matrix is not symmetric");
    }
    if (!width_positive_definite()) {
      throw ValidationError("Gaussian width matrix is not positive definite");
    }
  }
};

/// Number of Gaussian parameters in D dimensions, (D+2)(D+1)/2.
constexpr int param_count(int dim) { return (dim + 2) * (dim + 1) / 2; }

/// Flat parameter index helpers for the packing
///   [upper triangle of G row-major, q_1..q_D, gamma].
constexpr int width_index(int dim, int i, int j) {
  if (i > j) std::swap(i, j);
  // rows 0..i-1 contribute D, D-1, ..., D-i+1 entries
  return i * dim - i * (i - 1) / 2 + (j - i);
}
constexpr int center_index(int dim, int i) { return dim * (dim + 1) / 2 + i; }
constexpr int scale_index(int dim) { return dim * (dim + 1) / 2 + dim; }

inline Vector pack(const GaussianParam& p) {
  const int d = p.dim();
  Vector v(param_count(d));
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) v[k++] = p.width(i, j);
  }
  for (int i = 0; i < d; ++i) v[k++] = p.center[i];
  v[k] = p.log_scale;
  return v;
}

inline GaussianParam unpack(const Eigen::Ref<const Vector>& v, int dim) {
  if (v.size() != param_count(dim)) {
    throw ValidationError("parameter vector has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(param_count(dim)));
  }
  GaussianParam p(Matrix(dim, dim), Vector(dim), 0.0);
  int k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      p.width(i, j) = v[k];
      p.width(j, i) = v[k];
      ++k;
    }
  }
  for (int i = 0; i < dim; ++i) p.center[i] = v[k++];
  p.log_scale = v[k];
  return p;
}

/// Selects the parameters that evolve. Center and scale are always active;
/// inactive width entries stay frozen at their initial value.
class ParamMask {
 public:
  ParamMask() = default;

  static ParamMask full(int dim) { return ParamMask(dim, std::vector<bool>(param_count(dim), true)); }

  /// Diagonal width matrix: 2D + 1 active parameters.
  static ParamMask diagonal_width(int dim) {
    std::vector<bool> active(param_count(dim), true);
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j) active[width_index(dim, i, j)] = false;
    }
    return ParamMask(dim, std::move(active));
  }

  ParamMask(int dim, std::vector<bool> active) : dim_(dim), active_(std::move(active)) {
    if (static_cast<int>(active_.size()) != param_count(dim)) {
      throw ValidationError("parameter mask has the wrong length");
    }
    for (int i = 0; i < dim; ++i) {
      if (!active_[center_index(dim, i)]) throw ValidationError("center parameters must be active");
    }
    if (!active_[scale_index(dim)]) throw ValidationError("scale parameter must be active");
    for (int i = 0; i < param_count(dim); ++i) {
      if (active_[i]) indices_.push_back(i);
    }
  }

  int dim() const { return dim_; }
  bool active(int i) const { return active_[i]; }
  const std::vector<int>& indices() const { return indices_; }
  int count() const { return static_cast<int>(indices_.size()); }

 private:
  int dim_ = 0;
  std::vector<bool> active_;
  std::vector<int> indices_;
};

namespace detail {

inline void check_dims(const GaussianParam& bra, const GaussianParam& ket) {
  if (bra.dim() != ket.dim()) {
    throw ValidationError("bra and ket dimensions differ (" + std::to_string(bra.dim()) + " vs " +
                          std::to_string(ket.dim()) + ")");
  }
}

inline double log_det_spd(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// The measure <bra|x><x|ket> dx as exp(log overlap) * N(mean, (G'+G)^-1).
inline WeightedNormal pair_measure(const GaussianParam& bra, const GaussianParam& ket) {
  check_dims(bra, ket);
  const int d = bra.dim();
  Matrix c = bra.width + ket.width;
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("G' + G is not positive definite (corrupted Gaussian parameters)");
  }
  Vector mean = llt.solve(bra.width * bra.center + ket.width * ket.center);
  const Vector diff = bra.center - ket.center;
  const double quad = diff.dot(bra.width * llt.solve(ket.width * diff));
  const double log_ov = bra.log_scale + ket.log_scale + 0.5 * d * std::log(2.0 * std::numbers::pi) -
                        0.5 * log_det_spd(llt) - 0.5 * quad;
  Matrix cov = llt.solve(Matrix::Identity(d, d));
  return WeightedNormal(std::move(mean), std::move(c), std::move(cov), log_ov);
}

/// (H phi)/phi for a Gaussian ket, kinetic part only, as a polynomial in
/// y = x - q:  1/2 tr(M^-1 G) - 1/2 y^T G M^-1 G y.
inline Polynomial kinetic_poly(const GaussianParam& ket, const MassMatrix& mass) {
  const Matrix& g = ket.width;
  const Matrix& minv = mass.inverse();
  Polynomial p = Polynomial::constant(ket.dim(), 0.5 * (minv * g).trace());
  p += Polynomial::quadratic(-0.5 * (g * minv * g));
  return p;
}

/// Tangent factors t_a with d/d(lambda_a) phi(R x) = t_a * phi(R x), written
/// in z = x - R^T q. `map` is R (identity for an untransformed Gaussian).
///   gamma:  1
///   q_i:    [G R z]_i
///   G_ii:  -1/2 (R z)_i^2
///   G_ij:  -(R z)_i (R z)_j   (i < j; one parameter per symmetric pair)
inline std::vector<Polynomial> tangent_polys(const Matrix& width, const Matrix& map,
                                             const ParamMask& mask) {
  const int d = static_cast<int>(width.rows());
  std::vector<Polynomial> rz;
  rz.reserve(d);
  for (int i = 0; i < d; ++i) rz.push_back(Polynomial::linear(map.row(i).transpose()));
  const Matrix gr = width * map;
  std::vector<Polynomial> out;
  out.reserve(mask.count());
  for (int a : mask.indices()) {
    if (a == scale_index(d)) {
      out.push_back(Polynomial::constant(d, 1.0));
    } else if (a >= center_index(d, 0)) {
      const int i = a - center_index(d, 0);
      out.push_back(Polynomial::linear(gr.row(i).transpose()));
    } else {
      int i = 0;
      while (i + 1 < d && width_index(d, i + 1, i + 1) <= a) ++i;
      const int j = i + (a - width_index(d, i, i));
      out.push_back((i == j ? -0.5 : -1.0) * (rz[i] * rz[j]));
    }
  }
  return out;
}

/// Sum of the potential's pure-polynomial terms, in absolute coordinates.
inline Polynomial polynomial_part(const Potential& u) {
  Polynomial p(u.dim());
  for (const auto& t : u.terms()) {
    if (!t.has_gaussian()) p += t.coeff * t.poly;
  }
  return p;
}

/// <bra| f |ket> / exp(log_ref) for position-space f given as the sum of an
/// absolute-coordinate polynomial part and the Gaussian-weighted terms of u,
/// each term optionally multiplied by a centered factor `bra_factor`.
inline double position_integral(WeightedNormal& measure, const Polynomial& poly_part,
                                const Potential& u, double log_ref,
                                const Polynomial* bra_factor_centered) {
  const Vector origin = Vector::Zero(measure.mean().size());
  double total = 0.0;
  if (!poly_part.empty()) {
    const Polynomial centered = measure.centered(poly_part, origin);
    total += std::exp(measure.log_weight() - log_ref) *
             (bra_factor_centered ? measure.expect_centered(*bra_factor_centered, centered)
                                  : measure.expect_centered(centered));
  }
  for (const auto& t : u.terms()) {
    if (!t.has_gaussian()) continue;
    WeightedNormal merged = measure.merged(t.width, t.center);
    const Polynomial centered = merged.centered(t.poly, origin);
    double e = 0.0;
    if (bra_factor_centered) {
      // re-center the bra factor from the pair mean onto the merged mean
      const Polynomial f = bra_factor_centered->translated(merged.mean() - measure.mean());
      e = merged.expect_centered(f, centered);
    } else {
      e = merged.expect_centered(centered);
    }
    total += t.coeff * std::exp(merged.log_weight() - log_ref) * e;
  }
  return total;
}

/// One term of a (possibly symmetrized) ket: sign * phi(map x).
struct KetImage {
  Matrix map;
  double sign = 1.0;
};

/// Gram matrix and force vector of the variational equations, both divided by
/// exp(log_ref), for the ket sum_k sign_k phi(R_k x) against the bra lambda.
/// `norm` is sum_k sign_k <lambda|phi_k> and `energy` the matching <H>, on
/// the same scale.
struct VariationalTerms {
  Matrix gram;
  Vector force;
  double norm = 0.0;
  double energy = 0.0;
  double log_ref = 0.0;
};

/// Gaussian with parameters (R^T G R, R^T q, gamma), i.e. x -> phi(R x).
inline GaussianParam apply_map(const GaussianParam& p, const Matrix& map) {
  return GaussianParam(map.transpose() * p.width * map, map.transpose() * p.center, p.log_scale);
}

inline VariationalTerms variational_terms(const GaussianParam& lambda,
                                          std::span<const KetImage> images,
                                          const MassMatrix& mass, const Potential& u,
                                          const ParamMask& mask) {
  const int d = lambda.dim();
  if (mass.dim() != d || u.dim() != d || mask.dim() != d) {
    throw ValidationError("Gaussian, mass matrix, potential and mask dimensions differ");
  }
  const int n = mask.count();
  VariationalTerms out;
  out.gram = Matrix::Zero(n, n);
  out.force = Vector::Zero(n);
  out.log_ref = 2.0 * lambda.log_scale + 0.5 * d * std::log(std::numbers::pi) -
                0.5 * std::log((lambda.width).determinant());

  const Polynomial u_poly = polynomial_part(u);
  const std::vector<Polynomial> bra_tangents =
      tangent_polys(lambda.width, Matrix::Identity(d, d), mask);

  for (const KetImage& img : images) {
    const GaussianParam ket = apply_map(lambda, img.map);
    WeightedNormal measure = pair_measure(lambda, ket);
    const double w = img.sign * std::exp(measure.log_weight() - out.log_ref);
    if (w == 0.0) continue;

    std::vector<Polynomial> bra_c;
    bra_c.reserve(n);
    for (const auto& t : bra_tangents) bra_c.push_back(measure.centered(t, lambda.center));
    std::vector<Polynomial> ket_c;
    ket_c.reserve(n);
    for (const auto& t : tangent_polys(lambda.width, img.map, mask)) {
      ket_c.push_back(measure.centered(t, ket.center));
    }
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) out.gram(a, b) += w * measure.expect_centered(bra_c[a], ket_c[b]);
    }

    // H phi / phi = kinetic polynomial (about the ket center) + U(x)
    const Polynomial kin_c = measure.centered(kinetic_poly(ket, mass), ket.center);
    const Polynomial h_poly_c = kin_c + measure.centered(u_poly, Vector::Zero(d));
    for (int a = 0; a < n; ++a) {
      double f = measure.expect_centered(bra_c[a], h_poly_c);
      out.force[a] += w * f;
    }
    // Gaussian-weighted potential terms
    for (const auto& t : u.terms()) {
      if (!t.has_gaussian()) continue;
      WeightedNormal merged = measure.merged(t.width, t.center);
      const double w2 = img.sign * t.coeff * std::exp(merged.log_weight() - out.log_ref);
      const Polynomial poly_c = merged.centered(t.poly, Vector::Zero(d));
      const Vector shift = merged.mean() - measure.mean();
      for (int a = 0; a < n; ++a) {
        out.force[a] += w2 * merged.expect_centered(bra_c[a].translated(shift), poly_c);
      }
    }
    out.norm += w;
  }
  // t_gamma = 1, so the gamma row of the force is <lambda|H|ket>
  out.energy = 0.0;
  for (int a = 0; a < n; ++a) {
    if (mask.indices()[a] == scale_index(d)) out.energy = out.force[a];
  }
  return out;
}

}  // namespace detail

inline double log_overlap(const GaussianParam& bra, const GaussianParam& ket) {
  return detail::pair_measure(bra, ket).log_weight();
}

/// <bra|ket> = e^(gamma'+gamma) (2pi)^(D/2) det(G'+G)^(-1/2)
///             exp{-1/2 (q'-q)^T G'(G'+G)^-1 G (q'-q)}.
inline double overlap(const GaussianParam& bra, const GaussianParam& ket) {
  return std::exp(log_overlap(bra, ket));
}

/// <bra| prod_i x_i^a_i |ket>.
inline double moment(const GaussianParam& bra, const GaussianParam& ket, Monomial alpha) {
  WeightedNormal m = detail::pair_measure(bra, ket);
  const Polynomial p = Polynomial::monomial(bra.dim(), alpha);
  return m.weight() * m.expect(p, Vector::Zero(bra.dim()));
}

/// <bra| 1/2 p^T M^-1 p |ket>.
inline double kinetic_element(const GaussianParam& bra, const GaussianParam& ket,
                              const MassMatrix& mass) {
  if (mass.dim() != bra.dim()) throw ValidationError("mass matrix dimension mismatch");
  WeightedNormal m = detail::pair_measure(bra, ket);
  return m.weight() * m.expect(detail::kinetic_poly(ket, mass), ket.center);
}

/// <bra| A(x) |ket> for any position-space observable in potential form.
inline double observable_element(const GaussianParam& bra, const GaussianParam& ket,
                                 const Potential& a) {
  if (a.dim() != bra.dim()) throw ValidationError("observable dimension mismatch");
  WeightedNormal m = detail::pair_measure(bra, ket);
  const double ref = m.log_weight();
  return std::exp(ref) * detail::position_integral(m, detail::polynomial_part(a), a, ref, nullptr);
}

inline double potential_element(const GaussianParam& bra, const GaussianParam& ket,
                                const Potential& u) {
  return observable_element(bra, ket, u);
}

inline double hamiltonian_element(const GaussianParam& bra, const GaussianParam& ket,
                                  const MassMatrix& mass, const Potential& u) {
  return kinetic_element(bra, ket, mass) + potential_element(bra, ket, u);
}

/// [d^2 <lambda'|lambda> / d lambda d lambda'] at lambda' = lambda, active
/// parameters only.
inline Matrix gram_matrix(const GaussianParam& lambda, const ParamMask& mask) {
  const int d = lambda.dim();
  const detail::KetImage identity{Matrix::Identity(d, d), 1.0};
  const auto terms = detail::variational_terms(lambda, std::span(&identity, 1),
                                               MassMatrix(Matrix::Identity(d, d)),
                                               Potential(d), mask);
  return std::exp(terms.log_ref) * terms.gram;
}

/// [d <lambda'|H|lambda> / d lambda'] at lambda' = lambda, active parameters
/// only.
inline Vector force_vector(const GaussianParam& lambda, const MassMatrix& mass, const Potential& u,
                           const ParamMask& mask) {
  const int d = lambda.dim();
  const detail::KetImage identity{Matrix::Identity(d, d), 1.0};
  const auto terms = detail::variational_terms(lambda, std::span(&identity, 1), mass, u, mask);
  return std::exp(terms.log_ref) * terms.force;
}

}  // namespace gres
