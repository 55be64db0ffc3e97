// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <unordered_map>

#include "gres/polynomial.hpp"

namespace gres {

/// Central moments E[z^a] of a zero-mean normal distribution N(0, cov).
///
/// Uses the two-term Gaussian (Stein) recursion
///   E[z_k z^b] = sum_j cov_kj b_j E[z^(b - e_j)]
/// memoized per instance. Instances are cheap and are meant to live for a
/// single element evaluation; they are not thread-safe.
class CentralMoments {
 public:
  explicit CentralMoments(Matrix covariance) : cov_(std::move(covariance)) {}

  const Matrix& covariance() const { return cov_; }

  double operator()(Monomial m) {
    if (m.is_constant()) return 1.0;
    if (m.degree() % 2 != 0) return 0.0;
    if (auto it = memo_.find(m.key()); it != memo_.end()) return it->second;

    int k = 0;
    while (m.exponent(k) == 0) ++k;
    const Monomial rest = m.lowered(k);
    double value = 0.0;
    for (int j = 0; j < cov_.rows(); ++j) {
      const int bj = rest.exponent(j);
      if (bj == 0 || cov_(k, j) == 0.0) continue;
      value += cov_(k, j) * bj * (*this)(rest.lowered(j));
    }
    memo_.emplace(m.key(), value);
    return value;
  }

  double expect(const Polynomial& p) {
    double total = 0.0;
    for (const auto& [m, c] : p.terms()) total += c * (*this)(m);
    return total;
  }

  /// E[p q] without materializing the product polynomial.
  double expect_product(const Polynomial& p, const Polynomial& q) {
    double total = 0.0;
    for (const auto& [mp, cp] : p.terms()) {
      for (const auto& [mq, cq] : q.terms()) total += cp * cq * (*this)(mp * mq);
    }
    return total;
  }

 private:
  Matrix cov_;
  std::unordered_map<std::uint64_t, double> memo_;
};

/// A positive measure exp(log_weight) * N(mean, cov): the product of two
/// Gaussians (possibly times a further Gaussian factor), ready to integrate
/// polynomials against.
class WeightedNormal {
 public:
  WeightedNormal(Vector mean, Matrix precision, Matrix covariance, double log_weight)
      : mean_(std::move(mean)),
        precision_(std::move(precision)),
        log_weight_(log_weight),
        moments_(std::move(covariance)) {}

  const Vector& mean() const { return mean_; }
  const Matrix& precision() const { return precision_; }
  const Matrix& covariance() const { return moments_.covariance(); }
  double log_weight() const { return log_weight_; }
  double weight() const { return std::exp(log_weight_); }

  /// Rewrites p, given as a polynomial in (x - origin), in the centered
  /// variable z = x - mean.
  Polynomial centered(const Polynomial& p, const Eigen::Ref<const Vector>& origin) const {
    return p.translated(mean_ - origin);
  }

  /// Normalized expectation E[p] for p already in centered variables.
  double expect_centered(const Polynomial& p) { return moments_.expect(p); }

  double expect_centered(const Polynomial& p, const Polynomial& q) {
    return moments_.expect_product(p, q);
  }

  /// Normalized expectation of p written in (x - origin).
  double expect(const Polynomial& p, const Eigen::Ref<const Vector>& origin) {
    return moments_.expect(centered(p, origin));
  }

  /// Multiplies the measure by exp(-1/2 (x - s)^T A (x - s)) with A PSD.
  /// Returns the merged measure; the receiver is unchanged.
  WeightedNormal merged(const Matrix& a, const Eigen::Ref<const Vector>& s) const {
    const Matrix c2 = precision_ + a;
    Eigen::LLT<Matrix> llt(c2);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("merged Gaussian precision is not positive definite");
    }
    const Vector rhs = precision_ * mean_ + a * s;
    Vector mean2 = llt.solve(rhs);
    const Vector d = mean_ - s;
    // exp(-1/2 d^T C (C + A)^-1 A d) * sqrt(det C / det(C + A))
    const double quad = d.dot(precision_ * llt.solve(a * d));
    Eigen::LLT<Matrix> llt1(precision_);
    const double logdet_c = 2.0 * llt1.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double logdet_c2 = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Matrix cov2 = llt.solve(Matrix::Identity(c2.rows(), c2.cols()));
    return WeightedNormal(std::move(mean2), c2, std::move(cov2),
                          log_weight_ - 0.5 * quad + 0.5 * (logdet_c - logdet_c2));
  }

 private:
  Vector mean_;
  Matrix precision_;
  double log_weight_;
  CentralMoments moments_;
};

}  // namespace gres
