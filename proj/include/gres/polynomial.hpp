// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gres/errors.hpp"

namespace gres {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Exponent vector of a monomial, packed four bits per variable.
///
/// Up to 16 variables with per-variable exponents up to 15. Multiplication is
/// a single integer add; overflow of any exponent is detected and rejected.
class Monomial {
 public:
  static constexpr int kMaxVars = 16;
  static constexpr int kMaxExponent = 15;

  constexpr Monomial() = default;

  static Monomial power(int var, int exponent) {
    check_var(var);
    if (exponent < 0 || exponent > kMaxExponent) {
      throw ValidationError("monomial exponent " + std::to_string(exponent) +
                            " outside [0, 15]");
    }
    return Monomial(static_cast<std::uint64_t>(exponent) << (4 * var));
  }

  static Monomial from_exponents(std::span<const int> exponents) {
    if (exponents.size() > kMaxVars) {
      throw ValidationError("monomials support at most 16 variables");
    }
    Monomial m;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      m = m * power(static_cast<int>(i), exponents[i]);
    }
    return m;
  }

  int exponent(int var) const {
    return static_cast<int>((bits_ >> (4 * var)) & 0xFu);
  }

  int degree() const {
    int d = 0;
    for (std::uint64_t b = bits_; b != 0; b >>= 4) d += static_cast<int>(b & 0xFu);
    return d;
  }

  /// Highest variable index with a nonzero exponent, or -1 for the constant.
  int highest_var() const {
    int v = -1;
    for (int i = 0; i < kMaxVars; ++i) {
      if (exponent(i) != 0) v = i;
    }
    return v;
  }

  bool is_constant() const { return bits_ == 0; }

  Monomial operator*(Monomial other) const {
    const std::uint64_t sum = bits_ + other.bits_;
    // A carry out of any nibble shows up as a flipped low bit of the next one.
    const std::uint64_t carries = (bits_ ^ other.bits_ ^ sum) & 0x1111111111111110ull;
    if (carries != 0 || sum < bits_) {
      throw ValidationError("monomial exponent overflow (per-variable maximum is 15)");
    }
    return Monomial(sum);
  }

  /// Divides by x_var; requires a positive exponent.
  Monomial lowered(int var) const { return Monomial(bits_ - (std::uint64_t{1} << (4 * var))); }

  std::uint64_t key() const { return bits_; }

  friend bool operator==(Monomial a, Monomial b) { return a.bits_ == b.bits_; }
  friend bool operator<(Monomial a, Monomial b) { return a.bits_ < b.bits_; }

 private:
  explicit constexpr Monomial(std::uint64_t bits) : bits_(bits) {}

  static void check_var(int var) {
    if (var < 0 || var >= kMaxVars) {
      throw ValidationError("monomial variable index " + std::to_string(var) +
                            " outside [0, 16)");
    }
  }

  std::uint64_t bits_ = 0;
};

/// Sparse real polynomial in `dim` variables: monomial -> coefficient.
///
/// Terms are kept sorted by monomial with zero coefficients removed, so two
/// polynomials with equal values compare equal term by term.
class Polynomial {
 public:
  using Term = std::pair<Monomial, double>;

  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) { check_dim(dim); }

  static Polynomial constant(int dim, double c) {
    Polynomial p(dim);
    if (c != 0.0) p.terms_.emplace_back(Monomial{}, c);
    return p;
  }

  static Polynomial monomial(int dim, Monomial m, double c = 1.0) {
    Polynomial p(dim);
    if (m.highest_var() >= dim) {
      throw ValidationError("monomial uses a variable beyond the polynomial dimension");
    }
    if (c != 0.0) p.terms_.emplace_back(m, c);
    return p;
  }

  /// The linear form sum_i coeffs[i] * z_i.
  static Polynomial linear(const Eigen::Ref<const Vector>& coeffs) {
    const int dim = static_cast<int>(coeffs.size());
    Polynomial p(dim);
    for (int i = 0; i < dim; ++i) {
      if (coeffs[i] != 0.0) p.terms_.emplace_back(Monomial::power(i, 1), coeffs[i]);
    }
    p.normalize();
    return p;
  }

  /// The quadratic form sum_ij B_ij z_i z_j (B need not be symmetric).
  static Polynomial quadratic(const Matrix& b) {
    const int dim = static_cast<int>(b.rows());
    Polynomial p(dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        if (b(i, j) != 0.0) {
          p.terms_.emplace_back(Monomial::power(i, 1) * Monomial::power(j, 1), b(i, j));
        }
      }
    }
    p.normalize();
    return p;
  }

  int dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  double evaluate(const Eigen::Ref<const Vector>& z) const {
    if (z.size() != dim_) {
      throw ValidationError("polynomial of dimension " + std::to_string(dim_) +
                            " evaluated at a point of dimension " + std::to_string(z.size()));
    }
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
      double v = c;
      for (int i = 0; i < dim_; ++i) {
        for (int e = m.exponent(i); e > 0; --e) v *= z[i];
      }
      total += v;
    }
    return total;
  }

  Polynomial& operator+=(const Polynomial& other) {
    check_same_dim(other);
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    normalize();
    return *this;
  }

  Polynomial& operator*=(double s) {
    for (auto& t : terms_) t.second *= s;
    normalize();
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same_dim(b);
    Polynomial p(a.dim_);
    p.terms_.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) p.terms_.emplace_back(ma * mb, ca * cb);
    }
    p.normalize();
    return p;
  }

  /// Returns r with r(z) = p(z + shift).
  Polynomial translated(const Eigen::Ref<const Vector>& shift) const {
    if (shift.size() != dim_) {
      throw ValidationError("translation vector dimension mismatch");
    }
    Polynomial out(dim_);
    std::vector<Term> expanded;
    std::vector<Term> next;
    for (const auto& [m, c] : terms_) {
      expanded.assign(1, Term{Monomial{}, c});
      for (int i = 0; i < dim_; ++i) {
        const int a = m.exponent(i);
        if (a == 0) continue;
        next.clear();
        // (z_i + s)^a = sum_k binom(a, k) s^(a-k) z_i^k
        double binom = 1.0;
        for (int k = 0; k <= a; ++k) {
          const double coeff = binom * ipow(shift[i], a - k);
          if (coeff != 0.0) {
            const Monomial zk = Monomial::power(i, k);
            for (const auto& [em, ec] : expanded) next.emplace_back(em * zk, ec * coeff);
          }
          binom = binom * (a - k) / (k + 1);
        }
        expanded.swap(next);
      }
      out.terms_.insert(out.terms_.end(), expanded.begin(), expanded.end());
    }
    out.normalize();
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

 private:
  static double ipow(double base, int e) {
    double r = 1.0;
    for (; e > 0; --e) r *= base;
    return r;
  }

  static void check_dim(int dim) {
    if (dim < 1 || dim > Monomial::kMaxVars) {
      throw ValidationError("polynomial dimension " + std::to_string(dim) +
                            " outside [1, 16]");
    }
  }

  void check_same_dim(const Polynomial& other) const {
    if (other.dim_ != dim_) {
      throw ValidationError("polynomial dimension mismatch (" + std::to_string(dim_) + " vs " +
                            std::to_string(other.dim_) + ")");
    }
  }

  void normalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const Term& x, const Term& y) { return x.first < y.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < terms_.size();) {
      Term acc = terms_[i];
      std::size_t j = i + 1;
      for (; j < terms_.size() && terms_[j].first == acc.first; ++j) acc.second += terms_[j].second;
      if (acc.second != 0.0) terms_[out++] = acc;
      i = j;
    }
    terms_.resize(out);
  }

  int dim_ = 1;
  std::vector<Term> terms_;
};

}  // namespace gres
