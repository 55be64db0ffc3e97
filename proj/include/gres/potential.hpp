// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gres/errors.hpp"
#include "gres/polynomial.hpp"

namespace gres {

/// coeff * poly(x) * exp(-1/2 (x - center)^T width (x - center)).
///
/// An all-zero width gives a pure polynomial term.
struct PolyGaussTerm {
  double coeff = 1.0;
  Polynomial poly;
  Vector center;
  Matrix width;

  int dim() const { return poly.dim(); }
  bool has_gaussian() const { return width.size() > 0 && !width.isZero(0.0); }

  double evaluate(const Eigen::Ref<const Vector>& x) const {
    double v = coeff * poly.evaluate(x);
    if (has_gaussian()) {
      const Vector d = x - center;
      v *= std::exp(-0.5 * d.dot(width * d));
    }
    return v;
  }

  void validate(int dim) const {
    if (poly.dim() != dim || center.size() != dim || width.rows() != dim || width.cols() != dim) {
      throw ValidationError("potential term dimension does not match D=" + std::to_string(dim));
    }
    if ((width - width.transpose()).norm() != 0.0) {
      throw ValidationError("potential term width matrix is not symmetric");
    }
    if (has_gaussian()) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(width, Eigen::EigenvaluesOnly);
      const double scale = width.norm();
      if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw ValidationError("potential term width matrix is not positive semidefinite");
      }
    }
  }
};

/// Term with coefficient `coeff` and a single monomial; width zero unless
/// given.
inline PolyGaussTerm make_term(int dim, double coeff, Monomial m) {
  return PolyGaussTerm{coeff, Polynomial::monomial(dim, m), Vector::Zero(dim),
                       Matrix::Zero(dim, dim)};
}

/// Sum of polynomial-times-real-Gaussian terms in D dimensions. Also used for
/// position-space observables.
class Potential {
 public:
  Potential() = default;
  explicit Potential(int dim) : dim_(dim) {
    if (dim < 1 || dim > Monomial::kMaxVars) {
      throw ValidationError("potential dimension must lie in [1, 16]");
    }
  }
  Potential(int dim, std::vector<PolyGaussTerm> terms) : Potential(dim) {
    for (auto& t : terms) add(std::move(t));
  }

  int dim() const { return dim_; }
  const std::vector<PolyGaussTerm>& terms() const { return terms_; }

  void add(PolyGaussTerm term) {
    term.validate(dim_);
    terms_.push_back(std::move(term));
  }

  double evaluate(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim_) {
      throw ValidationError("potential of dimension " + std::to_string(dim_) +
                            " evaluated at a point of dimension " + std::to_string(x.size()));
    }
    double total = 0.0;
    for (const auto& t : terms_) total += t.evaluate(x);
    return total;
  }

  /// Largest total polynomial degree over all terms.
  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.poly.degree());
    return d;
  }

  /// The constant function c.
  static Potential constant(int dim, double c) {
    Potential p(dim);
    p.add(make_term(dim, c, Monomial{}));
    return p;
  }

  /// The monomial observable prod_i x_i^a_i.
  static Potential monomial(int dim, Monomial m, double c = 1.0) {
    Potential p(dim);
    p.add(make_term(dim, c, m));
    return p;
  }

 private:
  int dim_ = 1;
  std::vector<PolyGaussTerm> terms_;
};

/// Symmetric positive-definite mass matrix.
class MassMatrix {
 public:
  MassMatrix() : MassMatrix(Matrix::Identity(1, 1)) {}
  explicit MassMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
      throw ValidationError("mass matrix must be square and nonempty");
    }
    if ((m_ - m_.transpose()).norm() != 0.0) {
      throw ValidationError("mass matrix is not symmetric");
    }
    Eigen::LLT<Matrix> llt(m_);
    if (llt.info() != Eigen::Success) {
      throw ValidationError("mass matrix is not positive definite");
    }
    inverse_ = llt.solve(Matrix::Identity(m_.rows(), m_.cols()));
    log_det_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  static MassMatrix scalar(int dim, double m) { return MassMatrix(m * Matrix::Identity(dim, dim)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  const Matrix& inverse() const { return inverse_; }
  double log_det() const { return log_det_; }
  bool is_diagonal() const { return m_.isDiagonal(0.0); }

 private:
  Matrix m_;
  Matrix inverse_;
  double log_det_ = 0.0;
};

struct BuiltinParams {
  double omega = 1.0;
  double mass = 1.0;
  int dim = 1;
};

/// Benchmark potentials as exact monomial expansions:
///   single_well_1d       1/2 x^2 + 0.1 x^4
///   double_well_1d       4 - 4 x^2 + x^4
///   asym_double_well_2d  (x^2 - 2)^2 + 0.1 x + 0.5 (y - 0.5 x)^2 + 0.1 y^4
///   harmonic             1/2 m w^2 |x|^2 in params.dim dimensions
inline Potential builtin_potential(std::string_view name, const BuiltinParams& params = {}) {
  auto x = [](int var, int e) { return Monomial::power(var, e); };
  if (name == "single_well_1d") {
    return Potential(1, {make_term(1, 0.5, x(0, 2)), make_term(1, 0.1, x(0, 4))});
  }
  if (name == "double_well_1d") {
    return Potential(1, {make_term(1, 4.0, Monomial{}), make_term(1, -4.0, x(0, 2)),
                         make_term(1, 1.0, x(0, 4))});
  }
  if (name == "asym_double_well_2d") {
    // (x^2-2)^2 = x^4 - 4x^2 + 4;  0.5 (y - 0.5x)^2 = 0.5 y^2 - 0.5 xy + 0.125 x^2
    return Potential(2, {make_term(2, 1.0, x(0, 4)), make_term(2, -3.875, x(0, 2)),
                         make_term(2, 4.0, Monomial{}), make_term(2, 0.1, x(0, 1)),
                         make_term(2, 0.5, x(1, 2)), make_term(2, -0.5, x(0, 1) * x(1, 1)),
                         make_term(2, 0.1, x(1, 4))});
  }
  if (name == "harmonic") {
    if (params.dim < 1 || params.omega <= 0.0 || params.mass <= 0.0) {
      throw ValidationError("harmonic potential needs dim >= 1, omega > 0, mass > 0");
    }
    Potential p(params.dim);
    const double k = 0.5 * params.mass * params.omega * params.omega;
    for (int i = 0; i < params.dim; ++i) p.add(make_term(params.dim, k, x(i, 2)));
    return p;
  }
  throw ValidationError("unknown builtin potential '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Text form: one term per line,
//   coeff * x1^a1 * ... * xD^aD [* gauss(s1, ..., sD; A11, A12, ..., ADD)]
// Variables are 1-based. Coefficients are written with 17 significant digits.

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view s) {
  s = trim(s);
  std::string tmp(s);
  if (tmp.empty()) throw ValidationError("expected a number");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    throw ValidationError("expected a number, got '" + tmp + "'");
  }
  if (used != tmp.size()) throw ValidationError("expected a number, got '" + tmp + "'");
  return v;
}

inline std::vector<double> parse_real_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(parse_real(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Splits on `sep` outside parentheses and brackets.
inline std::vector<std::string_view> split_top(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == sep && depth == 0) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

}  // namespace detail

inline PolyGaussTerm parse_term(std::string_view line, int dim) {
  using detail::trim;
  double coeff = 1.0;
  Monomial mono;
  Vector center = Vector::Zero(dim);
  Matrix width = Matrix::Zero(dim, dim);
  bool saw_factor = false;
  for (std::string_view factor : detail::split_top(line, '*')) {
    factor = trim(factor);
    if (factor.empty()) throw ValidationError("empty factor in potential term");
    saw_factor = true;
    if (factor.starts_with("gauss")) {
      const auto open = factor.find('(');
      const auto close = factor.rfind(')');
      if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw ValidationError("malformed gauss(...) factor");
      }
      const auto inner = factor.substr(open + 1, close - open - 1);
      const auto semi = inner.find(';');
      if (semi == std::string_view::npos) {
        throw ValidationError("gauss(center; width) needs a ';' separator");
      }
      const auto c = detail::parse_real_list(inner.substr(0, semi));
      const auto w = detail::parse_real_list(inner.substr(semi + 1));
      if (static_cast<int>(c.size()) != dim || static_cast<int>(w.size()) != dim * dim) {
        throw ValidationError("gauss(...) needs " + std::to_string(dim) + " center entries and " +
                              std::to_string(dim * dim) + " width entries");
      }
      for (int i = 0; i < dim; ++i) center[i] = c[i];
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) width(i, j) = w[i * dim + j];
      }
    } else if (factor.front() == 'x') {
      const auto caret = factor.find('^');
      const auto var_text = factor.substr(1, caret == std::string_view::npos ? factor.size() - 1
                                                                             : caret - 1);
      int var = 0;
      try {
        var = std::stoi(std::string(var_text));
      } catch (const std::exception&) {
        throw ValidationError("bad variable '" + std::string(factor) + "'");
      }
      if (var < 1 || var > dim) {
        throw ValidationError("variable x" + std::to_string(var) + " outside x1..x" +
                              std::to_string(dim));
      }
      int e = 1;
      if (caret != std::string_view::npos) {
        try {
          e = std::stoi(std::string(factor.substr(caret + 1)));
        } catch (const std::exception&) {
          throw ValidationError("bad exponent in '" + std::string(factor) + "'");
        }
      }
      mono = mono * Monomial::power(var - 1, e);
    } else {
      coeff *= detail::parse_real(factor);
    }
  }
  if (!saw_factor) throw ValidationError("empty potential term");
  PolyGaussTerm term{coeff, Polynomial::monomial(dim, mono), center, width};
  term.validate(dim);
  return term;
}

/// Serializes each (term, monomial) pair as one line.
inline std::string to_text(const Potential& p) {
  std::ostringstream out;
  const int dim = p.dim();
  for (const auto& t : p.terms()) {
    for (const auto& [m, c] : t.poly.terms()) {
      out << format_real(t.coeff * c);
      for (int i = 0; i < dim; ++i) {
        if (m.exponent(i) > 0) out << " * x" << (i + 1) << '^' << m.exponent(i);
      }
      if (t.has_gaussian()) {
        out << " * gauss(";
        for (int i = 0; i < dim; ++i) out << (i ? ", " : "") << format_real(t.center[i]);
        out << ';';
        for (int i = 0; i < dim; ++i) {
          for (int j = 0; j < dim; ++j) out << ' ' << format_real(t.width(i, j)) << (i * dim + j + 1 < dim * dim ? "," : "");
        }
        out << ')';
      }
      out << '\n';
    }
  }
  return out.str();
}

/// Parses the text form; blank lines and '#' comments are skipped. Errors
/// carry the 1-based line number.
inline Potential parse_potential(std::string_view text, int dim) {
  Potential p(dim);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (!line.empty()) {
      try {
        p.add(parse_term(line, dim));
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return p;
}

}  // namespace gres
