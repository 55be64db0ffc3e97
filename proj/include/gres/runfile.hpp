// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gres/ensemble.hpp"
#include "gres/oracle.hpp"

namespace gres {

// Run files: one `key = value` per line, '#' starts a comment, and multi-line
// values are written as
//
//   key <<
//   ...
//   >>
//
// Every key is listed in `known_keys()`; observables use `observable.<name>`.

enum class Method { gauss, ed, classical };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::gauss: return "gauss";
    case Method::ed: return "ed";
    case Method::classical: return "classical";
  }
  return "?";
}

struct DensityRequest {
  std::vector<double> temperatures;
  Vector lower;
  Vector upper;
  std::vector<int> points;

  bool enabled() const { return !temperatures.empty(); }

  /// Equidistant points including both ends, first coordinate slowest.
  std::vector<Vector> grid() const {
    const int d = static_cast<int>(lower.size());
    long total = 1;
    for (int n : points) total *= n;
    std::vector<Vector> out;
    out.reserve(total);
    std::vector<int> idx(d, 0);
    for (long k = 0; k < total; ++k) {
      long rest = k;
      Vector x(d);
      for (int i = d - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(rest % points[i]);
        rest /= points[i];
      }
      for (int i = 0; i < d; ++i) {
        x[i] = points[i] == 1 ? lower[i]
                             : lower[i] + (upper[i] - lower[i]) * idx[i] / (points[i] - 1);
      }
      out.push_back(std::move(x));
    }
    return out;
  }
};

struct RunConfig {
  int dim = 1;
  std::vector<Method> methods;
  std::string potential_builtin;  // empty when given as terms
  BuiltinParams builtin_params;
  Potential potential;
  MassMatrix mass = MassMatrix::scalar(1, 1.0);
  GridSpec grid;
  bool diagonal_mask = false;
  SymmetryGroup symmetry = SymmetryGroup::none;
  int particles = 0;
  int dims_per_particle = 1;
  std::vector<Sector> sectors;  // empty: all sectors of the group
  IntegratorConfig integrator;
  double tau_max = 0.0;         // 0: the largest checkpoint
  std::vector<double> temperatures;
  std::vector<std::string> observable_names;
  std::vector<Potential> observables;
  bool thermal_energy = false;
  DensityRequest density;
  EDConfig ed;
  ClassicalConfig classical;
  FailurePolicy policy = FailurePolicy::abort;
  int workers = 0;
  std::string output_dir = ".";
  std::string output_prefix = "run";

  bool has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

  ParamMask mask() const { return diagonal_mask ? ParamMask::diagonal_width(dim) : ParamMask::full(dim); }

  SymmetryAdapter adapter() const {
    switch (symmetry) {
      case SymmetryGroup::none: return SymmetryAdapter::none(dim);
      case SymmetryGroup::reflection: return SymmetryAdapter::reflection(dim);
      case SymmetryGroup::permutation:
        return SymmetryAdapter::permutation(particles, dims_per_particle, dim);
    }
    return SymmetryAdapter::none(dim);
  }

  std::vector<NamedObservable> named_observables() const {
    std::vector<NamedObservable> out;
    for (std::size_t i = 0; i < observables.size(); ++i) out.push_back({observable_names[i], observables[i]});
    return out;
  }

  /// Every imaginary time the gauss method must store.
  std::vector<double> checkpoints() const {
    std::vector<double> kts = temperatures;
    kts.insert(kts.end(), density.temperatures.begin(), density.temperatures.end());
    return checkpoints_for(kts);
  }

  double effective_tau_max() const {
    const auto c = checkpoints();
    return tau_max > 0.0 ? tau_max : c.back();
  }
};

namespace detail {

struct RawValue {
  std::string text;
  int line = 0;
  bool block = false;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "method", "dim", "potential", "potential.omega", "potential.mass", "mass",
      "grid", "grid.min", "grid.max", "grid.points", "grid.samples", "grid.seed", "grid.positions",
      "mask", "symmetry", "symmetry.particles", "symmetry.dims_per_particle", "symmetry.sectors",
      "integrator.tau0", "integrator.rel_tol", "integrator.abs_tol", "integrator.max_step",
      "integrator.gram_regularization", "integrator.min_width", "integrator.min_step",
      "integrator.max_steps", "tau_max", "temperatures", "thermal_energy",
      "density.kT", "density.min", "density.max", "density.points",
      "ed.min", "ed.max", "ed.points", "ed.check_states", "ed.statistics",
      "classical.min", "classical.max", "classical.tolerance", "classical.max_depth",
      "classical.tail_tol", "policy", "workers", "output.dir", "output.prefix"};
  return keys;
}

[[noreturn]] inline void fail_at(int line, const std::string& msg) {
  throw ValidationError("line " + std::to_string(line) + ": " + msg);
}

inline std::map<std::string, RawValue> tokenize_runfile(std::string_view text) {
  std::map<std::string, RawValue> out;
  std::vector<std::string> lines;
  {
    std::string s(text);
    std::stringstream ss(s);
    std::string l;
    while (std::getline(ss, l)) {
      if (!l.empty() && l.back() == '\r') l.pop_back();
      lines.push_back(l);
    }
  }
  auto insert = [&](std::string key, RawValue v) {
    if (!known_keys().count(key) && key.rfind("observable.", 0) != 0) {
      fail_at(v.line, "unknown key '" + key + "'");
    }
    if (key.rfind("observable.", 0) == 0 && key.size() == 11) fail_at(v.line, "observable needs a name");
    if (out.count(key)) {
      fail_at(v.line, "duplicate key '" + key + "' (first set on line " + std::to_string(out[key].line) + ")");
    }
    out[key] = std::move(v);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    std::string_view l = lines[i];
    if (const auto h = l.find('#'); h != std::string_view::npos) l = l.substr(0, h);
    l = trim(l);
    if (l.empty()) continue;
    if (l.size() > 2 && l.substr(l.size() - 2) == "<<") {
      const std::string key(trim(l.substr(0, l.size() - 2)));
      if (key.empty()) fail_at(line_no, "block without a key");
      std::string body;
      std::size_t j = i + 1;
      for (; j < lines.size(); ++j) {
        if (trim(lines[j]) == ">>") break;
        body += lines[j] + "\n";
      }
      if (j == lines.size()) fail_at(line_no, "block '" + key + "' is not closed with '>>'");
      insert(key, {body, line_no, true});
      i = j;
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) fail_at(line_no, "expected 'key = value'");
    const std::string key(trim(l.substr(0, eq)));
    const std::string value(trim(l.substr(eq + 1)));
    if (key.empty()) fail_at(line_no, "missing key before '='");
    if (value.empty()) fail_at(line_no, "missing value for '" + key + "'");
    insert(key, {value, line_no, false});
  }
  return out;
}

/// Typed access with line-anchored errors.
class RunReader {
 public:
  explicit RunReader(std::map<std::string, RawValue> raw) : raw_(std::move(raw)) {}

  bool has(const std::string& key) const { return raw_.count(key) > 0; }

  int line(const std::string& key) const { return has(key) ? raw_.at(key).line : 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    if (has(key)) fail_at(line(key), key + ": " + msg);
    throw ValidationError("missing key '" + key + "': " + msg);
  }

  const std::string& text(const std::string& key) const {
    if (!has(key)) throw ValidationError("missing required key '" + key + "'");
    return raw_.at(key).text;
  }

  template <class F>
  auto parse(const std::string& key, F&& f) const {
    try {
      return f(text(key));
    } catch (const ValidationError& e) {
      if (!has(key)) throw;
      fail_at(line(key), key + ": " + e.what());
    }
  }

  double real(const std::string& key) const {
    return parse(key, [](const std::string& s) { return parse_real(s); });
  }

  double real_or(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  long integer(const std::string& key) const {
    return parse(key, [](const std::string& s) {
      const double v = parse_real(s);
      if (v != std::floor(v) || std::abs(v) > 9e15) throw ValidationError("expected an integer, got '" + s + "'");
      return static_cast<long>(v);
    });
  }

  long integer_or(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

  std::vector<double> reals(const std::string& key) const {
    return parse(key, [](const std::string& s) { return parse_real_list(s); });
  }

  /// A list of D values, or one value used for every dimension.
  Vector vec(const std::string& key, int dim) const {
    const auto v = reals(key);
    if (v.size() == 1) return Vector::Constant(dim, v[0]);
    if (static_cast<int>(v.size()) != dim) fail(key, "expected 1 or " + std::to_string(dim) + " values");
    return Eigen::Map<const Vector>(v.data(), dim);
  }

  std::vector<int> ints(const std::string& key, int dim) const {
    const auto v = reals(key);
    if (v.size() != 1 && static_cast<int>(v.size()) != dim) {
      fail(key, "expected 1 or " + std::to_string(dim) + " values");
    }
    std::vector<int> out;
    for (int i = 0; i < dim; ++i) {
      const double x = v.size() == 1 ? v[0] : v[i];
      if (x != std::floor(x) || x < 1 || x > 1e7) fail(key, "counts must be positive integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }

  std::string word(const std::string& key, std::initializer_list<const char*> allowed) const {
    const std::string& v = text(key);
    for (const char* a : allowed) {
      if (v == a) return v;
    }
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    fail(key, "expected one of {" + list + "}, got '" + v + "'");
  }

  std::string word_or(const std::string& key, std::initializer_list<const char*> allowed,
                      std::string fallback) const {
    return has(key) ? word(key, allowed) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    return word(key, {"true", "false"}) == "true";
  }

  /// Terms of a potential-like expression, one per line (or a single line).
  Potential terms(const std::string& key, int dim) const {
    const RawValue& v = raw_.at(key);
    Potential p(dim);
    std::stringstream ss(v.text);
    std::string l;
    int offset = v.block ? 1 : 0;
    while (std::getline(ss, l)) {
      std::string_view t = l;
      if (const auto h = t.find('#'); h != std::string_view::npos) t = t.substr(0, h);
      t = trim(t);
      if (!t.empty()) {
        try {
          p.add(parse_term(t, dim));
        } catch (const ValidationError& e) {
          fail_at(v.line + offset, key + ": " + e.what());
        }
      }
      ++offset;
    }
    if (p.terms().empty()) fail(key, "no terms given");
    return p;
  }

  std::vector<std::string> observable_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : raw_) {
      if (k.rfind("observable.", 0) == 0) out.push_back(k);
    }
    // file order, not alphabetical
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return line(a) < line(b); });
    return out;
  }

 private:
  std::map<std::string, RawValue> raw_;
};

inline std::vector<double> parse_temperatures(const std::string& s) {
  std::string_view v = trim(s);
  for (const char* fn : {"logspace", "linspace"}) {
    const std::string_view name(fn);
    if (v.rfind(name, 0) == 0) {
      auto rest = trim(v.substr(name.size()));
      if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
        throw ValidationError(std::string(fn) + " expects (first, last, count)");
      }
      const auto args = parse_real_list(rest.substr(1, rest.size() - 2));
      if (args.size() != 3 || args[2] < 2 || args[2] != std::floor(args[2])) {
        throw ValidationError(std::string(fn) + " expects (first, last, count) with count >= 2");
      }
      const int n = static_cast<int>(args[2]);
      std::vector<double> out;
      const bool log = name == "logspace";
      if (log && !(args[0] > 0.0 && args[1] > 0.0)) throw ValidationError("logspace needs positive ends");
      for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        out.push_back(log ? args[0] * std::pow(args[1] / args[0], t) : args[0] + (args[1] - args[0]) * t);
      }
      out.front() = args[0];
      out.back() = args[1];
      return out;
    }
  }
  auto out = parse_real_list(v);
  if (out.empty()) throw ValidationError("empty temperature list");
  return out;
}

inline Sector parse_sector(std::string_view s) {
  if (s == "even") return Sector::even;
  if (s == "odd") return Sector::odd;
  if (s == "boson") return Sector::boson;
  if (s == "fermion") return Sector::fermion;
  throw ValidationError("unknown sector '" + std::string(s) + "'");
}

}  // namespace detail

/// Parses and validates a run file. Every error names the offending line.
inline RunConfig parse_runfile(std::string_view text) {
  const detail::RunReader r(detail::tokenize_runfile(text));
  RunConfig c;

  c.dim = static_cast<int>(r.integer("dim"));
  if (c.dim < 1 || c.dim > Monomial::kMaxVars) r.fail("dim", "must be between 1 and 16");
  const int d = c.dim;

  {
    const std::string& m = r.text("method");
    for (auto part : detail::split_top(m, ',')) {
      const auto w = detail::trim(part);
      std::vector<Method> add;
      if (w == "all") add = {Method::gauss, Method::ed, Method::classical};
      else if (w == "gauss") add = {Method::gauss};
      else if (w == "ed") add = {Method::ed};
      else if (w == "classical") add = {Method::classical};
      else r.fail("method", "unknown method '" + std::string(w) + "' (gauss, ed, classical, all)");
      for (Method x : add) {
        if (!c.has(x)) c.methods.push_back(x);
      }
    }
  }

  // potential
  {
    const std::string& p = r.text("potential");
    const bool block = r.has("potential") && p.find('\n') != std::string::npos;
    if (!block && p.rfind("builtin ", 0) == 0) {
      c.potential_builtin = std::string(detail::trim(std::string_view(p).substr(8)));
      c.builtin_params.dim = d;
      c.builtin_params.omega = r.real_or("potential.omega", 1.0);
      c.builtin_params.mass = r.real_or("potential.mass", 1.0);
      try {
        c.potential = builtin_potential(c.potential_builtin, c.builtin_params);
      } catch (const ValidationError& e) {
        r.fail("potential", e.what());
      }
      if (c.potential.dim() != d) {
        r.fail("potential", "builtin '" + c.potential_builtin + "' is " + std::to_string(c.potential.dim()) +
                                "-dimensional but dim = " + std::to_string(d));
      }
    } else {
      if (r.has("potential.omega") || r.has("potential.mass")) {
        r.fail(r.has("potential.omega") ? "potential.omega" : "potential.mass",
               "only applies to builtin potentials");
      }
      c.potential = r.terms("potential", d);
    }
  }

  if (r.has("mass")) {
    const auto v = r.reals("mass");
    Matrix m;
    if (v.size() == 1) {
      m = v[0] * Matrix::Identity(d, d);
    } else if (static_cast<int>(v.size()) == d) {
      m = Eigen::Map<const Vector>(v.data(), d).asDiagonal();
    } else if (static_cast<int>(v.size()) == d * d) {
      m = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(v.data(), d, d);
    } else {
      r.fail("mass", "expected 1, D or D*D values");
    }
    try {
      c.mass = MassMatrix(m);
    } catch (const ValidationError& e) {
      r.fail("mass", e.what());
    }
  } else {
    c.mass = MassMatrix::scalar(d, 1.0);
  }

  // temperatures and the optional density request
  c.temperatures = r.parse("temperatures", detail::parse_temperatures);
  for (double t : c.temperatures) {
    if (!(t > 0.0) || !std::isfinite(t)) r.fail("temperatures", "temperatures must be positive");
  }
  if (r.has("density.kT")) {
    c.density.temperatures = r.reals("density.kT");
    for (double t : c.density.temperatures) {
      if (!(t > 0.0)) r.fail("density.kT", "temperatures must be positive");
    }
    c.density.lower = r.vec("density.min", d);
    c.density.upper = r.vec("density.max", d);
    c.density.points = r.ints("density.points", d);
    for (int i = 0; i < d; ++i) {
      if (!(c.density.lower[i] <= c.density.upper[i])) r.fail("density.max", "needs min <= max");
    }
  } else {
    for (const char* k : {"density.min", "density.max", "density.points"}) {
      if (r.has(k)) r.fail(k, "needs density.kT");
    }
  }

  for (const auto& key : r.observable_keys()) {
    const std::string name = key.substr(11);
    for (char ch : name) {
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') {
        r.fail(key, "observable names may only contain letters, digits and '_'");
      }
    }
    c.observable_names.push_back(name);
    c.observables.push_back(r.terms(key, d));
  }
  c.thermal_energy = r.boolean_or("thermal_energy", false);

  if (c.has(Method::gauss)) {
    const std::string mode = r.word_or("grid", {"equidistant", "explicit", "random"}, "equidistant");
    if (mode == "explicit") {
      std::vector<Vector> pts;
      std::vector<double> w;
      std::stringstream ss(r.text("grid.positions"));
      std::string l;
      int offset = r.has("grid.positions") ? 1 : 0;
      const int base = r.line("grid.positions");
      while (std::getline(ss, l)) {
        std::string_view t = l;
        if (const auto h = t.find('#'); h != std::string_view::npos) t = t.substr(0, h);
        t = detail::trim(t);
        if (!t.empty()) {
          try {
            const auto parts = detail::split_top(t, ';');
            if (parts.size() > 2) throw ValidationError("expected 'x1, ..., xD [; weight]'");
            const auto x = detail::parse_real_list(parts[0]);
            if (static_cast<int>(x.size()) != d) throw ValidationError("expected " + std::to_string(d) + " coordinates");
            pts.emplace_back(Eigen::Map<const Vector>(x.data(), d));
            w.push_back(parts.size() == 2 ? detail::parse_real(parts[1]) : 1.0);
          } catch (const ValidationError& e) {
            detail::fail_at(base + offset, std::string("grid.positions: ") + e.what());
          }
        }
        ++offset;
      }
      if (pts.empty()) r.fail("grid.positions", "no points given");
      c.grid = GridSpec::explicit_points(std::move(pts), std::move(w));
    } else if (mode == "random") {
      const long n = r.integer("grid.samples");
      const long seed = r.integer("grid.seed");
      if (seed < 0) r.fail("grid.seed", "must be non-negative");
      c.grid = GridSpec::uniform_random(r.vec("grid.min", d), r.vec("grid.max", d), n,
                                        static_cast<std::uint64_t>(seed));
    } else {
      c.grid = GridSpec::equidistant(r.vec("grid.min", d), r.vec("grid.max", d), r.ints("grid.points", d));
    }
    try {
      c.grid.validate();
    } catch (const ValidationError& e) {
      r.fail(r.has("grid") ? "grid" : (mode == "explicit" ? "grid.positions" : "grid.min"), e.what());
    }

    c.diagonal_mask = r.word_or("mask", {"full", "diagonal"}, "full") == "diagonal";
    const std::string sym = r.word_or("symmetry", {"none", "reflection", "permutation"}, "none");
    c.symmetry = sym == "reflection" ? SymmetryGroup::reflection
                 : sym == "permutation" ? SymmetryGroup::permutation
                                        : SymmetryGroup::none;
    if (c.symmetry == SymmetryGroup::permutation) {
      c.particles = static_cast<int>(r.integer("symmetry.particles"));
      c.dims_per_particle = static_cast<int>(r.integer_or("symmetry.dims_per_particle", 1));
    }
    if (r.has("symmetry.sectors")) {
      const std::string& sv = r.text("symmetry.sectors");
      if (sv != "all") {
        for (auto part : detail::split_top(sv, ',')) {
          try {
            c.sectors.push_back(detail::parse_sector(detail::trim(part)));
          } catch (const ValidationError& e) {
            r.fail("symmetry.sectors", e.what());
          }
        }
      }
    }
    SymmetryAdapter adapter = SymmetryAdapter::none(d);
    try {
      adapter = c.adapter();
    } catch (const ValidationError& e) {
      r.fail("symmetry", e.what());
    }
    for (Sector s : c.sectors) {
      if (!adapter.allows(s)) r.fail("symmetry.sectors", std::string("sector '") + to_string(s) + "' does not belong to the group");
    }

    auto& ic = c.integrator;
    ic.initial_time = r.real_or("integrator.tau0", ic.initial_time);
    ic.rel_tol = r.real_or("integrator.rel_tol", ic.rel_tol);
    ic.abs_tol = r.real_or("integrator.abs_tol", ic.abs_tol);
    ic.max_step = r.real_or("integrator.max_step", ic.max_step);
    ic.gram_regularization = r.real_or("integrator.gram_regularization", ic.gram_regularization);
    ic.min_width = r.real_or("integrator.min_width", ic.min_width);
    ic.min_step = r.real_or("integrator.min_step", ic.min_step);
    ic.max_steps = r.integer_or("integrator.max_steps", ic.max_steps);
    try {
      ic.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("integrator settings (from line " +
                            std::to_string(std::max({r.line("integrator.tau0"), r.line("integrator.rel_tol"),
                                                     r.line("integrator.abs_tol"), r.line("integrator.max_step"),
                                                     r.line("integrator.gram_regularization"),
                                                     r.line("integrator.min_width")})) +
                            "): " + e.what());
    }
    c.tau_max = r.real_or("tau_max", 0.0);
    const auto cps = c.checkpoints();
    if (r.has("tau_max") && c.tau_max < cps.back() * (1.0 - 1e-12)) {
      r.fail("tau_max", "must reach beta/2 of the lowest temperature (" + format_real(cps.back()) + ")");
    }
    if (cps.front() <= ic.initial_time) {
      r.fail("temperatures", "beta/2 of the highest temperature must exceed integrator.tau0 = " +
                                 format_real(ic.initial_time));
    }
    const std::string pol = r.word_or("policy", {"abort", "drop"}, "abort");
    c.policy = pol == "drop" ? FailurePolicy::drop : FailurePolicy::abort;
    c.workers = static_cast<int>(r.integer_or("workers", 0));
    if (c.workers < 0) r.fail("workers", "must be >= 0");
  }

  if (c.has(Method::ed)) {
    c.ed.lower = r.vec("ed.min", d);
    c.ed.upper = r.vec("ed.max", d);
    c.ed.points = r.ints("ed.points", d);
    c.ed.check_states = static_cast<int>(r.integer_or("ed.check_states", c.ed.check_states));
    const std::string st = r.word_or("ed.statistics", {"none", "boson", "fermion"}, "none");
    c.ed.statistics = st == "boson" ? PairStatistics::boson
                      : st == "fermion" ? PairStatistics::fermion
                                        : PairStatistics::none;
    try {
      c.ed.validate();
    } catch (const ValidationError& e) {
      r.fail("ed.points", e.what());
    }
    if (!c.mass.is_diagonal()) r.fail("mass", "the ed method needs a diagonal mass matrix");
  }

  if (c.has(Method::classical)) {
    c.classical.lower = r.vec("classical.min", d);
    c.classical.upper = r.vec("classical.max", d);
    c.classical.tolerance = r.real_or("classical.tolerance", c.classical.tolerance);
    c.classical.max_depth = static_cast<int>(r.integer_or("classical.max_depth", c.classical.max_depth));
    c.classical.tail_tol = r.real_or("classical.tail_tol", c.classical.tail_tol);
    if (d > 2) r.fail("dim", "the classical method supports D = 1 or 2");
    for (int i = 0; i < d; ++i) {
      if (!(c.classical.lower[i] < c.classical.upper[i])) r.fail("classical.max", "needs min < max");
    }
    if (!(c.classical.tolerance > 0.0)) r.fail("classical.tolerance", "must be > 0");
  }

  if (r.has("output.dir")) c.output_dir = r.text("output.dir");
  if (r.has("output.prefix")) {
    c.output_prefix = r.text("output.prefix");
    if (c.output_prefix.find('/') != std::string::npos) r.fail("output.prefix", "must not contain '/'");
  }
  return c;
}

/// The fully resolved configuration, defaults included, as a run file. It
/// parses back to the same configuration and is the input to the run hash.
inline std::string canonical_runfile(const RunConfig& c) {
  std::ostringstream o;
  const int d = c.dim;
  auto list = [](auto begin, auto end) {
    std::string s;
    for (auto it = begin; it != end; ++it) s += (s.empty() ? "" : ", ") + format_real(*it);
    return s;
  };
  auto vec = [&](const Vector& v) { return list(v.data(), v.data() + v.size()); };
  auto ints = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : ", ") + std::to_string(x);
    return s;
  };
  std::string methods;
  for (Method m : c.methods) methods += (methods.empty() ? "" : ", ") + std::string(to_string(m));
  o << "method = " << methods << "\n";
  o << "dim = " << d << "\n";
  if (!c.potential_builtin.empty()) {
    o << "potential = builtin " << c.potential_builtin << "\n";
    o << "potential.omega = " << format_real(c.builtin_params.omega) << "\n";
    o << "potential.mass = " << format_real(c.builtin_params.mass) << "\n";
  } else {
    o << "potential <<\n" << to_text(c.potential) << ">>\n";
  }
  {
    const Matrix& m = c.mass.matrix();
    std::vector<double> flat;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) flat.push_back(m(i, j));
    }
    o << "mass = " << list(flat.begin(), flat.end()) << "\n";
  }
  o << "temperatures = " << list(c.temperatures.begin(), c.temperatures.end()) << "\n";
  for (std::size_t i = 0; i < c.observables.size(); ++i) {
    o << "observable." << c.observable_names[i] << " <<\n" << to_text(c.observables[i]) << ">>\n";
  }
  o << "thermal_energy = " << (c.thermal_energy ? "true" : "false") << "\n";
  if (c.density.enabled()) {
    o << "density.kT = " << list(c.density.temperatures.begin(), c.density.temperatures.end()) << "\n";
    o << "density.min = " << vec(c.density.lower) << "\n";
    o << "density.max = " << vec(c.density.upper) << "\n";
    o << "density.points = " << ints(c.density.points) << "\n";
  }
  if (c.has(Method::gauss)) {
    switch (c.grid.mode) {
      case GridMode::equidistant:
        o << "grid = equidistant\ngrid.min = " << vec(c.grid.lower) << "\ngrid.max = " << vec(c.grid.upper)
          << "\ngrid.points = " << ints(c.grid.counts) << "\n";
        break;
      case GridMode::uniform_random:
        o << "grid = random\ngrid.min = " << vec(c.grid.lower) << "\ngrid.max = " << vec(c.grid.upper)
          << "\ngrid.samples = " << c.grid.samples << "\ngrid.seed = " << c.grid.seed << "\n";
        break;
      case GridMode::explicit_points:
        o << "grid = explicit\ngrid.positions <<\n";
        for (std::size_t i = 0; i < c.grid.points.size(); ++i) {
          o << vec(c.grid.points[i]) << "; "
            << format_real(c.grid.weights.empty() ? 1.0 : c.grid.weights[i]) << "\n";
        }
        o << ">>\n";
        break;
    }
    o << "mask = " << (c.diagonal_mask ? "diagonal" : "full") << "\n";
    switch (c.symmetry) {
      case SymmetryGroup::none: o << "symmetry = none\n"; break;
      case SymmetryGroup::reflection: o << "symmetry = reflection\n"; break;
      case SymmetryGroup::permutation:
        o << "symmetry = permutation\nsymmetry.particles = " << c.particles
          << "\nsymmetry.dims_per_particle = " << c.dims_per_particle << "\n";
        break;
    }
    std::string sectors;
    for (Sector s : c.sectors) sectors += (sectors.empty() ? "" : ", ") + std::string(to_string(s));
    o << "symmetry.sectors = " << (sectors.empty() ? "all" : sectors) << "\n";
    const auto& ic = c.integrator;
    o << "integrator.tau0 = " << format_real(ic.initial_time) << "\n";
    o << "integrator.rel_tol = " << format_real(ic.rel_tol) << "\n";
    o << "integrator.abs_tol = " << format_real(ic.abs_tol) << "\n";
    o << "integrator.max_step = " << format_real(ic.max_step) << "\n";
    o << "integrator.gram_regularization = " << format_real(ic.gram_regularization) << "\n";
    o << "integrator.min_width = " << format_real(ic.min_width) << "\n";
    o << "integrator.min_step = " << format_real(ic.min_step) << "\n";
    o << "integrator.max_steps = " << ic.max_steps << "\n";
    o << "tau_max = " << format_real(c.effective_tau_max()) << "\n";
    o << "policy = " << (c.policy == FailurePolicy::drop ? "drop" : "abort") << "\n";
    // worker count does not change results and stays out of the canonical form
  }
  if (c.has(Method::ed)) {
    o << "ed.min = " << vec(c.ed.lower) << "\ned.max = " << vec(c.ed.upper) << "\ned.points = "
      << ints(c.ed.points) << "\ned.check_states = " << c.ed.check_states << "\ned.statistics = "
      << (c.ed.statistics == PairStatistics::boson     ? "boson"
          : c.ed.statistics == PairStatistics::fermion ? "fermion"
                                                       : "none")
      << "\n";
  }
  if (c.has(Method::classical)) {
    o << "classical.min = " << vec(c.classical.lower) << "\nclassical.max = " << vec(c.classical.upper)
      << "\nclassical.tolerance = " << format_real(c.classical.tolerance)
      << "\nclassical.max_depth = " << c.classical.max_depth
      << "\nclassical.tail_tol = " << format_real(c.classical.tail_tol) << "\n";
  }
  o << "output.prefix = " << c.output_prefix << "\n";
  return o.str();
}

// Figure presets -----------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig1", "fig2", "fig2_unsym", "fig3", "fig4"};
  return names;
}

inline std::string preset_runfile(std::string_view name) {
  if (name == "fig1") {
    return R"(# Anharmonic single well, 10 equidistant starting points
method = all
dim = 1
potential = builtin single_well_1d
grid = equidistant
grid.min = -5
grid.max = 5
grid.points = 10
integrator.tau0 = 0.01
tau_max = 50
temperatures = logspace(0.1, 10, 40)
ed.min = -8
ed.max = 8
ed.points = 321
classical.min = -20
classical.max = 20
output.prefix = fig1
)";
  }
  if (name == "fig2" || name == "fig2_unsym") {
    const bool sym = name == "fig2";
    return std::string("# Symmetric double well, 14 starting points in (-3, 3)\n") +
           "method = " + (sym ? "all" : "gauss, ed") + R"(
dim = 1
potential = builtin double_well_1d
grid = equidistant
grid.min = -3
grid.max = 3
grid.points = 14
)" + (sym ? "symmetry = reflection\nsymmetry.sectors = even, odd\n" : "symmetry = none\n") +
           R"(integrator.tau0 = 0.01
temperatures = logspace(0.1, 10, 40)
ed.min = -6
ed.max = 6
ed.points = 241
)" + (sym ? "classical.min = -8\nclassical.max = 8\n" : "") +
           "output.prefix = " + std::string(name) + "\n";
  }
  if (name == "fig3") {
    return R"(# Double-well density at kT = 0.5
method = all
dim = 1
potential = builtin double_well_1d
grid = equidistant
grid.min = -3
grid.max = 3
grid.points = 14
symmetry = reflection
symmetry.sectors = even, odd
integrator.tau0 = 0.01
temperatures = 0.5
density.kT = 0.5
density.min = -3.5
density.max = 3.5
density.points = 141
ed.min = -6
ed.max = 6
ed.points = 241
classical.min = -8
classical.max = 8
output.prefix = fig3
)";
  }
  if (name == "fig4") {
    return R"(# Asymmetric two-dimensional double well, 16 x 16 starting points
method = all
dim = 2
potential = builtin asym_double_well_2d
grid = equidistant
grid.min = -4
grid.max = 4
grid.points = 16
integrator.tau0 = 0.01
temperatures = logspace(0.2, 10, 40)
ed.min = -4.5, -6
ed.max = 4.5, 6
ed.points = 46, 61
classical.min = -8, -9
classical.max = 8, 9
classical.tolerance = 1e-9
output.prefix = fig4
)";
  }
  throw ValidationError("unknown preset '" + std::string(name) + "' (fig1, fig2, fig2_unsym, fig3, fig4)");
}

}  // namespace gres
