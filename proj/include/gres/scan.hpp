// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gres/errors.hpp"
#include "gres/potential.hpp"

namespace gres {

struct NamedObservable {
  std::string name;
  Potential op;
};

/// <x_i> and <x_i^2> observables for every coordinate.
inline std::string coordinate_name(int dim, int i) {
  static const char* short_names[] = {"x", "y", "z"};
  if (dim <= 3) return short_names[i];
  return "x" + std::to_string(i + 1);
}

inline Potential coordinate_power(int dim, int i, int power) {
  Potential p(dim);
  p.add(make_term(dim, 1.0, Monomial::power(i, power)));
  return p;
}

struct ScanRow {
  double kT = 0.0;
  double beta = 0.0;
  double z = 0.0;
  std::vector<double> values;     // one per requested observable
  double energy = 0.0;            // only meaningful when the scan has an energy column
  std::vector<double> variances;  // <x_i^2> - <x_i>^2 per coordinate
  bool regularized = false;       // any member hit Gram regularization before beta/2
};

/// Thermal table over a temperature list, shared by the variational method
/// and the oracles so their CSVs can be diffed column by column.
struct ThermalScan {
  int dim = 1;
  std::vector<std::string> observable_names;
  bool has_energy = false;
  std::vector<ScanRow> rows;

  std::vector<std::string> header() const {
    std::vector<std::string> h = {"kT", "beta", "Z"};
    for (const auto& n : observable_names) h.push_back(n);
    if (has_energy) h.push_back("E");
    for (int i = 0; i < dim; ++i) h.push_back("var_" + coordinate_name(dim, i));
    return h;
  }

  long regularized_rows() const {
    long n = 0;
    for (const auto& r : rows) n += r.regularized;
    return n;
  }
};

inline void write_scan_csv(std::ostream& out, const ThermalScan& scan) {
  const auto h = scan.header();
  for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
  out << "\n";
  for (const auto& r : scan.rows) {
    out << format_real(r.kT) << "," << format_real(r.beta) << "," << format_real(r.z);
    for (double v : r.values) out << "," << format_real(v);
    if (scan.has_energy) out << "," << format_real(r.energy);
    for (double v : r.variances) out << "," << format_real(v);
    out << "\n";
  }
}

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.emplace_back(detail::trim(cell));
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    if (t.columns.empty()) {
      t.columns = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(t.columns.size()) + " columns, found " +
                            std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(detail::parse_real(c));
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ValidationError("empty CSV");
  return t;
}

}  // namespace gres
