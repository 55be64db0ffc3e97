// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <boost/version.hpp>
#include <Eigen/Core>

#include "json.hpp"

#include "gres/runfile.hpp"

namespace gres {

struct DensityTable {
  int dim = 1;
  std::vector<Vector> points;
  std::vector<double> temperatures;
  std::vector<std::vector<double>> values;  // [temperature][point]
};

struct MethodOutput {
  Method method = Method::gauss;
  ThermalScan scan;
  std::optional<DensityTable> density;
  double seconds = 0.0;
};

struct GaussStats {
  long members = 0;
  long empty = 0;
  long regularization_events = 0;
  long regularized_members = 0;
  long rejected_steps = 0;
  long accepted_steps = 0;
  std::vector<DroppedMember> dropped;
};

struct RunResult {
  std::vector<MethodOutput> outputs;
  GaussStats gauss;
  std::optional<Ensemble> ensemble;

  const MethodOutput& output(Method m) const {
    for (const auto& o : outputs) {
      if (o.method == m) return o;
    }
    throw ValidationError(std::string("run has no ") + to_string(m) + " output");
  }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline Ensemble run_ensemble(const RunConfig& c, int workers_override = 0) {
  EnsembleOptions opt;
  opt.policy = c.policy;
  opt.workers = workers_override > 0 ? workers_override : c.workers;
  opt.sectors = c.sectors;
  const auto cps = c.checkpoints();
  return propagate_ensemble(build_grid(c.grid), c.mass, c.potential, c.effective_tau_max(), cps, c.mask(),
                            c.integrator, c.adapter(), opt);
}

/// Runs every requested method. Nothing is written here.
inline RunResult execute(const RunConfig& c, int workers_override = 0) {
  RunResult res;
  const auto obs = c.named_observables();
  const auto density_points = c.density.enabled() ? c.density.grid() : std::vector<Vector>{};
  auto density_table = [&]() {
    DensityTable t;
    t.dim = c.dim;
    t.points = density_points;
    t.temperatures = c.density.temperatures;
    return t;
  };

  for (Method m : c.methods) {
    const auto t0 = std::chrono::steady_clock::now();
    MethodOutput out;
    out.method = m;
    if (m == Method::gauss) {
      Ensemble ens = run_ensemble(c, workers_override);
      if (ens.members.empty()) throw NumericalError("every ensemble member failed or was empty");
      out.scan = thermal_scan(ens, c.temperatures, obs,
                              {.energy = c.thermal_energy, .mass = &c.mass, .potential = &c.potential});
      if (c.density.enabled()) {
        auto t = density_table();
        for (double kT : c.density.temperatures) {
          t.values.push_back(sym_assemble(ens, ens.symmetry, 1.0 / kT, {}, density_points).density);
        }
        out.density = std::move(t);
      }
      auto& s = res.gauss;
      s.members = static_cast<long>(ens.members.size());
      s.empty = static_cast<long>(ens.empty.size());
      s.dropped = ens.dropped;
      for (const auto& w : ens.members) {
        const long ev = w.trajectory.regularization_events();
        s.regularization_events += ev;
        s.regularized_members += ev > 0;
        s.rejected_steps += w.trajectory.rejected_steps;
        s.accepted_steps += static_cast<long>(w.trajectory.steps.size());
      }
      res.ensemble = std::move(ens);
    } else if (m == Method::ed) {
      const auto spec = ed_solve(c.potential, c.mass, c.ed);
      out.scan = ed_scan(spec, c.temperatures, obs, c.thermal_energy);
      if (c.density.enabled()) {
        auto t = density_table();
        for (double kT : c.density.temperatures) t.values.push_back(ed_density(spec, 1.0 / kT, density_points));
        out.density = std::move(t);
      }
    } else {
      out.scan = classical_scan(c.potential, c.mass, c.temperatures, obs, c.classical, c.thermal_energy);
      if (c.density.enabled()) {
        auto t = density_table();
        for (double kT : c.density.temperatures) {
          t.values.push_back(classical_density(c.potential, 1.0 / kT, density_points, c.classical));
        }
        out.density = std::move(t);
      }
    }
    out.seconds = detail::seconds_since(t0);
    res.outputs.push_back(std::move(out));
  }
  return res;
}

inline void write_density_csv(std::ostream& out, const DensityTable& t) {
  for (int i = 0; i < t.dim; ++i) out << (i ? "," : "") << coordinate_name(t.dim, i);
  for (double kT : t.temperatures) out << ",rho_kT=" << format_real(kT);
  out << "\n";
  for (std::size_t p = 0; p < t.points.size(); ++p) {
    for (int i = 0; i < t.dim; ++i) out << (i ? "," : "") << format_real(t.points[p][i]);
    for (const auto& v : t.values) out << "," << format_real(v[p]);
    out << "\n";
  }
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

inline std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_runfile(c)); }

inline std::string output_name(const RunConfig& c, Method m, bool density = false) {
  return c.output_prefix + "_" + to_string(m) + (density ? "_density" : "") + ".csv";
}

inline nlohmann::ordered_json run_manifest(const RunConfig& c, const RunResult& r, const std::string& source,
                                           const std::vector<std::string>& files, int workers) {
  nlohmann::ordered_json j;
  j["tool"] = "gres";
  j["version"] = "0.1.0";
  j["config_hash"] = config_hash(c);
  j["source"] = source;
  j["config"] = canonical_runfile(c);
  j["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"boost", BOOST_LIB_VERSION},
                    {"openssl", OPENSSL_VERSION_TEXT}};
  j["workers"] = workers;
  nlohmann::ordered_json timings;
  for (const auto& o : r.outputs) timings[to_string(o.method)] = o.seconds;
  j["timings_s"] = timings;
  if (c.has(Method::gauss)) {
    nlohmann::ordered_json g;
    g["members"] = r.gauss.members;
    g["empty_sector_members"] = r.gauss.empty;
    g["accepted_steps"] = r.gauss.accepted_steps;
    g["rejected_steps"] = r.gauss.rejected_steps;
    g["regularization_events"] = r.gauss.regularization_events;
    g["regularized_members"] = r.gauss.regularized_members;
    g["regularized_rows"] = r.output(Method::gauss).scan.regularized_rows();
    auto dropped = nlohmann::ordered_json::array();
    for (const auto& d : r.gauss.dropped) {
      dropped.push_back({{"q", std::vector<double>(d.position.data(), d.position.data() + d.position.size())},
                         {"sector", to_string(d.sector)},
                         {"reason", d.reason}});
    }
    g["dropped"] = dropped;
    j["gauss"] = g;
  }
  j["outputs"] = files;
  return j;
}

/// Writes every file to a temporary name first and renames them only once
/// all of them were written, so a failed run leaves no partial outputs.
class AtomicWriter {
 public:
  explicit AtomicWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  AtomicWriter(const AtomicWriter&) = delete;
  AtomicWriter& operator=(const AtomicWriter&) = delete;

  ~AtomicWriter() {
    std::error_code ec;
    for (const auto& [tmp, final] : staged_) std::filesystem::remove(tmp, ec);
  }

  void add(const std::string& name, const std::string& content) {
    const auto final = dir_ / name;
    auto tmp = final;
    tmp += ".tmp";
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write " + tmp.string());
    staged_.emplace_back(tmp, final);
    f << content;
    f.close();
    if (!f) throw Error("failed writing " + tmp.string());
  }

  void commit() {
    for (const auto& [tmp, final] : staged_) std::filesystem::rename(tmp, final);
    staged_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
};

/// Writes the scan and density CSVs plus the manifest. Returns the file names.
inline std::vector<std::string> write_outputs(const RunConfig& c, const RunResult& r,
                                              const std::filesystem::path& dir, const std::string& source,
                                              int workers) {
  std::filesystem::create_directories(dir);
  AtomicWriter w(dir);
  std::vector<std::string> files;
  for (const auto& o : r.outputs) {
    std::ostringstream s;
    write_scan_csv(s, o.scan);
    files.push_back(output_name(c, o.method));
    w.add(files.back(), s.str());
    if (o.density) {
      std::ostringstream d;
      write_density_csv(d, *o.density);
      files.push_back(output_name(c, o.method, true));
      w.add(files.back(), d.str());
    }
  }
  const std::string manifest_name = c.output_prefix + "_manifest.json";
  w.add(manifest_name, run_manifest(c, r, source, files, workers).dump(2) + "\n");
  w.commit();
  files.push_back(manifest_name);
  return files;
}

// Table comparison ---------------------------------------------------------

struct DiffTolerance {
  double rtol = 0.0;
  double atol = 0.0;
  std::vector<std::string> columns;  // empty: every column except kT and beta
  double kt_min = 0.0;
  double kt_max = std::numeric_limits<double>::infinity();
};

struct ColumnDiff {
  std::string name;
  double max_rel = 0.0;  // |a - b| / max(|a|, |b|)
  double max_abs = 0.0;
  double worst_kt = 0.0;
  bool pass = true;
};

struct DiffReport {
  std::vector<ColumnDiff> columns;
  long rows_compared = 0;
  bool pass = true;
};

/// Compares two thermal tables row by row. Both must have the same columns
/// (or at least the selected ones) and the same kT column.
inline DiffReport diff_tables(const CsvTable& a, const CsvTable& b, const DiffTolerance& tol) {
  if (tol.rtol < 0.0 || tol.atol < 0.0) throw ValidationError("tolerances must be >= 0");
  const int ka = a.column("kT"), kb = b.column("kT");
  if (ka < 0 || kb < 0) throw ValidationError("both tables need a kT column");
  std::vector<std::string> cols = tol.columns;
  if (cols.empty()) {
    if (a.columns != b.columns) throw ValidationError("column headers differ");
    for (const auto& c : a.columns) {
      if (c != "kT" && c != "beta") cols.push_back(c);
    }
  }
  for (const auto& c : cols) {
    if (a.column(c) < 0 || b.column(c) < 0) throw ValidationError("column '" + c + "' missing from one table");
  }
  if (a.rows.size() != b.rows.size()) throw ValidationError("tables have different row counts");
  DiffReport rep;
  for (const auto& c : cols) rep.columns.push_back({c});
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const double kt = a.rows[i][ka];
    if (std::abs(kt - b.rows[i][kb]) > 1e-12 * std::abs(kt)) {
      throw ValidationError("kT columns differ at row " + std::to_string(i + 2));
    }
    if (kt < tol.kt_min || kt > tol.kt_max) continue;
    ++rep.rows_compared;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double x = a.rows[i][a.column(cols[k])];
      const double y = b.rows[i][b.column(cols[k])];
      const double abs_dev = std::abs(x - y);
      const double scale = std::max(std::abs(x), std::abs(y));
      const double rel = abs_dev == 0.0 ? 0.0 : abs_dev / scale;
      auto& cd = rep.columns[k];
      if (rep.rows_compared == 1 || rel > cd.max_rel) cd.worst_kt = kt;
      cd.max_rel = std::max(cd.max_rel, rel);
      cd.max_abs = std::max(cd.max_abs, abs_dev);
      if (!(abs_dev <= tol.atol + tol.rtol * scale)) cd.pass = false;
    }
  }
  if (rep.rows_compared == 0) throw ValidationError("no rows inside the selected kT range");
  for (const auto& cd : rep.columns) rep.pass = rep.pass && cd.pass;
  return rep;
}

}  // namespace gres
