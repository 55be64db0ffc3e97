// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: run files, figure presets, table comparison and
// trajectory dumps.
//
// Exit codes: 0 ok, 1 I/O or internal error, 2 invalid input, 3 numerical
// failure, 4 tables differ beyond the tolerance.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gres/runner.hpp"

namespace fs = std::filesystem;
using namespace gres;

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kValidation = 2;
constexpr int kNumerical = 3;
constexpr int kDiffFailed = 4;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Source {
  std::string text;
  std::string label;
};

Source load(const std::string& runfile, const std::string& preset) {
  if (!preset.empty()) return {preset_runfile(preset), "preset:" + preset};
  if (runfile.empty()) throw ValidationError("give a run file or --preset");
  return {slurp(runfile), runfile};
}

RunConfig parse_source(const Source& s) {
  try {
    return parse_runfile(s.text);
  } catch (const ValidationError& e) {
    throw ValidationError(s.label + ": " + e.what());
  }
}

CsvTable read_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read " + path);
  try {
    return read_csv(f);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

int cmd_run(const std::string& runfile, const std::string& preset, const std::string& out_dir, int workers) {
  const auto src = load(runfile, preset);
  const auto cfg = parse_source(src);
  const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
  const int used = worker_count(workers > 0 ? workers : cfg.workers);
  const auto result = execute(cfg, used);
  const auto files = write_outputs(cfg, result, dir, src.label, used);
  for (const auto& o : result.outputs) {
    std::cerr << to_string(o.method) << ": " << o.scan.rows.size() << " temperatures in "
              << format_real(o.seconds) << " s\n";
  }
  if (cfg.has(Method::gauss)) {
    std::cerr << "gauss: " << result.gauss.members << " members, " << result.gauss.dropped.size()
              << " dropped, " << result.gauss.regularization_events << " regularized steps\n";
  }
  for (const auto& f : files) std::cout << (dir / f).string() << "\n";
  return kOk;
}

int cmd_check(const std::string& runfile, const std::string& preset) {
  const auto cfg = parse_source(load(runfile, preset));
  std::cout << "# config_hash " << config_hash(cfg) << "\n" << canonical_runfile(cfg);
  return kOk;
}

int cmd_presets(const std::string& name, const std::string& out_dir, bool print) {
  std::vector<std::string> names = name.empty() ? preset_names() : std::vector<std::string>{name};
  for (const auto& n : names) preset_runfile(n);
  if (print) {
    for (const auto& n : names) std::cout << preset_runfile(n);
    return kOk;
  }
  if (out_dir.empty()) {
    for (const auto& n : names) std::cout << n << "\n";
    return kOk;
  }
  fs::create_directories(out_dir);
  AtomicWriter w(out_dir);
  for (const auto& n : names) w.add(n + ".run", preset_runfile(n));
  w.commit();
  for (const auto& n : names) std::cout << (fs::path(out_dir) / (n + ".run")).string() << "\n";
  return kOk;
}

int cmd_diff(const std::string& a, const std::string& b, const DiffTolerance& tol) {
  const auto report = diff_tables(read_table(a), read_table(b), tol);
  std::printf("%-12s %14s %14s %12s %s\n", "column", "max_rel", "max_abs", "worst_kT", "status");
  for (const auto& c : report.columns) {
    std::printf("%-12s %14.6e %14.6e %12.6g %s\n", c.name.c_str(), c.max_rel, c.max_abs, c.worst_kt,
                c.pass ? "ok" : "FAIL");
  }
  std::printf("%ld rows compared: %s\n", report.rows_compared, report.pass ? "pass" : "fail");
  return report.pass ? kOk : kDiffFailed;
}

int cmd_trajectory(const std::string& runfile, const std::string& preset, long member, const std::string& out,
                   int workers) {
  const auto cfg = parse_source(load(runfile, preset));
  if (!cfg.has(Method::gauss)) throw ValidationError("trajectory needs a run file with the gauss method");
  RunConfig one = cfg;
  const auto grid = build_grid(cfg.grid);
  if (member < 0 || member >= static_cast<long>(grid.size())) {
    throw ValidationError("member index out of range (grid has " + std::to_string(grid.size()) + " points)");
  }
  one.grid = GridSpec::explicit_points({grid[member].position}, {grid[member].weight});
  const auto ens = run_ensemble(one, workers);
  std::ostringstream s;
  for (const auto& m : ens.members) {
    if (ens.members.size() > 1) s << "# sector " << to_string(m.sector) << "\n";
    write_trajectory_csv(s, m.trajectory);
  }
  if (out.empty()) {
    std::cout << s.str();
  } else {
    const fs::path p(out);
    AtomicWriter w(p.has_parent_path() ? p.parent_path() : fs::path("."));
    w.add(p.filename().string(), s.str());
    w.commit();
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal averages from imaginary-time Gaussian wavepackets"};
  app.require_subcommand(1);

  std::string runfile, preset, out_dir;
  int workers = 0;

  auto* run = app.add_subcommand("run", "Execute a run file and write CSV tables plus a manifest");
  run->add_option("runfile", runfile, "Run file");
  run->add_option("--preset", preset, "Use a built-in figure preset instead of a file");
  run->add_option("-o,--out-dir", out_dir, "Output directory (overrides output.dir)");
  run->add_option("-j,--workers", workers, "Worker threads (default: GRES_WORKERS or all cores)");

  auto* check = app.add_subcommand("check", "Validate a run file and print its canonical form and hash");
  check->add_option("runfile", runfile, "Run file");
  check->add_option("--preset", preset, "Check a built-in preset");

  std::string preset_name;
  bool print = false;
  auto* presets = app.add_subcommand("presets", "List, print or write the figure presets");
  presets->add_option("name", preset_name, "Preset name (default: all)");
  presets->add_option("-o,--out-dir", out_dir, "Write <name>.run files here");
  presets->add_flag("--print", print, "Print the run file text");

  std::string a, b;
  DiffTolerance tol;
  auto* diff = app.add_subcommand("diff", "Compare two thermal tables column by column");
  diff->add_option("a", a, "First CSV")->required();
  diff->add_option("b", b, "Second CSV")->required();
  diff->add_option("--rtol", tol.rtol, "Relative tolerance");
  diff->add_option("--atol", tol.atol, "Absolute tolerance");
  diff->add_option("--columns", tol.columns, "Columns to compare (default: all but kT, beta)")->delimiter(',');
  diff->add_option("--kt-min", tol.kt_min, "Only rows with kT >= this");
  diff->add_option("--kt-max", tol.kt_max, "Only rows with kT <= this");

  long member = 0;
  std::string out;
  auto* traj = app.add_subcommand("trajectory", "Dump the trajectory of one grid member as CSV");
  traj->add_option("runfile", runfile, "Run file");
  traj->add_option("--preset", preset, "Use a built-in preset");
  traj->add_option("-m,--member", member, "Grid point index")->required();
  traj->add_option("-o,--out", out, "Output file (default: stdout)");
  traj->add_option("-j,--workers", workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(runfile, preset, out_dir, workers);
    if (*check) return cmd_check(runfile, preset);
    if (*presets) return cmd_presets(preset_name, out_dir, print);
    if (*diff) return cmd_diff(a, b, tol);
    if (*traj) return cmd_trajectory(runfile, preset, member, out, workers);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
