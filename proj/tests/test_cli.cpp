// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "gres_cli_test";

int gres(const std::string& args) {
  const std::string cmd = std::string(GRES_CLI) + " " + args + " >" + (kDir / "stdout.txt").string() + " 2>" +
                          (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Fresh {
  Fresh() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~Fresh() { fs::remove_all(kDir); }
};

}  // namespace

TEST_CASE("presets and check", "[cli]") {
  Fresh f;
  CHECK(gres("presets") == 0);
  CHECK(read(kDir / "stdout.txt") == "fig1\nfig2\nfig2_unsym\nfig3\nfig4\n");
  CHECK(gres("presets -o " + (kDir / "p").string()) == 0);
  CHECK(fs::exists(kDir / "p" / "fig4.run"));
  CHECK(gres("check " + (kDir / "p" / "fig1.run").string()) == 0);
  const auto canonical = read(kDir / "stdout.txt");
  CHECK(gres("check --preset fig1") == 0);
  CHECK(read(kDir / "stdout.txt") == canonical);
  CHECK(gres("presets fig9") == 2);
}

TEST_CASE("run writes tables and rejects bad input without partial output", "[cli]") {
  Fresh f;
  CHECK(gres("run --preset fig1 -o " + (kDir / "out").string()) == 0);
  for (const char* name : {"fig1_gauss.csv", "fig1_ed.csv", "fig1_classical.csv", "fig1_manifest.json"}) {
    CHECK(fs::exists(kDir / "out" / name));
  }
  const auto first = read(kDir / "out" / "fig1_gauss.csv");
  CHECK(first.rfind("kT,beta,Z,var_x\n", 0) == 0);
  CHECK(gres("run --preset fig1 -j 2 -o " + (kDir / "out").string()) == 0);
  CHECK(read(kDir / "out" / "fig1_gauss.csv") == first);

  const std::string out = (kDir / "out").string();
  CHECK(gres("diff " + out + "/fig1_gauss.csv " + out + "/fig1_ed.csv --rtol 0.02 --columns var_x") == 0);
  CHECK(gres("diff " + out + "/fig1_gauss.csv " + out +
             "/fig1_classical.csv --rtol 0.02 --columns var_x --kt-min 0.2 --kt-max 0.21") == 4);
  CHECK(gres("diff " + out + "/fig1_gauss.csv " + out + "/fig1_gauss.csv") == 0);
  CHECK(gres("diff " + out + "/fig1_gauss.csv " + out + "/fig1_manifest.json") == 2);

  write(kDir / "bad.run", "method = gauss\ndim = 1\npotential = builtin single_well_1d\nfoo = 1\n");
  CHECK(gres("run " + (kDir / "bad.run").string() + " -o " + (kDir / "bad").string()) == 2);
  CHECK(read(kDir / "stderr.txt").find("line 4: unknown key 'foo'") != std::string::npos);
  CHECK_FALSE(fs::exists(kDir / "bad"));
}

TEST_CASE("numerical failure exits with code 3 and names the member", "[cli]") {
  Fresh f;
  write(kDir / "inverted.run", R"(method = gauss, ed
dim = 1
potential = -0.5 * x1^2
grid.min = -1
grid.max = 1
grid.points = 2
temperatures = 0.2
ed.min = -5
ed.max = 5
ed.points = 51
)");
  CHECK(gres("run " + (kDir / "inverted.run").string() + " -o " + (kDir / "o").string()) == 3);
  const auto err = read(kDir / "stderr.txt");
  CHECK(err.find("q=(-0.5") != std::string::npos);
  CHECK(err.find("tau=") != std::string::npos);
  CHECK_FALSE(fs::exists(kDir / "o" / "run_ed.csv"));
}

TEST_CASE("trajectory dump", "[cli]") {
  Fresh f;
  CHECK(gres("trajectory --preset fig2 -m 3 -o " + (kDir / "t.csv").string()) == 0);
  const auto text = read(kDir / "t.csv");
  CHECK(text.find("# sector even\ntau,gamma,q1,G11,gram_condition\n") == 0);
  CHECK(text.find("# sector odd") != std::string::npos);
  CHECK(gres("trajectory --preset fig2 -m 99") == 2);
}
