// Copyright 2026 The mpctri Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Drives the installed binary end to end. MPCTRI_CLI_PATH is injected by the
// build.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/oracle.hpp"

using namespace mpctri;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "mpctri_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = scratch_dir() / ("run" + std::to_string(counter++));
  const std::string cmd = std::string("\"") + MPCTRI_CLI_PATH + "\" " + args +
                          " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.output = slurp(log);
  return res;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("count reads an edge list and reports one triangle") {
  const fs::path k3 = write_file("k3.txt", "0 1\n1 2\n0 2\n");
  const RunResult r = run_cli("count --input " + k3.string() + " --delta 0.5");
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "\"triangle_count\": 1,"));
  CHECK(contains(r.output, "\"n\": 3,"));
  CHECK(contains(r.output, "\"S\": 64,"));
}

TEST_CASE("count on an empty graph does no rounds") {
  const fs::path empty = write_file("empty.txt", "# no edges\n");
  const RunResult r = run_cli("count --input " + empty.string());
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "\"triangle_count\": 0,"));
  CHECK(contains(r.output, "\"rounds\": 0,"));
}

TEST_CASE("generated count agrees with the reference on the same seed") {
  const RunResult r =
      run_cli("count --gen forest-union --n 300 --k 3 --seed 7 --delta 0.4");
  CHECK(r.exit_code == 0);
  const OracleReport want =
      brute_force_triangles(gen_forest_union(300, 3, 7));
  CHECK(contains(r.output, "\"triangle_count\": " +
                               std::to_string(want.triangle_count) + ","));
}

TEST_CASE("reports are byte-stable across runs") {
  const std::string args = "count --gen gnm --n 80 --m 240 --seed 9";
  const RunResult a = run_cli(args);
  const RunResult b = run_cli(args);
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(!a.output.empty());
}

TEST_CASE("count writes the report to --out") {
  const fs::path out = scratch_dir() / "report.json";
  fs::remove(out);
  const RunResult r =
      run_cli("count --gen gnm --n 40 --m 100 --seed 1 --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.empty());
  CHECK(contains(slurp(out), "\"machines_used\":"));
}

TEST_CASE("usage and input errors exit 2") {
  CHECK(run_cli("count --input /definitely/not/here.txt").exit_code == 2);
  CHECK(run_cli("count --gen gnm --n 10 --delta 1.5").exit_code == 2);
  CHECK(run_cli("count --gen mystery --n 10").exit_code == 2);
  CHECK(run_cli("count").exit_code == 2);  // no source at all
  CHECK(run_cli("").exit_code == 2);       // no subcommand
  const fs::path k3 = write_file("k3b.txt", "0 1\n1 2\n0 2\n");
  CHECK(run_cli("count --input " + k3.string() + " --gen gnm --n 4")
            .exit_code == 2);
  const fs::path bad = write_file("bad.txt", "0 1\n2\n");
  const RunResult r = run_cli("count --input " + bad.string());
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "line 2"));
}

TEST_CASE("verify passes on a healthy run and prints every check") {
  const fs::path k4 = write_file("k4.txt", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
  const RunResult r = run_cli("verify --input " + k4.string());
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "PASS  triangle count matches reference"));
  CHECK(contains(r.output, "PASS  record footprint within budget"));
  CHECK(contains(r.output, "verified"));
  CHECK(!contains(r.output, "FAIL"));
}

TEST_CASE("an injected wrong count is caught and named") {
  const RunResult r = run_cli(
      "verify --gen gnm --n 60 --m 200 --seed 3 --inject-count-error");
  CHECK(r.exit_code == 1);
  CHECK(contains(r.output, "FAIL  triangle count matches reference"));
  CHECK(contains(r.output, "verification failed"));
}

TEST_CASE("verify refuses oracle-infeasible sizes") {
  const RunResult r =
      run_cli("verify --gen forest-union --n 1048577 --k 1 --seed 2");
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "too large"));
}

TEST_CASE("scaling emits one CSV row per cell with flat rounds") {
  const RunResult r = run_cli(
      "scaling --gen forest-union --n 1024 --n 2048 --k 3 --seed 5 "
      "--delta 0.5 --delta 0.25");
  CHECK(r.exit_code == 0);

  std::vector<std::vector<std::string>> rows;
  std::istringstream in(r.output);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  REQUIRE(rows.size() == 5);  // header + 4 cells
  CHECK(rows[0][0] == "n");
  CHECK(rows[0][4] == "rounds");
  // delta-major order: two n values at 0.5, then at 0.25.
  CHECK(rows[1][2] == "0.5");
  CHECK(rows[3][2] == "0.25");
  const std::int64_t r05 = std::stoll(rows[1][4]);
  CHECK(std::stoll(rows[2][4]) == r05);
  const std::int64_t r025 = std::stoll(rows[3][4]);
  CHECK(std::stoll(rows[4][4]) == r025);
  CHECK(r025 >= r05);
}
