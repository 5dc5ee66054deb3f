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
// Command-line front end. Exit codes: 0 success/verified, 1 verification
// failure, 2 usage or input error, 3 internal contract violation.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/oracle.hpp"
#include "mpctri/sim.hpp"
#include "mpctri/triangle.hpp"

namespace {

using namespace mpctri;

constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitContract = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceOpts {
  std::string input;
  std::string gen;
  std::int64_t n = 0;
  std::int64_t k = 1;
  std::int64_t m = -1;
  std::uint64_t seed = 0;
};

void add_source_flags(CLI::App* cmd, SourceOpts* src) {
  cmd->add_option("--input", src->input, "edge-list file, one 'u v' per line");
  cmd->add_option("--gen", src->gen, "generator: forest-union or gnm");
  cmd->add_option("--n", src->n, "generator vertex count");
  cmd->add_option("--k", src->k, "forest-union layer count")
      ->default_val(std::int64_t{1});
  cmd->add_option("--m", src->m, "gnm edge count");
  cmd->add_option("--seed", src->seed, "generator seed")
      ->default_val(std::uint64_t{0});
}

Graph generate(const SourceOpts& src, std::int64_t n) {
  if (src.gen == "forest-union") {
    if (n <= 0) throw UsageError("--gen forest-union needs --n > 0");
    if (src.k <= 0) throw UsageError("--k must be positive");
    return gen_forest_union(n, src.k, src.seed);
  }
  if (src.gen == "gnm") {
    if (n <= 0) throw UsageError("--gen gnm needs --n > 0");
    const std::int64_t m = src.m >= 0 ? src.m : 2 * n;
    return gen_gnm(n, m, src.seed);
  }
  throw UsageError("unknown generator '" + src.gen +
                   "' (expected forest-union or gnm)");
}

Graph resolve_graph(const SourceOpts& src) {
  const bool have_file = !src.input.empty();
  const bool have_gen = !src.gen.empty();
  if (have_file == have_gen)
    throw UsageError("give exactly one of --input or --gen");
  if (have_file) return load_edge_list_file(src.input);
  return generate(src, src.n);
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw UsageError("--delta must lie strictly between 0 and 1");
}

// The pipeline packs two vertex ids into one word; inputs past these limits
// are a size problem, not a bug.
bool within_packed_limits(const Graph& g, std::string* why) {
  const std::int64_t lim_n = std::int64_t{1} << 20;
  const std::int64_t lim_m = std::int64_t{1} << 20;
  const std::int64_t lim_mass = std::int64_t{1} << 21;
  if (g.n > lim_n) {
    *why = "n exceeds " + std::to_string(lim_n);
    return false;
  }
  if (g.m() >= lim_m) {
    *why = "m must stay below " + std::to_string(lim_m);
    return false;
  }
  if (min_degree_endpoint_sum(g) + g.m() >= lim_mass) {
    *why = "degree mass plus m must stay below " + std::to_string(lim_mass);
    return false;
  }
  return true;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos)
    s += ".0";
  return s;
}

std::string report_json(const TriangleResult& r) {
  const RunMetrics& mm = r.metrics;
  std::ostringstream os;
  os << "{\n";
  os << "  \"n\": " << mm.n << ",\n";
  os << "  \"m\": " << mm.m << ",\n";
  os << "  \"delta\": " << fmt_double(mm.delta) << ",\n";
  os << "  \"S\": " << mm.S << ",\n";
  os << "  \"triangle_count\": " << r.triangle_count << ",\n";
  os << "  \"rounds\": " << mm.rounds << ",\n";
  os << "  \"peak_machine_load\": " << mm.peak_machine_load << ",\n";
  os << "  \"peak_total_records\": " << mm.peak_total_records << ",\n";
  os << "  \"machines_used\": " << mm.machines_used << ",\n";
  os << "  \"alpha_lower\": " << mm.alpha_lower << ",\n";
  os << "  \"alpha_upper\": " << mm.alpha_upper << "\n";
  os << "}\n";
  return os.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw UsageError("cannot write " + out_path);
  out << text;
}

int cmd_count(const SourceOpts& src, double delta,
              const std::string& out_path) {
  require_delta(delta);
  const Graph g = resolve_graph(src);
  std::string why;
  if (!within_packed_limits(g, &why))
    throw UsageError("input too large: " + why);
  const TriangleResult r = count_triangles(g, delta);
  emit(report_json(r), out_path);
  return 0;
}

int cmd_verify(const SourceOpts& src, double delta, bool inject_count_error,
               const std::string& out_path) {
  require_delta(delta);
  const Graph g = resolve_graph(src);
  std::string why;
  if (!within_packed_limits(g, &why))
    throw UsageError("input too large to verify: " + why);

  VerifyResult res;
  if (inject_count_error) {
    TriangleResult r = count_triangles(g, delta);
    r.triangle_count += 1;  // sabotage, to prove the checks can fail
    res = check_result(g, r);
  } else {
    res = verify_run(g, delta);
  }

  std::ostringstream os;
  for (const Verdict& v : res.verdicts) {
    os << (v.pass ? "PASS" : "FAIL") << "  " << v.name;
    if (!v.pass) os << ": " << v.detail;
    os << "\n";
  }
  os << (res.all_pass ? "verified\n" : "verification failed\n");
  emit(os.str(), out_path);
  return res.all_pass ? 0 : kExitVerifyFail;
}

int cmd_scaling(const SourceOpts& src, const std::vector<std::int64_t>& ns,
                const std::vector<double>& deltas,
                const std::string& out_path) {
  if (src.gen.empty()) throw UsageError("scaling needs --gen");
  if (ns.empty()) throw UsageError("scaling needs at least one --n");
  if (deltas.empty()) throw UsageError("scaling needs at least one --delta");
  for (double d : deltas) require_delta(d);

  std::ostringstream os;
  os << "n,m,delta,S,rounds,peak_machine_load,peak_total_records,"
        "machines_used\n";
  for (double delta : deltas) {
    for (std::int64_t n : ns) {
      const Graph g = generate(src, n);
      std::string why;
      if (!within_packed_limits(g, &why))
        throw UsageError("sweep cell n=" + std::to_string(n) +
                         " too large: " + why);
      const TriangleResult r = count_triangles(g, delta);
      const RunMetrics& mm = r.metrics;
      os << mm.n << ',' << mm.m << ',' << fmt_double(mm.delta) << ',' << mm.S
         << ',' << mm.rounds << ',' << mm.peak_machine_load << ','
         << mm.peak_total_records << ',' << mm.machines_used << "\n";
    }
  }
  emit(os.str(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact triangle counting on a simulated MPC cluster"};
  app.require_subcommand(1);

  SourceOpts src;
  double delta = 0.5;
  std::string out_path;
  bool inject_count_error = false;
  std::vector<std::int64_t> sweep_n;
  std::vector<double> sweep_delta;

  CLI::App* count = app.add_subcommand("count", "count triangles, report JSON");
  add_source_flags(count, &src);
  count->add_option("--delta", delta, "memory exponent in (0,1)")
      ->default_val(0.5);
  count->add_option("--out", out_path, "write the report here");

  CLI::App* verify =
      app.add_subcommand("verify", "run and check against the reference");
  add_source_flags(verify, &src);
  verify->add_option("--delta", delta, "memory exponent in (0,1)")
      ->default_val(0.5);
  verify->add_option("--out", out_path, "write the verdicts here");
  verify->add_flag("--inject-count-error", inject_count_error)->group("");

  CLI::App* scaling =
      app.add_subcommand("scaling", "sweep (n, delta) cells, report CSV");
  scaling->add_option("--gen", src.gen, "generator: forest-union or gnm");
  scaling->add_option("--n", sweep_n, "vertex counts, repeatable");
  scaling->add_option("--k", src.k, "forest-union layer count")
      ->default_val(std::int64_t{1});
  scaling->add_option("--m", src.m, "gnm edge count");
  scaling->add_option("--seed", src.seed, "generator seed")
      ->default_val(std::uint64_t{0});
  scaling->add_option("--delta", sweep_delta, "memory exponents, repeatable");
  scaling->add_option("--out", out_path, "write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (count->parsed()) return cmd_count(src, delta, out_path);
    if (verify->parsed())
      return cmd_verify(src, delta, inject_count_error, out_path);
    if (scaling->parsed())
      return cmd_scaling(src, sweep_n, sweep_delta, out_path);
  } catch (const BudgetViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const CapacityError& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
