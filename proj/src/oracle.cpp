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

#include "mpctri/oracle.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>
#include <string>

namespace mpctri {

namespace {

// Second, dumber strategy: test every vertex triple against an adjacency
// matrix. Used below to cross-check the intersection method on small inputs,
// so the reference itself does not go unwatched.
std::int64_t triple_loop_count(const Graph& g) {
  std::vector<std::vector<bool>> adj(
      static_cast<std::size_t>(g.n),
      std::vector<bool>(static_cast<std::size_t>(g.n), false));
  for (const Edge& e : g.edges) {
    adj[static_cast<std::size_t>(e.u)][static_cast<std::size_t>(e.v)] = true;
    adj[static_cast<std::size_t>(e.v)][static_cast<std::size_t>(e.u)] = true;
  }
  std::int64_t t = 0;
  for (Vertex a = 0; a < g.n; ++a)
    for (Vertex b = a + 1; b < g.n; ++b)
      for (Vertex c = b + 1; c < g.n; ++c)
        if (adj[a][b] && adj[b][c] && adj[a][c]) ++t;
  return t;
}

}  // namespace

OracleReport brute_force_triangles(const Graph& g) {
  OracleReport rep;
  std::vector<std::vector<Vertex>> adj(g.n);
  for (const Edge& e : g.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  for (const Edge& e : g.edges) {
    const auto du = static_cast<std::int64_t>(adj[e.u].size());
    const auto dv = static_cast<std::int64_t>(adj[e.v].size());
    rep.min_degree_sum += std::min(du, dv);
    rep.wedge_query_total += std::min(du, dv) - 1;

    // Triangle {a < b < c} is recorded once, at its lowest edge (a, b).
    const auto& au = adj[e.u];
    const auto& av = adj[e.v];
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < au.size() && j < av.size()) {
      if (au[i] < av[j]) {
        ++i;
      } else if (av[j] < au[i]) {
        ++j;
      } else {
        if (au[i] > e.v) rep.triangles.push_back({e.u, e.v, au[i]});
        ++i;
        ++j;
      }
    }
  }
  std::sort(rep.triangles.begin(), rep.triangles.end());
  rep.triangle_count = static_cast<std::int64_t>(rep.triangles.size());
  if (g.n <= 64 && rep.triangle_count != triple_loop_count(g))
    throw std::logic_error("oracle self-check failed: methods disagree");
  return rep;
}

namespace {

std::string num(std::int64_t v) { return std::to_string(v); }

void check(VerifyResult& out, const std::string& name, bool pass,
           const std::string& detail) {
  out.verdicts.push_back({name, pass, pass ? std::string() : detail});
}

}  // namespace

VerifyResult check_result(const Graph& g, const TriangleResult& got) {
  VerifyResult out;
  const OracleReport want = brute_force_triangles(g);

  check(out, "triangle count matches reference",
        got.triangle_count == want.triangle_count,
        "got " + num(got.triangle_count) + ", want " +
            num(want.triangle_count));

  const auto match_rows = static_cast<std::int64_t>(got.matches.size());
  check(out, "three match rows per triangle",
        match_rows == 3 * got.triangle_count,
        num(match_rows) + " rows for " + num(got.triangle_count) +
            " triangles");

  check(out, "matched triples equal reference triples",
        enumerate_triangles(got) == want.triangles,
        "triple sets differ");

  check(out, "query volume equals reference wedge total",
        got.queries_formed == want.wedge_query_total,
        "got " + num(got.queries_formed) + ", want " +
            num(want.wedge_query_total));

  check(out, "query volume within the degree-mass bound",
        got.queries_formed <= want.min_degree_sum,
        num(got.queries_formed) + " > " + num(want.min_degree_sum));

  const std::int64_t d = std::max(degeneracy(g), std::int64_t{1});
  const std::int64_t record_bound = 8 * (g.m() * d + g.m() + g.n);
  check(out, "record footprint within budget",
        got.metrics.peak_total_records <= record_bound,
        num(got.metrics.peak_total_records) + " > " + num(record_bound));

  out.all_pass = true;
  for (const Verdict& v : out.verdicts) out.all_pass = out.all_pass && v.pass;
  return out;
}

VerifyResult verify_run(const Graph& g, double delta) {
  TriangleResult got;
  try {
    got = count_triangles(g, delta);
  } catch (const std::exception& e) {
    VerifyResult out;
    check(out, "pipeline completes", false, e.what());
    return out;
  }
  VerifyResult out = check_result(g, got);
  out.verdicts.insert(out.verdicts.begin(), {"pipeline completes", true, ""});
  return out;
}

}  // namespace mpctri
