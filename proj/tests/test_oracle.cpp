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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdint>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/oracle.hpp"

using namespace mpctri;

namespace {

// Dumbest possible counter: test all vertex triples against an adjacency
// matrix. Only viable for tiny n, which is the point.
std::int64_t triple_loop_count(const Graph& g) {
  std::vector<std::vector<bool>> adj(g.n, std::vector<bool>(g.n, false));
  for (const Edge& e : g.edges) {
    adj[e.u][e.v] = true;
    adj[e.v][e.u] = true;
  }
  std::int64_t t = 0;
  for (Vertex a = 0; a < g.n; ++a)
    for (Vertex b = a + 1; b < g.n; ++b)
      for (Vertex c = b + 1; c < g.n; ++c)
        if (adj[a][b] && adj[b][c] && adj[a][c]) ++t;
  return t;
}

}  // namespace

TEST_CASE("reference counts on known graphs") {
  CHECK(brute_force_triangles(gen_complete(3)).triangle_count == 1);
  CHECK(brute_force_triangles(gen_complete(4)).triangle_count == 4);
  CHECK(brute_force_triangles(gen_complete(5)).triangle_count == 10);
  CHECK(brute_force_triangles(gen_complete(6)).triangle_count == 20);
  // One forest is acyclic; a union of several is not, in general.
  CHECK(brute_force_triangles(gen_forest_union(100, 1, 7)).triangle_count ==
        0);
  CHECK(brute_force_triangles(Graph{}).triangle_count == 0);
}

TEST_CASE("reference triples are sorted and canonical") {
  const OracleReport rep = brute_force_triangles(gen_complete(4));
  const std::vector<std::array<Vertex, 3>> want = {
      {0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  CHECK(rep.triangles == want);
}

TEST_CASE("wedge totals on hand examples") {
  // Path 0-1-2: both edges have a degree-1 endpoint, no queries.
  OracleReport rep = brute_force_triangles(make_graph(3, {{0, 1}, {1, 2}}));
  CHECK(rep.wedge_query_total == 0);
  CHECK(rep.min_degree_sum == 2);

  // Triangle: every edge queries the one other neighbor of its lighter end.
  rep = brute_force_triangles(gen_complete(3));
  CHECK(rep.wedge_query_total == 3);
  CHECK(rep.min_degree_sum == 6);

  // Star plus one rim edge: degrees 3,2,2,1. Edge (0,1): min 2, (0,2): 2,
  // (0,3): 1, (1,2): 2.
  rep = brute_force_triangles(make_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}}));
  CHECK(rep.wedge_query_total == 3);
  CHECK(rep.min_degree_sum == 7);
  CHECK(rep.triangle_count == 1);
}

TEST_CASE("intersection and triple-loop methods agree") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto n = static_cast<std::int64_t>(8 + (seed * 7) % 57);
    const auto m = static_cast<std::int64_t>((seed * 13) % (2 * n) + n / 2);
    const Graph g = gen_gnm(n, m, seed);
    CAPTURE(n);
    CAPTURE(m);
    CAPTURE(seed);
    CHECK(brute_force_triangles(g).triangle_count == triple_loop_count(g));
  }
}

TEST_CASE("wedge total is the degree mass minus the edge count") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Graph g = gen_gnm(50, 120, seed);
    const OracleReport rep = brute_force_triangles(g);
    CHECK(rep.wedge_query_total == rep.min_degree_sum - g.m());
    CHECK(rep.min_degree_sum == min_degree_endpoint_sum(g));
  }
}

TEST_CASE("verify_run passes on healthy inputs") {
  const std::vector<Graph> graphs = {
      gen_complete(5),
      gen_gnm(60, 200, 3),
      gen_forest_union(120, 2, 9),
      make_graph(2, {{0, 1}}),
      Graph{},
  };
  for (const Graph& g : graphs) {
    CAPTURE(g.n);
    CAPTURE(g.m());
    const VerifyResult res = verify_run(g, 0.5);
    CHECK(res.all_pass);
    CHECK(res.verdicts.size() == 7);
    for (const Verdict& v : res.verdicts) {
      CAPTURE(v.name);
      CHECK(v.pass);
      CHECK(v.detail.empty());
      CHECK(!v.name.empty());
    }
  }
}

TEST_CASE("verify_run reports a rejected input instead of throwing") {
  Graph big;
  big.n = (std::int64_t{1} << 20) + 1;
  const VerifyResult res = verify_run(big, 0.5);
  CHECK(!res.all_pass);
  REQUIRE(!res.verdicts.empty());
  CHECK(res.verdicts[0].name == "pipeline completes");
  CHECK(!res.verdicts[0].pass);
  CHECK(!res.verdicts[0].detail.empty());
}
