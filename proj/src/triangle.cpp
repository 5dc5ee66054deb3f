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

#include "mpctri/triangle.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/primitives.hpp"
#include "mpctri/sim.hpp"
#include "mpctri/wire.hpp"

namespace mpctri {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ContractViolation(msg);
}

}  // namespace

TriangleResult count_triangles(const Graph& g, double delta) {
  const std::int64_t n = g.n;
  const std::int64_t m = g.m();
  require(n <= (std::int64_t{1} << 20),
          "count_triangles: vertex ids exceed the packed range");
  require(m < (std::int64_t{1} << 20),
          "count_triangles: edge count exceeds the packed range");
  const std::int64_t mds = min_degree_endpoint_sum(g);
  require(mds + m < (std::int64_t{1} << 21),
          "count_triangles: degree mass exceeds the packed range");

  const ArboricityBounds ab = arboricity_bounds(g);
  SimConfig cfg = SimConfig::sublinear(n, delta);
  // Generous tripwire against runaway replication: the record-count bound
  // the pipeline is designed to, in machines. Nonempty machines never exceed
  // live records, so a healthy run cannot trip it.
  const std::int64_t d = std::max<std::int64_t>(degeneracy(g), 1);
  cfg.machine_cap =
      std::max<std::int64_t>(1024, 8 * (m * d + m + n));

  TriangleResult res;
  res.metrics.n = n;
  res.metrics.m = m;
  res.metrics.delta = delta;
  res.metrics.S = cfg.space;
  res.metrics.alpha_lower = ab.lower;
  res.metrics.alpha_upper = ab.upper;
  if (m == 0) return res;

  std::vector<Record> init;
  init.reserve(m);
  for (const Edge& e : g.edges) init.push_back({e.u, e.v});
  Simulation sim(cfg, init);
  const Word S = cfg.space;

  // The undirected edge list stays alive until the membership filter.
  const Layout b0 = spread_initial(sim, m, 2, detail::duplicate_safe_cap(S));
  const Layout oriented = mpc_duplicate(sim, b0, /*keep_input=*/true);

  // Both orientations sorted by endpoint pair; pairs are distinct, so the
  // key alone already orders them fully.
  SortPlan by_endpoint;
  by_endpoint.indices = {0, 1};
  by_endpoint.bits = {kPairBits, kPairBits};
  const Layout b1 = sort_with_plan(sim, oriented, by_endpoint);

  // Degrees as run lengths of the first endpoint, joined back onto every
  // oriented edge: [u, v, deg(u)].
  const Layout degs = mpc_count_duplicates(sim, b1, 0, n, /*pad=*/false);
  const Layout tagged = mpc_tag_count(sim, b1, degs, 0, /*pad=*/false);

  // One machine per chunk of the lighter endpoint's adjacency.
  const std::int64_t cap = detail::dense_cap(S, 3);
  const std::int64_t chunk_bound = mds / cap + m + 1;
  const detail::ChunkedAdjacency core = detail::partition_core(
      sim, tagged, cap, chunk_bound, std::max<std::int64_t>(2 * m, 2));
  const Layout cb = core.chunk_bank;

  // Wedge round. The chunk machine of edge {w, x} pivoted at w asks, for
  // each neighbor y of w in its slice, whether {x, y} is an edge; y == x
  // closes nothing and is skipped. Queries land one chunk per machine, and
  // per-chunk tallies feed the query total.
  Layout q = reserve_layout(sim, cb.width * cap, 3, cap);
  Layout cnt = reserve_layout(sim, std::max<std::int64_t>(cb.width, 1), 1,
                              detail::dense_cap(S, 1));
  {
    const Layout qw = q;
    const Layout cw = cnt;
    step_over(
        sim, {&cb, &qw, &cw},
        [&, cb, qw, cw](std::int64_t mach, std::vector<Record> box,
                        Emitter& em) {
          const Record* ectx = nullptr;
          std::vector<Word> slice;
          for (const Record& r : box) {
            if (r.arity() > 0 && r[0] == kRoleEdgeCtx)
              ectx = &r;
            else if (r.arity() > 0 && !is_role(r[0]))
              slice.push_back(r[0]);
          }
          require(ectx != nullptr && (*ectx)[5] == 1,
                  "triangle: chunk machine without a settled edge");
          const Word w = (*ectx)[1];
          const Word x = (*ectx)[2];
          const Word uv = pack_pair(std::min(w, x), std::max(w, x));
          const std::int64_t ord = mach - cb.base;
          Word formed = 0;
          for (Word y : slice) {
            if (y == x) continue;
            em.send(qw.base + ord,
                    Record{pack_pair(std::min(x, y), std::max(x, y)), uv,
                           mach});
            ++formed;
          }
          em.send(cw.base + ord / cw.cap_records, Record{formed});
        });
  }

  res.queries_formed = detail::sum_window(sim, cnt).count;
  q.records = res.queries_formed;

  // Membership filter against the original edge list. Survivors are the
  // closed wedges, three per triangle (once per edge).
  const Layout t = detail::filter_packed(sim, q, b0);
  res.matches = gather_layout(sim, t);

  const CountResult total = mpc_count(sim, t);
  require(total.count % 3 == 0, "triangle: match total not divisible by 3");
  res.triangle_count = total.count / 3;
  if (total.root_machine >= 0) {
    // Fold the root's partials and divide in-model; the driver only reads.
    sim.run_step({{total.root_machine, total.root_machine + 1}},
                 [](std::int64_t mach, std::vector<Record> box, Emitter& em) {
                   Word s = 0;
                   for (const Record& r : box) s += r[0];
                   em.send(mach, Record{s / 3});
                 });
    const auto root = sim.read_machine(total.root_machine);
    if (!root.empty()) res.triangle_count = root[0][0];
  }

  if (n >= kPadMinN) pad_rounds(sim, 0, rounds_budget(delta, kPipelineRoundsK));

  res.metrics.rounds = sim.trace().rounds;
  res.metrics.peak_machine_load = sim.trace().peak_machine_load;
  res.metrics.peak_total_records = sim.trace().peak_total_records;
  res.metrics.machines_used = sim.peak_nonempty_machines();
  return res;
}

std::vector<std::array<Vertex, 3>> enumerate_triangles(
    const TriangleResult& r) {
  std::vector<std::array<Vertex, 3>> out;
  out.reserve(r.matches.size());
  for (const Record& row : r.matches) {
    const Vertex a = pair_first(row[0]);
    const Vertex b = pair_second(row[0]);
    const Vertex u = pair_first(row[1]);
    const Vertex v = pair_second(row[1]);
    const Vertex third = (a == u || a == v) ? b : a;
    std::array<Vertex, 3> tri{u, v, third};
    std::sort(tri.begin(), tri.end());
    out.push_back(tri);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace mpctri
