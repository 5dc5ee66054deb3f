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

// Machine-level building blocks: sort, count, duplicate, run-length
// counting, tagging, filtering, and adjacency partitioning. Each one runs
// a deterministic superstep schedule and, except for mpc_count (whose
// round count is a pinned function of its input window), pads itself with
// null supersteps to a fixed per-delta budget so round counts never depend
// on the data.

#ifndef MPCTRI_PRIMITIVES_HPP_
#define MPCTRI_PRIMITIVES_HPP_

#include <cstdint>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/sim.hpp"
#include "mpctri/wire.hpp"

namespace mpctri {

// Moves the round-robin initial placement into a dense bank: record k of
// machine i (of the m0 initial machines) has global index i + k*m0 and
// lands at slot index of the new bank. One superstep.
Layout spread_initial(Simulation& sim, std::int64_t records, int arity,
                      std::int64_t cap_records);

// Key for the public sort: word indices compared in order, ties broken by
// the full record, lexicographically. Requires homogeneous arity and all
// words in [0, 2^21).
struct KeySpec {
  std::vector<int> indices;
};

Layout mpc_sort(Simulation& sim, const Layout& in, const KeySpec& key);

// Internal sort surface: per-word bit widths (word values must be in
// [0, 2^bits)), optional full-record tiebreak (adds 21 bits per non-key
// word), optional output cap. Ties under full_tiebreak == false land in an
// arbitrary but deterministic order. Total packed width <= 126 bits.
struct SortPlan {
  std::vector<int> indices;
  std::vector<int> bits;
  bool full_tiebreak = false;
  std::int64_t cap_override = 0;
};

Layout sort_with_plan(Simulation& sim, const Layout& in, const SortPlan& plan);

// Counts the records in a bank through a fan-in-S tree. Exactly
// max(1, ceil(log_S width)) supersteps, never padded; an empty window
// still costs one superstep and reports zero.
struct CountResult {
  std::int64_t count = 0;
  std::int64_t root_machine = -1;
};

CountResult mpc_count(Simulation& sim, const Layout& in);

// Emits both orientations (u,v) and (v,u) of every canonical edge into a
// fresh dense bank. One superstep. The input must be dense; with
// keep_input the edge bank survives unchanged.
Layout mpc_duplicate(Simulation& sim, const Layout& edges, bool keep_input);

// One (key, count) record per distinct value of word key_index, sorted by
// key, given input sorted by that word. distinct_bound caps the number of
// distinct keys (pass in.records when nothing better is known). The input
// bank survives unchanged.
Layout mpc_count_duplicates(Simulation& sim, const Layout& in, int key_index,
                            std::int64_t distinct_bound, bool pad = true);

// Appends to each record the count held for its key, consuming both banks.
// Both inputs must be sorted by the key word and every record key must
// appear in counts. Output is sorted by (key, full record); inputs that
// came out of mpc_sort keep their order.
Layout mpc_tag_count(Simulation& sim, const Layout& records, const Layout& counts,
                     int key_index, bool pad = true);

// Keeps exactly the queries whose key pair (word 0, word 1) is an edge of
// the edge bank, preserving duplicates. Queries have arity 3..5 with both
// key words in [0, 2^21); edges have arity 2. Both inputs are consumed.
Layout mpc_filter(Simulation& sim, const Layout& queries, const Layout& edges);

// Adjacency partitioning. Input is a dense bank of tagged oriented records
// [u, v, deg(u)] holding both orientations of every edge (the shape
// mpc_tag_count produces). Every edge picks its lower-degree endpoint w
// (ties to the smaller id) and w's full adjacency list is cut into chunks
// of at most chunk_capacity vertices, each chunk co-resident with a copy
// of the edge on its own machine. min_degree_sum_bound must dominate the
// sum over edges of min(deg u, deg v); callers know it from the graph.
struct ChunkPlacement {
  Edge edge;
  Vertex pivot = 0;
  std::int64_t chunk_index = 0;
  std::vector<Vertex> chunk;
  std::int64_t machine = 0;
};

struct PartitionResult {
  std::vector<ChunkPlacement> placements;
  Layout chunk_bank;
};

PartitionResult mpc_partition_adjacency(Simulation& sim, const Layout& tagged,
                                        std::int64_t chunk_capacity,
                                        std::int64_t min_degree_sum_bound);

// Null-superstep padding up to a fixed target, shared by the primitives
// and the pipeline.
void pad_rounds(Simulation& sim, std::int64_t start_round,
                std::int64_t target_rounds);

// Per-primitive superstep budgets, all of the form k * ceil(1/delta). The
// k values are worst-case ceilings (a sort key of b bits refines through at
// most ceil(b/2)+1 levels, each a bounded number of sweep rounds at the
// floor space S = 64); padding to the budget makes every primitive's round
// count a fixed function of delta alone.
std::int64_t rounds_budget(double delta, std::int64_t k);
inline constexpr std::int64_t kSortRoundsK = 1100;
inline constexpr std::int64_t kCountDupRoundsK = 15;
inline constexpr std::int64_t kTagRoundsK = 950;
inline constexpr std::int64_t kFilterRoundsK = 450;
inline constexpr std::int64_t kPartitionRoundsK = 1700;

namespace detail {

// Pipeline entry points that reuse the primitive internals. None of these
// pad; a caller composing them pads the whole composition once.

// Duplicate-safe dense cap for an arity-2 bank: a machine can re-emit its
// box three ways (keep + two orientations) within S.
std::int64_t duplicate_safe_cap(std::int64_t space);

// Records per machine at the working density for a given arity; the cap
// reserve_layout would pick.
std::int64_t dense_cap(std::int64_t space, int arity);

// Sums word 0 over all records of a bank through the same fan-in-S tree
// as mpc_count.
CountResult sum_window(Simulation& sim, const Layout& in);

// Filter core over a bank of queries whose key is already packed into
// word 0 (remaining words ride along), plus an arity-2 edge bank. Both are
// consumed; survivors keep their packed shape.
Layout filter_packed(Simulation& sim, const Layout& packed_queries,
                     const Layout& edges);

// Partition core: pivot choice, ranking scans, seeding and slice doubling.
// Afterwards chunk machine k of edge e (at chunk_bank.base + offset(e) + k)
// holds one edge ctx record [role, w, x, query_base, k, 1] plus its slice
// of w's adjacency as arity-1 records. doubling_bound must dominate both
// the copy count and the chunk count of every pivot (records suffices).
struct ChunkedAdjacency {
  Layout chunk_bank;
  std::int64_t chunk_capacity = 0;
};

ChunkedAdjacency partition_core(Simulation& sim, const Layout& tagged,
                                std::int64_t chunk_capacity,
                                std::int64_t total_chunk_bound,
                                std::int64_t doubling_bound);

}  // namespace detail

}  // namespace mpctri

#endif  // MPCTRI_PRIMITIVES_HPP_
