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

#ifndef MPCTRI_TRIANGLE_HPP_
#define MPCTRI_TRIANGLE_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/sim.hpp"

namespace mpctri {

struct TriangleResult {
  std::int64_t triangle_count = 0;

  // Closed wedge queries, one row per (triangle, edge) pair: [queried
  // endpoint pair (packed), owning edge (packed), asking chunk machine].
  // Always exactly 3 * triangle_count rows, sorted by queried pair.
  std::vector<Record> matches;

  // Wedge queries issued, equal to sum over edges of (min degree - 1).
  std::int64_t queries_formed = 0;

  RunMetrics metrics;
};

// Superstep budget for the whole counting pipeline, k * ceil(1/delta).
// Graphs with n >= kPadMinN pad up to it, so the round count is a fixed
// function of delta alone; smaller graphs run unpadded.
inline constexpr std::int64_t kPipelineRoundsK = 2200;
inline constexpr std::int64_t kPadMinN = 512;

// Exact triangle count of g on the superstep engine with S = max(n^delta, 64)
// words per machine. Degrees are joined onto every oriented edge, each edge's
// lighter endpoint has its adjacency chunked across machines, and every chunk
// asks which of its wedges close; each triangle closes once per edge. An
// empty edge list returns immediately with zero rounds. Throws on graphs
// beyond the packed wire format (n > 2^20, m >= 2^20, or degree mass
// min_degree_endpoint_sum + m >= 2^21).
TriangleResult count_triangles(const Graph& g, double delta);

// Distinct triangles as sorted vertex triples, recovered from the match
// rows (each triangle appears in three of them).
std::vector<std::array<Vertex, 3>> enumerate_triangles(const TriangleResult& r);

}  // namespace mpctri

#endif  // MPCTRI_TRIANGLE_HPP_
