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

#ifndef MPCTRI_GRAPH_HPP_
#define MPCTRI_GRAPH_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mpctri {

using Vertex = std::int64_t;

// Undirected edge, stored with u < v.
struct Edge {
  Vertex u = 0;
  Vertex v = 0;

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.u == b.u && a.v == b.v;
  }
  friend bool operator<(const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  }
};

// Simple undirected graph: n vertices 0..n-1, deduplicated edge list sorted
// by (u, v), no self loops.
struct Graph {
  std::int64_t n = 0;
  std::vector<Edge> edges;

  std::int64_t m() const { return static_cast<std::int64_t>(edges.size()); }
  bool has_edge(Vertex u, Vertex v) const;
};

// Makes a well-formed Graph out of raw endpoint pairs: normalizes (u, v) to
// u < v, drops duplicates, rejects self loops and out-of-range endpoints.
// n is max endpoint + 1 unless n_hint is larger.
Graph make_graph(std::int64_t n_hint, std::vector<std::pair<Vertex, Vertex>> pairs);

// Parses whitespace-separated "u v" pairs, one edge per line. Blank lines and
// lines starting with '#' are skipped. Sparse ids are compressed to [0, n) in
// order. Throws std::runtime_error mentioning the 1-based line number on
// malformed input, self loops, or negatives.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);

std::vector<std::int64_t> degree_vector(const Graph& g);

// Degeneracy d: the largest minimum degree over all subgraphs, computed by
// repeated minimum-degree removal with a bucket queue. O(n + m).
std::int64_t degeneracy(const Graph& g);

// Arboricity is not computed exactly; callers get the interval
// [ceil((d + 1) / 2), d] from the degeneracy d (empty graph: [0, 0]).
struct ArboricityBounds {
  std::int64_t lower = 0;
  std::int64_t upper = 0;
};
ArboricityBounds arboricity_bounds(const Graph& g);

// Sum over edges of min(deg(u), deg(v)). Drives the space budget of the
// counting pipeline; for a graph of arboricity a it is at most 2 m a.
std::int64_t min_degree_endpoint_sum(const Graph& g);

// Union of k uniformly random spanning trees on n vertices (Pruefer decode),
// each edge kept independently with probability keep. Duplicate edges across
// trees collapse. keep = 1 gives the plain union.
Graph gen_forest_union(std::int64_t n, std::int64_t k, std::uint64_t seed,
                       double keep = 1.0);

// Uniform simple graph with exactly m edges (Floyd's sampling over the
// C(n, 2) edge slots). Requires 0 <= m <= C(n, 2).
Graph gen_gnm(std::int64_t n, std::int64_t m, std::uint64_t seed);

Graph gen_complete(std::int64_t n);

}  // namespace mpctri

#endif  // MPCTRI_GRAPH_HPP_
