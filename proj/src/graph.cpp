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

#include "mpctri/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "mpctri/rng.hpp"

namespace mpctri {

bool Graph::has_edge(Vertex u, Vertex v) const {
  if (u == v) return false;
  if (u > v) std::swap(u, v);
  Edge probe{u, v};
  return std::binary_search(edges.begin(), edges.end(), probe);
}

Graph make_graph(std::int64_t n_hint,
                 std::vector<std::pair<Vertex, Vertex>> pairs) {
  Graph g;
  g.n = n_hint;
  g.edges.reserve(pairs.size());
  for (auto& [u, v] : pairs) {
    if (u < 0 || v < 0) throw std::runtime_error("negative vertex id");
    if (u == v) throw std::runtime_error("self loop");
    if (u > v) std::swap(u, v);
    g.edges.push_back(Edge{u, v});
    g.n = std::max(g.n, v + 1);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

Graph load_edge_list(std::istream& in) {
  std::vector<std::pair<Vertex, Vertex>> pairs;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Vertex u, v;
    if (!(ls >> u >> v)) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected two vertex ids");
    }
    std::string extra;
    if (ls >> extra) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": trailing token '" + extra + "'");
    }
    if (u < 0 || v < 0) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": negative vertex id");
    }
    if (u == v) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": self loop at vertex " + std::to_string(u));
    }
    pairs.emplace_back(u, v);
  }

  // Compress sparse ids to [0, n), keeping their relative order.
  std::vector<Vertex> ids;
  ids.reserve(pairs.size() * 2);
  for (const auto& [u, v] : pairs) {
    ids.push_back(u);
    ids.push_back(v);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto rank = [&](Vertex x) {
    return static_cast<Vertex>(
        std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
  };
  for (auto& [u, v] : pairs) {
    u = rank(u);
    v = rank(v);
  }
  return make_graph(0, std::move(pairs));
}

Graph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_edge_list(in);
}

std::vector<std::int64_t> degree_vector(const Graph& g) {
  std::vector<std::int64_t> deg(static_cast<std::size_t>(g.n), 0);
  for (const Edge& e : g.edges) {
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  return deg;
}

std::int64_t degeneracy(const Graph& g) {
  const std::size_t n = static_cast<std::size_t>(g.n);
  if (n == 0) return 0;

  std::vector<std::int64_t> deg = degree_vector(g);
  std::vector<std::vector<std::int64_t>> adj(n);
  for (const Edge& e : g.edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }

  // Bucket queue keyed by current degree.
  std::int64_t maxdeg = 0;
  for (std::int64_t d : deg) maxdeg = std::max(maxdeg, d);
  std::vector<std::vector<std::int64_t>> bucket(
      static_cast<std::size_t>(maxdeg) + 1);
  std::vector<std::size_t> pos(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto& b = bucket[static_cast<std::size_t>(deg[v])];
    pos[v] = b.size();
    b.push_back(static_cast<std::int64_t>(v));
  }

  std::vector<char> removed(n, 0);
  std::int64_t cur = 0, result = 0;
  for (std::size_t iter = 0; iter < n; ++iter) {
    while (bucket[static_cast<std::size_t>(cur)].empty()) ++cur;
    std::int64_t v = bucket[static_cast<std::size_t>(cur)].back();
    bucket[static_cast<std::size_t>(cur)].pop_back();
    removed[static_cast<std::size_t>(v)] = 1;
    result = std::max(result, cur);
    for (std::int64_t w : adj[static_cast<std::size_t>(v)]) {
      auto wi = static_cast<std::size_t>(w);
      if (removed[wi]) continue;
      auto& b = bucket[static_cast<std::size_t>(deg[wi])];
      // Swap-remove w from its bucket, then push one level down.
      std::size_t i = pos[wi];
      b[i] = b.back();
      pos[static_cast<std::size_t>(b[i])] = i;
      b.pop_back();
      --deg[wi];
      auto& nb = bucket[static_cast<std::size_t>(deg[wi])];
      pos[wi] = nb.size();
      nb.push_back(w);
    }
    if (cur > 0) --cur;  // removal can only lower the minimum by this much
  }
  return result;
}

ArboricityBounds arboricity_bounds(const Graph& g) {
  std::int64_t d = degeneracy(g);
  if (d == 0) return {0, 0};
  return {(d + 2) / 2, d};
}

std::int64_t min_degree_endpoint_sum(const Graph& g) {
  std::vector<std::int64_t> deg = degree_vector(g);
  std::int64_t total = 0;
  for (const Edge& e : g.edges) {
    total += std::min(deg[static_cast<std::size_t>(e.u)],
                      deg[static_cast<std::size_t>(e.v)]);
  }
  return total;
}

namespace {

// Decodes a uniform Pruefer sequence into spanning tree edges for n >= 2.
void add_random_tree(std::int64_t n, Rng& rng,
                     std::vector<std::pair<Vertex, Vertex>>& out) {
  if (n < 2) return;
  if (n == 2) {
    out.emplace_back(0, 1);
    return;
  }
  const std::size_t len = static_cast<std::size_t>(n - 2);
  std::vector<std::int64_t> seq(len);
  for (auto& s : seq)
    s = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n)));

  std::vector<std::int64_t> count(static_cast<std::size_t>(n), 0);
  for (std::int64_t s : seq) ++count[static_cast<std::size_t>(s)];

  std::int64_t ptr = 0;
  while (count[static_cast<std::size_t>(ptr)] > 0) ++ptr;
  std::int64_t leaf = ptr;
  for (std::int64_t s : seq) {
    out.emplace_back(leaf, s);
    if (--count[static_cast<std::size_t>(s)] == 0 && s < ptr) {
      leaf = s;
    } else {
      ++ptr;
      while (count[static_cast<std::size_t>(ptr)] > 0) ++ptr;
      leaf = ptr;
    }
  }
  out.emplace_back(leaf, n - 1);
}

}  // namespace

Graph gen_forest_union(std::int64_t n, std::int64_t k, std::uint64_t seed,
                       double keep) {
  if (n < 0) throw std::runtime_error("gen_forest_union: n < 0");
  if (k < 0) throw std::runtime_error("gen_forest_union: k < 0");
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (std::int64_t t = 0; t < k; ++t) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::pair<Vertex, Vertex>> tree;
    add_random_tree(n, rng, tree);
    for (auto& e : tree) {
      if (keep >= 1.0 || rng.next_unit() < keep) pairs.push_back(e);
    }
  }
  return make_graph(n, std::move(pairs));
}

Graph gen_gnm(std::int64_t n, std::int64_t m, std::uint64_t seed) {
  if (n < 0) throw std::runtime_error("gen_gnm: n < 0");
  const std::int64_t slots = n * (n - 1) / 2;
  if (m < 0 || m > slots) throw std::runtime_error("gen_gnm: m out of range");

  // Floyd's algorithm: after the loop, chosen holds m distinct slot ids
  // drawn uniformly from [0, slots).
  Rng rng(seed);
  std::vector<std::int64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(m));
  std::vector<char> taken;  // dense flags; slots fits comfortably for our n
  taken.assign(static_cast<std::size_t>(slots), 0);
  for (std::int64_t j = slots - m; j < slots; ++j) {
    std::int64_t t = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(j + 1)));
    if (taken[static_cast<std::size_t>(t)]) t = j;
    taken[static_cast<std::size_t>(t)] = 1;
    chosen.push_back(t);
  }

  // Slot id -> edge (u, v): row u starts at u*n - u*(u+3)/2 - ... use direct
  // scan-free inversion: id = u*(2n - u - 1)/2 + (v - u - 1).
  std::vector<std::pair<Vertex, Vertex>> pairs;
  pairs.reserve(chosen.size());
  for (std::int64_t id : chosen) {
    std::int64_t u = 0, rem = id;
    // Row u holds (n - 1 - u) slots.
    while (rem >= n - 1 - u) {
      rem -= n - 1 - u;
      ++u;
    }
    pairs.emplace_back(u, u + 1 + rem);
  }
  return make_graph(n, std::move(pairs));
}

Graph gen_complete(std::int64_t n) {
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  return make_graph(n, std::move(pairs));
}

}  // namespace mpctri
