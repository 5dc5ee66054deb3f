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
// Sequential reference answers and a structured checker for simulated runs.
// Everything here is plain single-threaded code so that a disagreement with
// the simulator points at the simulator.

#ifndef MPCTRI_ORACLE_HPP_
#define MPCTRI_ORACLE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/triangle.hpp"

namespace mpctri {

struct OracleReport {
  std::int64_t triangle_count = 0;
  std::vector<std::array<Vertex, 3>> triangles;  // each a < b < c, sorted
  // Sum over edges of (min endpoint degree - 1): how many neighbor queries
  // the counting pipeline should form.
  std::int64_t wedge_query_total = 0;
  std::int64_t min_degree_sum = 0;  // sum over edges of min endpoint degree
};

OracleReport brute_force_triangles(const Graph& g);

// One named invariant checked against a run.
struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;  // filled in on failure, empty otherwise
};

struct VerifyResult {
  std::vector<Verdict> verdicts;
  bool all_pass = false;
};

// Checks an already-computed result against the reference: the count, the
// match volume, the query volume, and the record footprint.
VerifyResult check_result(const Graph& g, const TriangleResult& got);

// Runs the simulated pipeline at the given delta and checks it against the
// reference. Failures are reported, not thrown.
VerifyResult verify_run(const Graph& g, double delta);

}  // namespace mpctri

#endif  // MPCTRI_ORACLE_HPP_
