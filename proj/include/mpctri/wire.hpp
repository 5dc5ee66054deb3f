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

// Wire-level conventions shared by the primitives and the pipeline: machine
// bank layouts, control-record roles, bit packing, and the fan-in scan
// engine every multi-round primitive is built on.

#ifndef MPCTRI_WIRE_HPP_
#define MPCTRI_WIRE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "mpctri/sim.hpp"

namespace mpctri {

// A window of machines [base, base+width) holding records of arity
// <= max_arity at cap_records slots per machine, slot-major. records is
// exact for dense banks and an upper bound for ragged ones.
struct Layout {
  std::int64_t base = 0;
  std::int64_t width = 0;
  std::int64_t records = 0;
  int max_arity = 0;
  std::int64_t cap_records = 0;
};

Layout reserve_layout(Simulation& sim, std::int64_t records, int arity,
                      std::int64_t cap_records);

// Runs one superstep whose active machines are exactly the given windows.
void step_over(Simulation& sim, std::initializer_list<const Layout*> windows,
               const LocalFn& fn);

// Driver-side copy of a bank's contents in machine order.
std::vector<Record> gather_layout(const Simulation& sim, const Layout& bank);

// Control records live alongside data records in machine boxes and are
// told apart by a first word >= kRoleBase, far above any data word (all
// data words are kept in [0, 2^60) by the packing helpers).
inline constexpr Word kRoleBase = Word{1} << 60;
inline constexpr Word kRoleSum = kRoleBase + 1;   // [role, child slot, p...]
inline constexpr Word kRoleCtx0 = kRoleBase + 2;  // [role, L..., R...]
inline constexpr Word kRoleCtxL0 = kRoleBase + 3;
inline constexpr Word kRoleCtxR0 = kRoleBase + 4;
inline constexpr Word kRoleCtx1 = kRoleBase + 5;
inline constexpr Word kRoleCtxL1 = kRoleBase + 6;
inline constexpr Word kRoleCtxR1 = kRoleBase + 7;
inline constexpr Word kRoleGroup = kRoleBase + 8;  // sort refinement group
inline constexpr Word kRolePark = kRoleBase + 9;   // sort parked-bank ticket
inline constexpr Word kRoleEdgeCtx = kRoleBase + 10;   // chunk-machine edge
inline constexpr Word kRoleSliceCtx = kRoleBase + 11;  // chunk-machine slice

inline bool is_role(Word w) { return w >= kRoleBase; }

// Packs a field into [shift, shift+bits); value must fit.
Word pack_field(Word value, int shift, int bits);
inline Word unpack_field(Word packed, int shift, int bits) {
  return (packed >> shift) & ((Word{1} << bits) - 1);
}

// 21-bit pair packing used for vertex pairs: order-isomorphic with (a, b).
inline constexpr int kPairBits = 21;
Word pack_pair(Word a, Word b);
inline Word pair_first(Word p) { return p >> kPairBits; }
inline Word pair_second(Word p) { return p & ((Word{1} << kPairBits) - 1); }

// Fan-in scan engine. Evaluates a monoid over the leaf window and delivers
// to every leaf the combined value of all leaves strictly left (L) and
// strictly right (R) of it, as ctx records tagged 0 or 1 so two chained
// scans can coexist in one box. Costs 2*ceil(log_fan width) supersteps
// (0 when width <= 1); leaves carry their residents through unchanged and
// end holding residents plus ctx records. Internal tree machines are left
// empty. With want_root_total the root's combined value is also returned
// (read driver-side between the sweeps; identity when width == 0).
using Payload = std::array<Word, 4>;

struct ScanOp {
  int payload = 1;  // meaningful words, 1..4; decides fan and ctx shape
  int tag = 0;      // 0 or 1
  bool want_root_total = false;
  std::function<Payload(std::int64_t leaf_index, const std::vector<Record>&)>
      leaf;
  std::function<Payload(const Payload&, const Payload&)> combine;
  Payload identity{};
};

Payload run_scan(Simulation& sim, const Layout& leaves, const ScanOp& op);

// Reads the two ctx payloads a scan left in a leaf box; missing records
// (window of one, or an empty leaf) read as the identity.
struct CtxPair {
  Payload left;
  Payload right;
};
CtxPair read_ctx(const std::vector<Record>& box, int tag, int payload,
                 const Payload& identity);

// Largest child count per tree node such that every sweep round fits S:
// receiving fan summaries, retaining them while forwarding one, and
// fanning ctx records out to the children.
int scan_fan(std::int64_t space, int payload);

}  // namespace mpctri

#endif  // MPCTRI_WIRE_HPP_
