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

// Superstep protocols for the machine-level primitives. Everything is built
// from three moves: dense banks addressed slot-major, fan-in scan sweeps,
// and rank-and-route rounds whose destinations come out of scan results.
// Round schedules are deterministic functions of bank shapes and never of
// record values; budgets are sized so every send and receive fits S with
// control records riding alongside the data.

#include "mpctri/primitives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mpctri/graph.hpp"
#include "mpctri/sim.hpp"
#include "mpctri/wire.hpp"

namespace mpctri {
namespace {

using U128 = unsigned __int128;

void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

// Data records are capped well below S so scan ctx, group tags and routing
// tickets always fit next to them within one round's budget.
Word working_words(Word space) { return 2 * space / 5; }

std::int64_t bank_cap(Word space, int arity) {
  return std::max<Word>(1, working_words(space) / std::max(arity, 1));
}

bool in_window(const Layout& w, std::int64_t mach) {
  return w.width > 0 && mach >= w.base && mach < w.base + w.width;
}

// Machine window without bank semantics (scan-tree levels, chunk banks).
Layout bare_window(Simulation& sim, std::int64_t width) {
  Layout t;
  t.width = width;
  t.base = sim.reserve_window(width);
  return t;
}

// Number of addressable slots; equals records for dense-exact banks and
// dominates it for ragged ones.
std::int64_t slot_capacity(const Layout& bank) {
  return bank.width * bank.cap_records;
}

}  // namespace

// ---------------------------------------------------------------------------
// Wire helpers.

Layout reserve_layout(Simulation& sim, std::int64_t records, int arity,
                      std::int64_t cap_records) {
  require(records >= 0 && arity >= 1 && arity <= Record::kMaxArity &&
              cap_records >= 1,
          "layout: bad shape");
  Layout out;
  out.records = records;
  out.max_arity = arity;
  out.cap_records = cap_records;
  out.width = ceil_div(records, cap_records);
  out.base = sim.reserve_window(out.width);
  return out;
}

void step_over(Simulation& sim, std::initializer_list<const Layout*> windows,
               const LocalFn& fn) {
  std::vector<MachineRange> rs;
  for (const Layout* w : windows)
    if (w->width > 0) rs.push_back({w->base, w->base + w->width});
  sim.run_step(rs, fn);
}

std::vector<Record> gather_layout(const Simulation& sim, const Layout& bank) {
  return sim.gather(bank.base, bank.base + bank.width);
}

Word pack_field(Word value, int shift, int bits) {
  if (value < 0 || value >= (Word{1} << bits))
    throw ContractViolation("pack: field value out of range");
  return value << shift;
}

Word pack_pair(Word a, Word b) {
  return pack_field(a, kPairBits, kPairBits) | pack_field(b, 0, kPairBits);
}

// ---------------------------------------------------------------------------
// Scan engine.

namespace {

constexpr Word kCtxSingle[2] = {kRoleCtx0, kRoleCtx1};
constexpr Word kCtxLeft[2] = {kRoleCtxL0, kRoleCtxL1};
constexpr Word kCtxRight[2] = {kRoleCtxR0, kRoleCtxR1};

Record encode_summary(std::int64_t slot, const Payload& p, int payload) {
  Record r{kRoleSum, slot};
  for (int i = 0; i < payload; ++i) r.push(p[i]);
  return r;
}

// Ctx fits one record for payloads 1..2 and splits into an L and an R
// record for payloads 3..4 (record arity is capped at 6).
void send_ctx(Emitter& out, std::int64_t dest, int tag, int payload,
              const Payload& l, const Payload& r) {
  if (payload <= 2) {
    Record c{kCtxSingle[tag]};
    for (int i = 0; i < payload; ++i) c.push(l[i]);
    for (int i = 0; i < payload; ++i) c.push(r[i]);
    out.send(dest, c);
  } else {
    Record cl{kCtxLeft[tag]};
    Record cr{kCtxRight[tag]};
    for (int i = 0; i < payload; ++i) cl.push(l[i]);
    for (int i = 0; i < payload; ++i) cr.push(r[i]);
    out.send(dest, cl);
    out.send(dest, cr);
  }
}

}  // namespace

CtxPair read_ctx(const std::vector<Record>& box, int tag, int payload,
                 const Payload& identity) {
  CtxPair c{identity, identity};
  for (const Record& r : box) {
    if (r.arity() == 0) continue;
    if (r[0] == kCtxSingle[tag]) {
      for (int i = 0; i < payload; ++i) c.left[i] = r[1 + i];
      for (int i = 0; i < payload; ++i) c.right[i] = r[1 + payload + i];
    } else if (r[0] == kCtxLeft[tag]) {
      for (int i = 0; i < payload; ++i) c.left[i] = r[1 + i];
    } else if (r[0] == kCtxRight[tag]) {
      for (int i = 0; i < payload; ++i) c.right[i] = r[1 + i];
    }
  }
  return c;
}

int scan_fan(std::int64_t space, int payload) {
  const std::int64_t sumw = 2 + payload;
  const std::int64_t ctxw = payload <= 2 ? 1 + 2 * payload : 2 * (1 + payload);
  const std::int64_t fan =
      std::min<std::int64_t>(space / ctxw, (space - ctxw) / sumw);
  require(fan >= 2, "scan: machine space below the protocol floor");
  return static_cast<int>(fan);
}

Payload run_scan(Simulation& sim, const Layout& leaves, const ScanOp& op) {
  require(op.payload >= 1 && op.payload <= 4, "scan: payload out of range");
  require(op.tag == 0 || op.tag == 1, "scan: bad tag");
  Payload total = op.identity;
  if (leaves.width == 0) return total;
  if (leaves.width == 1) {
    if (op.want_root_total) {
      auto box = sim.read_machine(leaves.base);
      if (!box.empty()) total = op.leaf(0, box);
    }
    return total;
  }

  const int fan = scan_fan(sim.config().space, op.payload);
  std::vector<Layout> lvl{leaves};
  while (lvl.back().width > 1)
    lvl.push_back(bare_window(sim, ceil_div(lvl.back().width, fan)));
  const int h = static_cast<int>(lvl.size()) - 1;

  auto fold_slots = [&op](const std::vector<Record>& box, std::int64_t nchild,
                          std::vector<Payload>& s, std::vector<bool>& have) {
    s.assign(nchild, op.identity);
    have.assign(nchild, false);
    for (const Record& r : box) {
      if (r.arity() < 2 || r[0] != kRoleSum) continue;
      const std::int64_t slot = r[1];
      if (slot < 0 || slot >= nchild) continue;
      for (int i = 0; i < op.payload; ++i) s[slot][i] = r[2 + i];
      have[slot] = true;
    }
  };

  // Up sweep: leaves summarize themselves, internal nodes fold the child
  // summaries they keep. Everyone self-sends what they hold.
  for (int r = 1; r <= h; ++r) {
    const Layout from = lvl[r - 1];
    const Layout to = lvl[r];
    step_over(sim, {&from, &to},
              [&, from, to, r](std::int64_t mach, std::vector<Record> box,
                               Emitter& out) {
                const std::int64_t idx = mach - from.base;
                Payload v;
                if (r == 1) {
                  v = op.leaf(idx, box);
                } else {
                  std::vector<Payload> s;
                  std::vector<bool> have;
                  fold_slots(box, fan, s, have);
                  v = op.identity;
                  for (int c = 0; c < fan; ++c)
                    if (have[c]) v = op.combine(v, s[c]);
                }
                for (const Record& rec : box) out.send(mach, rec);
                out.send(to.base + idx / fan,
                         encode_summary(idx % fan, v, op.payload));
              });
  }

  if (op.want_root_total) {
    std::vector<Payload> s;
    std::vector<bool> have;
    fold_slots(sim.read_machine(lvl[h].base), fan, s, have);
    total = op.identity;
    for (int c = 0; c < fan; ++c)
      if (have[c]) total = op.combine(total, s[c]);
  }

  // Down sweep: each node hands every nonempty child the fold of everything
  // left and right of that child's subtree. Nodes die as the sweep passes.
  for (int d = 1; d <= h; ++d) {
    const Layout upper = lvl[h - d + 1];
    const Layout lower = lvl[h - d];
    step_over(
        sim, {&upper, &lower},
        [&, upper, lower](std::int64_t mach, std::vector<Record> box,
                          Emitter& out) {
          if (!in_window(upper, mach)) {
            for (const Record& rec : box) out.send(mach, rec);
            return;
          }
          const std::int64_t idx = mach - upper.base;
          const std::int64_t child0 = idx * fan;
          const std::int64_t nchild =
              std::min<std::int64_t>(fan, lower.width - child0);
          const CtxPair my = read_ctx(box, op.tag, op.payload, op.identity);
          std::vector<Payload> s;
          std::vector<bool> have;
          fold_slots(box, nchild, s, have);
          std::vector<Payload> pre(nchild + 1, op.identity);
          for (std::int64_t c = 0; c < nchild; ++c)
            pre[c + 1] = have[c] ? op.combine(pre[c], s[c]) : pre[c];
          std::vector<Payload> suf(nchild, op.identity);
          Payload acc = op.identity;
          for (std::int64_t c = nchild - 1; c >= 0; --c) {
            suf[c] = acc;
            if (have[c]) acc = op.combine(s[c], acc);
          }
          for (std::int64_t c = 0; c < nchild; ++c) {
            if (!have[c]) continue;  // empty subtree, nobody to tell
            send_ctx(out, lower.base + child0 + c, op.tag, op.payload,
                     op.combine(my.left, pre[c]),
                     op.combine(suf[c], my.right));
          }
        });
  }
  return total;
}

// ---------------------------------------------------------------------------
// spread_initial.

Layout spread_initial(Simulation& sim, std::int64_t records, int arity,
                      std::int64_t cap_records) {
  const Word S = sim.config().space;
  require(records >= 0 && arity >= 1 && arity <= Record::kMaxArity,
          "spread: bad shape");
  require(cap_records >= 1 && cap_records * arity <= working_words(S),
          "spread: cap over density");
  if (records == 0) {
    Layout out;
    out.max_arity = arity;
    out.cap_records = cap_records;
    return out;
  }
  // The constructor dealt contiguous near-equal runs across m0 machines.
  // Re-cut them into cap-sized slots; sources fire in machine order and each
  // source emits ascending slots, so box order equals slot order after the
  // (destination, source) delivery sort.
  const std::int64_t m0 = sim.frontier();
  require(m0 >= 1, "spread: no initial machines");
  Layout out = reserve_layout(sim, records, arity, cap_records);
  const Layout init{0, m0, records, arity, 0};
  const std::int64_t q = records / m0;
  const std::int64_t rem = records % m0;
  step_over(sim, {&init, &out},
            [&, out, q, rem, arity](std::int64_t mach,
                                    std::vector<Record> box, Emitter& em) {
              std::int64_t slot = mach * q + std::min(mach, rem);
              for (const Record& r : box) {
                require(r.arity() == arity && !is_role(r[0]),
                        "spread: foreign record in initial placement");
                em.send(out.base + slot / out.cap_records, r);
                ++slot;
              }
            });
  return out;
}

// ---------------------------------------------------------------------------
// Sort. Refines the key two bits per level; each level counts the four
// subgroups with a segmented scan, allocates fresh machine spans for
// subgroups still too big, parks the rest with final output ranks, and
// routes records by in-subgroup rank. Parked machines compact into the
// output bank, which then orders itself locally.

namespace {

struct SortShape {
  // (word index, bit width) in comparison order; key fields then tiebreak
  // fields. Missing words (mixed-arity banks) read as zero.
  std::vector<std::pair<int, int>> fields;
  int kc_bits = 0;
};

SortShape make_shape(int arity, const SortPlan& plan) {
  SortShape sh;
  require(!plan.indices.empty() &&
              plan.indices.size() == plan.bits.size(),
          "sort: malformed key");
  std::vector<bool> is_key(arity, false);
  for (std::size_t i = 0; i < plan.indices.size(); ++i) {
    const int j = plan.indices[i];
    const int b = plan.bits[i];
    require(j >= 0 && j < arity && !is_key[j], "sort: bad key index");
    require(b >= 1 && b <= 60, "sort: bad key width");
    is_key[j] = true;
    sh.fields.push_back({j, b});
    sh.kc_bits += b;
  }
  if (plan.full_tiebreak) {
    for (int j = 0; j < arity; ++j) {
      if (is_key[j]) continue;
      sh.fields.push_back({j, kPairBits});
      sh.kc_bits += kPairBits;
    }
  }
  require(sh.kc_bits <= 126, "sort: key too wide");
  return sh;
}

U128 record_kc(const Record& r, const SortShape& sh) {
  U128 kc = 0;
  for (const auto& [j, b] : sh.fields) {
    const Word w = j < r.arity() ? r[j] : 0;
    if (w < 0 || w >= (Word{1} << b))
      throw ContractViolation("sort: key word out of range");
    kc = (kc << b) | static_cast<U128>(w);
  }
  return kc;
}

// Local order: packed key, then the full record lexicographically (a fixed
// order for records the key cannot tell apart).
void local_sort(std::vector<Record>& recs, const SortShape& sh) {
  std::vector<std::pair<U128, std::int64_t>> keyed(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i)
    keyed[i] = {record_kc(recs[i], sh), static_cast<std::int64_t>(i)};
  std::sort(keyed.begin(), keyed.end(),
            [&recs](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first < b.first;
              const Record& x = recs[a.second];
              const Record& y = recs[b.second];
              const int n = std::min(x.arity(), y.arity());
              for (int i = 0; i < n; ++i)
                if (x[i] != y[i]) return x[i] < y[i];
              if (x.arity() != y.arity()) return x.arity() < y.arity();
              return a.second < b.second;
            });
  std::vector<Record> sorted(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) sorted[i] = recs[keyed[i].second];
  recs = std::move(sorted);
}

// Per-subgroup counters of one machine segment, where a segment runs from
// one group-first machine to the next. b marks "a group starts here"; suf
// counts records since the last boundary, pre counts records before the
// first boundary (equal to suf when there is none).
struct SegCounts {
  bool b = false;
  std::array<std::int64_t, 4> suf{};
  std::array<std::int64_t, 4> pre{};
};

Word seg_field(std::int64_t v) {
  require(v >= 0 && v < (Word{1} << 22), "sort: segment counter overflow");
  return v;
}

Payload seg_pack(const SegCounts& c, int nsub) {
  Payload p{};
  p[0] = (c.b ? Word{1} << 45 : 0) | seg_field(c.suf[0]) |
         (seg_field(c.suf[1]) << 22);
  if (nsub == 2) {
    p[1] = seg_field(c.pre[0]) | (seg_field(c.pre[1]) << 22);
  } else {
    p[1] = seg_field(c.suf[2]) | (seg_field(c.suf[3]) << 22);
    p[2] = seg_field(c.pre[0]) | (seg_field(c.pre[1]) << 22);
    p[3] = seg_field(c.pre[2]) | (seg_field(c.pre[3]) << 22);
  }
  return p;
}

SegCounts seg_unpack(const Payload& p, int nsub) {
  const Word m = (Word{1} << 22) - 1;
  SegCounts c;
  c.b = (p[0] >> 45) & 1;
  c.suf[0] = p[0] & m;
  c.suf[1] = (p[0] >> 22) & m;
  if (nsub == 2) {
    c.pre[0] = p[1] & m;
    c.pre[1] = (p[1] >> 22) & m;
  } else {
    c.suf[2] = p[1] & m;
    c.suf[3] = (p[1] >> 22) & m;
    c.pre[0] = p[2] & m;
    c.pre[1] = (p[2] >> 22) & m;
    c.pre[2] = p[3] & m;
    c.pre[3] = (p[3] >> 22) & m;
  }
  return c;
}

SegCounts seg_combine(const SegCounts& x, const SegCounts& y, int nsub) {
  SegCounts r;
  r.b = x.b || y.b;
  for (int s = 0; s < nsub; ++s) {
    r.suf[s] = y.b ? y.suf[s] : x.suf[s] + y.suf[s];
    r.pre[s] = x.b ? x.pre[s] : x.pre[s] + y.pre[s];
  }
  return r;
}

// Group tags ride with the data: [role, depth | first<<8, idx limbs, obase].
// idx is the refined key prefix (up to 126 bits in three 42-bit limbs),
// obase the group's first output rank.
constexpr Word kGrpFirstBit = 256;

Record encode_grp(int depth, bool first, U128 idx, std::int64_t obase) {
  const U128 limb = (U128{1} << 42) - 1;
  return Record{kRoleGroup,
                static_cast<Word>(depth) | (first ? kGrpFirstBit : 0),
                static_cast<Word>(idx & limb),
                static_cast<Word>((idx >> 42) & limb),
                static_cast<Word>((idx >> 84) & limb),
                obase};
}

}  // namespace

Layout sort_with_plan(Simulation& sim, const Layout& in, const SortPlan& plan) {
  const Word S = sim.config().space;
  const Word H = working_words(S);
  require(in.max_arity >= 1 && in.max_arity <= Record::kMaxArity,
          "sort: bad input arity");
  require(in.records < (Word{1} << 21), "sort: too many records");
  const SortShape sh = make_shape(in.max_arity, plan);
  const std::int64_t cap =
      plan.cap_override > 0 ? plan.cap_override : bank_cap(S, in.max_arity);
  require(cap * in.max_arity <= H, "sort: output cap over density");

  if (in.records == 0) {
    Layout out;
    out.max_arity = in.max_arity;
    out.cap_records = cap;
    return out;
  }
  require(in.cap_records >= 1 && in.cap_records * in.max_arity <= H,
          "sort: input bank over density");
  // Route rounds send a machine's data plus one ticket per destination
  // machine it owns the first rank of; both input and level caps must fit.
  const auto route_load = [&](std::int64_t c) {
    return c * in.max_arity + (c / cap + 4) * 6;
  };
  require(route_load(in.cap_records) <= S && route_load(cap) <= S,
          "sort: caps leave no room for routing");

  Layout out = reserve_layout(sim, in.records, in.max_arity, cap);

  if (in.records <= cap) {
    // One machine holds everything: gather, then the shared local ordering.
    step_over(sim, {&in, &out},
              [&, out](std::int64_t, std::vector<Record> box, Emitter& em) {
                for (const Record& r : box) {
                  require(!is_role(r[0]), "sort: control record in input");
                  em.send(out.base, r);
                }
              });
  } else {
    Layout act = in;
    std::vector<Layout> parks;
    int depth = 0;
    for (int level = 0;; ++level) {
      require(level < 70, "sort: refinement failed to terminate");
      const int bits_lv = std::min(2, sh.kc_bits - depth);
      require(bits_lv >= 1, "sort: refined past the key");
      const int nsub = 1 << bits_lv;
      const int p1 = nsub == 4 ? 4 : 2;
      const Payload s1id = seg_pack(SegCounts{}, nsub);

      const auto sub_of = [&sh, depth, bits_lv, nsub](const Record& r) {
        const U128 kc = record_kc(r, sh);
        return static_cast<int>(
            (kc >> (sh.kc_bits - depth - bits_lv)) & (nsub - 1));
      };

      // Everything route needs to know about the group a machine sits in,
      // recomputed identically by every member from the scans.
      struct GroupView {
        bool has_data = false;
        bool first = false;
        U128 idx = 0;
        std::int64_t obase = 0;
        std::array<std::int64_t, 4> counts{};
        std::array<std::int64_t, 4> left{};
        std::array<std::int64_t, 4> tot{};
      };
      const auto analyze = [&, depth, bits_lv, nsub, p1,
                            s1id](const std::vector<Record>& box) {
        GroupView g;
        const CtxPair cx = read_ctx(box, 0, p1, s1id);
        const SegCounts L = seg_unpack(cx.left, nsub);
        const SegCounts R = seg_unpack(cx.right, nsub);
        const Record* grp = nullptr;
        for (const Record& r : box) {
          if (r.arity() == 0) continue;
          if (r[0] == kRoleGroup) {
            grp = &r;
          } else if (!is_role(r[0])) {
            g.has_data = true;
            ++g.counts[sub_of(r)];
          }
        }
        if (depth == 0) {
          bool none_before = true;
          for (int s = 0; s < nsub; ++s) none_before &= L.suf[s] == 0;
          g.first = g.has_data && none_before;
        } else if (grp != nullptr) {
          require(((*grp)[1] & 255) == depth, "sort: group depth skew");
          g.first = ((*grp)[1] & kGrpFirstBit) != 0;
          g.idx = static_cast<U128>((*grp)[2]) |
                  (static_cast<U128>((*grp)[3]) << 42) |
                  (static_cast<U128>((*grp)[4]) << 84);
          g.obase = (*grp)[5];
        } else {
          require(!g.has_data, "sort: data lost its group tag");
        }
        for (int s = 0; s < nsub; ++s) {
          g.left[s] = g.first ? 0 : L.suf[s];
          g.tot[s] = g.left[s] + g.counts[s] + R.pre[s];
        }
        return g;
      };
      const auto done_sub = [&sh, cap, depth, bits_lv](std::int64_t tot) {
        return tot <= cap || depth + bits_lv >= sh.kc_bits;
      };
      const auto needs_of = [&, nsub](const GroupView& g) {
        std::int64_t a = 0;
        std::int64_t p = 0;
        for (int s = 0; s < nsub; ++s) {
          if (g.tot[s] == 0) continue;
          const std::int64_t machines = ceil_div(g.tot[s], cap);
          (done_sub(g.tot[s]) ? p : a) += machines;
        }
        return std::pair<std::int64_t, std::int64_t>{a, p};
      };

      // Scan 1: segmented subgroup counters.
      ScanOp s1;
      s1.payload = p1;
      s1.tag = 0;
      s1.identity = s1id;
      s1.leaf = [sub_of, nsub](std::int64_t, const std::vector<Record>& box) {
        SegCounts c;
        for (const Record& r : box) {
          if (r.arity() == 0) continue;
          if (r[0] == kRoleGroup) {
            c.b = c.b || ((r[1] & kGrpFirstBit) != 0);
          } else if (!is_role(r[0])) {
            ++c.suf[sub_of(r)];
          }
        }
        for (int s = 0; s < nsub; ++s) c.pre[s] = c.b ? 0 : c.suf[s];
        return seg_pack(c, nsub);
      };
      s1.combine = [nsub](const Payload& x, const Payload& y) {
        return seg_pack(
            seg_combine(seg_unpack(x, nsub), seg_unpack(y, nsub), nsub), nsub);
      };
      run_scan(sim, act, s1);

      // Scan 2: machine-span needs, contributed by group-first machines;
      // the root total sizes the next level exactly.
      ScanOp s2;
      s2.payload = 2;
      s2.tag = 1;
      s2.want_root_total = true;
      s2.identity = {0, 0, 0, 0};
      s2.leaf = [analyze, needs_of](std::int64_t,
                                    const std::vector<Record>& box) -> Payload {
        const GroupView g = analyze(box);
        if (!g.first) return {0, 0, 0, 0};
        const auto [a, p] = needs_of(g);
        return {a, p, 0, 0};
      };
      s2.combine = [](const Payload& x, const Payload& y) -> Payload {
        return {x[0] + y[0], x[1] + y[1], 0, 0};
      };
      const Payload totals = run_scan(sim, act, s2);
      const std::int64_t act_total = totals[0];
      const std::int64_t park_total = totals[1];

      Layout next = bare_window(sim, act_total);
      next.max_arity = in.max_arity;
      next.cap_records = cap;
      next.records = in.records;
      Layout park = bare_window(sim, park_total);
      park.max_arity = in.max_arity;
      park.cap_records = cap;

      // Route: every record flies to its in-subgroup rank; owners of rank
      // multiples of cap also deliver the destination's group tag or its
      // parked output base.
      std::vector<MachineRange> rs{{act.base, act.base + act.width}};
      if (next.width > 0) rs.push_back({next.base, next.base + next.width});
      if (park.width > 0) rs.push_back({park.base, park.base + park.width});
      sim.run_step(rs, [&, depth, bits_lv, nsub, cap, next, park, analyze,
                        needs_of, done_sub, sub_of](
                           std::int64_t, std::vector<Record> box,
                           Emitter& em) {
        const GroupView g = analyze(box);
        if (!g.has_data) return;  // scan leftovers die with the level
        const CtxPair c2 = read_ctx(box, 1, 2, {0, 0, 0, 0});
        const auto [a_need, p_need] = needs_of(g);
        const std::int64_t a_base =
            next.base + c2.left[0] - (g.first ? 0 : a_need);
        const std::int64_t p_base =
            park.base + c2.left[1] - (g.first ? 0 : p_need);
        std::array<std::int64_t, 4> span_base{};
        std::array<std::int64_t, 4> sub_obase{};
        std::array<bool, 4> done{};
        std::int64_t a_off = 0;
        std::int64_t p_off = 0;
        std::int64_t ob = g.obase;
        for (int s = 0; s < nsub; ++s) {
          sub_obase[s] = ob;
          ob += g.tot[s];
          if (g.tot[s] == 0) continue;
          done[s] = done_sub(g.tot[s]);
          const std::int64_t machines = ceil_div(g.tot[s], cap);
          if (done[s]) {
            span_base[s] = p_base + p_off;
            p_off += machines;
          } else {
            span_base[s] = a_base + a_off;
            a_off += machines;
          }
        }
        std::array<std::int64_t, 4> seen{};
        for (const Record& r : box) {
          if (r.arity() == 0 || is_role(r[0])) continue;
          const int s = sub_of(r);
          const std::int64_t rho = g.left[s] + seen[s]++;
          em.send(span_base[s] + rho / cap, r);
        }
        for (int s = 0; s < nsub; ++s) {
          if (g.counts[s] == 0) continue;
          const std::int64_t lo = g.left[s];
          const std::int64_t hi = lo + g.counts[s];
          for (std::int64_t j = ceil_div(lo, cap); j * cap < hi; ++j) {
            if (done[s]) {
              em.send(span_base[s] + j,
                      Record{kRolePark, sub_obase[s] + j * cap});
            } else {
              em.send(span_base[s] + j,
                      encode_grp(depth + bits_lv, j == 0,
                                 (g.idx << bits_lv) | static_cast<U128>(s),
                                 sub_obase[s]));
            }
          }
        }
      });

      if (park.width > 0) parks.push_back(park);
      depth += bits_lv;
      act = next;
      if (act_total == 0) break;
    }

    // Compact: parked machines order locally and fly to final ranks.
    require(!parks.empty(), "sort: nothing parked");
    std::vector<MachineRange> rs;
    for (const Layout& p : parks) rs.push_back({p.base, p.base + p.width});
    rs.push_back({out.base, out.base + out.width});
    sim.run_step(rs, [&, out](std::int64_t, std::vector<Record> box,
                              Emitter& em) {
      std::int64_t base_rank = -1;
      std::vector<Record> data;
      for (const Record& r : box) {
        if (r.arity() > 0 && r[0] == kRolePark)
          base_rank = r[1];
        else if (r.arity() > 0 && !is_role(r[0]))
          data.push_back(r);
      }
      require(base_rank >= 0, "sort: parked data lost its ticket");
      local_sort(data, sh);
      for (std::size_t j = 0; j < data.size(); ++j)
        em.send(out.base + (base_rank + static_cast<std::int64_t>(j)) /
                               out.cap_records,
                data[j]);
    });
  }

  // Final round: per-machine order, self-sent in place.
  step_over(sim, {&out},
            [&](std::int64_t mach, std::vector<Record> box, Emitter& em) {
              local_sort(box, sh);
              for (const Record& r : box) em.send(mach, r);
            });
  return out;
}

Layout mpc_sort(Simulation& sim, const Layout& in, const KeySpec& key) {
  const std::int64_t t0 = sim.trace().rounds;
  SortPlan plan;
  plan.indices = key.indices;
  plan.bits.assign(key.indices.size(), kPairBits);
  plan.full_tiebreak = true;
  Layout out = sort_with_plan(sim, in, plan);
  pad_rounds(sim, t0, rounds_budget(sim.config().delta, kSortRoundsK));
  return out;
}

// ---------------------------------------------------------------------------
// Count.

namespace {

CountResult count_core(Simulation& sim, const Layout& in, bool sum_word0) {
  if (in.width == 0) {
    sim.run_null_step();
    return {0, -1};
  }
  const Word S = sim.config().space;
  Layout cur{in.base, in.width, 0, 0, 0};
  bool leaves = true;
  do {
    const Layout up = bare_window(sim, ceil_div(cur.width, S));
    const Layout from = cur;
    const bool lf = leaves;
    step_over(sim, {&from, &up},
              [&, from, up, lf, sum_word0](std::int64_t mach,
                                           std::vector<Record> box,
                                           Emitter& em) {
                Word part = 0;
                for (const Record& r : box) {
                  if (lf) {
                    if (r.arity() == 0 || is_role(r[0])) continue;
                    part += sum_word0 ? r[0] : 1;
                  } else {
                    part += r[0];
                  }
                }
                em.send(up.base + (mach - from.base) / S, Record{part});
              });
    cur = up;
    leaves = false;
  } while (cur.width > 1);
  Word total = 0;
  for (const Record& r : sim.read_machine(cur.base)) total += r[0];
  return {total, cur.base};
}

}  // namespace

CountResult mpc_count(Simulation& sim, const Layout& in) {
  return count_core(sim, in, false);
}

// ---------------------------------------------------------------------------
// Duplicate.

Layout mpc_duplicate(Simulation& sim, const Layout& edges, bool keep_input) {
  const Word S = sim.config().space;
  require(edges.max_arity == 2, "duplicate: edges must be pairs");
  require(edges.cap_records >= 1 &&
              edges.cap_records * (keep_input ? 6 : 4) <= S,
          "duplicate: input cap over budget");
  const std::int64_t cap_out = bank_cap(S, 2);
  Layout out;
  out.records = 2 * edges.records;
  out.max_arity = 2;
  out.cap_records = cap_out;
  out.width = ceil_div(2 * slot_capacity(edges), cap_out);
  out.base = sim.reserve_window(out.width);
  if (edges.width == 0) return out;
  step_over(sim, {&edges, &out},
            [&, out](std::int64_t mach, std::vector<Record> box, Emitter& em) {
              std::int64_t g = (mach - edges.base) * edges.cap_records;
              for (const Record& r : box) {
                require(r.arity() == 2 && !is_role(r[0]),
                        "duplicate: malformed edge");
                em.send(out.base + (2 * g) / out.cap_records, r);
                em.send(out.base + (2 * g + 1) / out.cap_records,
                        Record{r[1], r[0]});
                if (keep_input) em.send(mach, r);
                ++g;
              }
            });
  return out;
}

// ---------------------------------------------------------------------------
// Run-length machinery shared by count_duplicates and the partition ranks:
// a monoid over (first key, last key, first-run count, last-run count, runs).

namespace {

struct RunSum {
  Word fk = -1;
  Word lk = -1;
  std::int64_t fc = 0;
  std::int64_t lc = 0;
  std::int64_t nruns = 0;
};

Payload runsum_pack(const RunSum& r) {
  require(r.fc >= 0 && r.fc < (Word{1} << 22) && r.lc >= 0 &&
              r.lc < (Word{1} << 22),
          "run scan: counter overflow");
  return {r.fk, r.lk, r.fc | (r.lc << 22), r.nruns};
}

RunSum runsum_unpack(const Payload& p) {
  const Word m = (Word{1} << 22) - 1;
  return {p[0], p[1], p[2] & m, (p[2] >> 22) & m, p[3]};
}

RunSum runsum_combine(const RunSum& x, const RunSum& y) {
  if (x.nruns == 0) return y;
  if (y.nruns == 0) return x;
  const bool merge = x.lk == y.fk;
  RunSum r;
  r.fk = x.fk;
  r.lk = y.lk;
  r.nruns = x.nruns + y.nruns - (merge ? 1 : 0);
  r.fc = x.fc + (x.nruns == 1 && merge ? y.fc : 0);
  r.lc = y.lc + (y.nruns == 1 && merge ? x.lc : 0);
  return r;
}

RunSum runsum_leaf(const std::vector<Record>& box, int key_index) {
  RunSum c;
  for (const Record& r : box) {
    if (r.arity() == 0 || is_role(r[0])) continue;
    require(key_index < r.arity(), "run scan: record too short for key");
    const Word key = r[key_index];
    if (c.nruns == 0) {
      c.fk = c.lk = key;
      c.fc = c.lc = 1;
      c.nruns = 1;
    } else if (key == c.lk) {
      ++c.lc;
      if (c.nruns == 1) ++c.fc;
    } else {
      require(key > c.lk, "run scan: input not sorted by key");
      c.lk = key;
      c.lc = 1;
      ++c.nruns;
    }
  }
  return c;
}

ScanOp runsum_op(int key_index, int tag) {
  ScanOp op;
  op.payload = 4;
  op.tag = tag;
  op.identity = runsum_pack(RunSum{});
  op.leaf = [key_index](std::int64_t, const std::vector<Record>& box) {
    return runsum_pack(runsum_leaf(box, key_index));
  };
  op.combine = [](const Payload& x, const Payload& y) {
    return runsum_pack(runsum_combine(runsum_unpack(x), runsum_unpack(y)));
  };
  return op;
}

}  // namespace

Layout mpc_count_duplicates(Simulation& sim, const Layout& in, int key_index,
                            std::int64_t distinct_bound, bool pad) {
  const std::int64_t t0 = sim.trace().rounds;
  const Word S = sim.config().space;
  require(key_index >= 0 && key_index < in.max_arity,
          "count_duplicates: bad key index");
  require(distinct_bound >= 0, "count_duplicates: bad distinct bound");
  Layout out = reserve_layout(sim, std::max<std::int64_t>(distinct_bound, 1),
                              2, bank_cap(S, 2));
  out.records = distinct_bound;
  if (in.width == 0) {
    if (pad)
      pad_rounds(sim, t0, rounds_budget(sim.config().delta, kCountDupRoundsK));
    return out;
  }
  // The apply round self-sends the data and adds two words per local run.
  require(in.cap_records * (in.max_arity + 2) <= S,
          "count_duplicates: input cap leaves no room for counts");

  run_scan(sim, in, runsum_op(key_index, 0));

  // Apply: each run's first holder publishes [key, count]; run index is the
  // output slot, so the bank comes out keyed in sorted order. Data records
  // self-send; ctx is dropped, leaving the input bank as it came.
  const Payload id = runsum_pack(RunSum{});
  step_over(
      sim, {&in, &out},
      [&, out, key_index, distinct_bound, id](std::int64_t mach,
                                              std::vector<Record> box,
                                              Emitter& em) {
        const CtxPair cx = read_ctx(box, 0, 4, id);
        const RunSum L = runsum_unpack(cx.left);
        const RunSum R = runsum_unpack(cx.right);
        std::vector<Record> data;
        for (const Record& r : box)
          if (r.arity() > 0 && !is_role(r[0])) data.push_back(r);
        if (!data.empty()) {
          require(L.nruns == 0 || L.lk <= data[0][key_index],
                  "count_duplicates: input not sorted by key");
          const bool cont =
              L.nruns > 0 && L.lk == data[0][key_index];
          std::int64_t i = 0;
          const std::int64_t nd = static_cast<std::int64_t>(data.size());
          std::int64_t starts = 0;
          while (i < nd) {
            const Word key = data[i][key_index];
            std::int64_t j = i;
            while (j < nd && data[j][key_index] == key) ++j;
            if (!(i == 0 && cont)) {
              std::int64_t count = j - i;
              if (j == nd && R.nruns > 0 && R.fk == key) count += R.fc;
              const std::int64_t run_idx = L.nruns + starts;
              require(run_idx < distinct_bound,
                      "count_duplicates: distinct bound too small");
              em.send(out.base + run_idx / out.cap_records,
                      Record{key, count});
              ++starts;
            }
            i = j;
          }
        }
        for (const Record& r : data) em.send(mach, r);
      });
  if (pad)
    pad_rounds(sim, t0, rounds_budget(sim.config().delta, kCountDupRoundsK));
  return out;
}

// ---------------------------------------------------------------------------
// Tag count. Keys double as parity tags: counts enter the union as
// [2k, count], data as [2k+1, rest...], so one sort lands every count
// record directly in front of its key group.

Layout mpc_tag_count(Simulation& sim, const Layout& records,
                     const Layout& counts, int key_index, bool pad) {
  const std::int64_t t0 = sim.trace().rounds;
  const Word S = sim.config().space;
  const int a = records.max_arity;
  require(a >= 1 && a + 1 <= Record::kMaxArity, "tag_count: arity over cap");
  require(key_index >= 0 && key_index < a, "tag_count: bad key index");
  require(counts.max_arity == 2, "tag_count: counts must be pairs");
  Layout out = reserve_layout(sim, std::max<std::int64_t>(records.records, 1),
                              a + 1, bank_cap(S, a + 1));
  out.records = records.records;
  if (records.width == 0 && counts.width == 0) {
    if (pad) pad_rounds(sim, t0, rounds_budget(sim.config().delta, kTagRoundsK));
    return out;
  }
  require(records.cap_records >= 1 && counts.cap_records >= 1,
          "tag_count: inputs not banked");

  const int ua = std::max(a, 2);
  const std::int64_t cap_u = bank_cap(S, ua);
  const std::int64_t rslots = slot_capacity(records);
  Layout un;
  un.records = records.records + counts.records;
  un.max_arity = ua;
  un.cap_records = cap_u;
  un.width = ceil_div(rslots + slot_capacity(counts), cap_u);
  un.base = sim.reserve_window(un.width);

  step_over(
      sim, {&records, &counts, &un},
      [&, un, a, key_index, rslots](std::int64_t mach,
                                    std::vector<Record> box, Emitter& em) {
        const bool is_rec = in_window(records, mach);
        const Layout& src = is_rec ? records : counts;
        std::int64_t slot =
            (mach - src.base) * src.cap_records + (is_rec ? 0 : rslots);
        for (const Record& r : box) {
          require(r.arity() > 0 && !is_role(r[0]),
                  "tag_count: control record in input");
          Record u;
          if (is_rec) {
            require(r.arity() == a, "tag_count: ragged records");
            const Word k = r[key_index];
            require(k >= 0 && k < (Word{1} << 20),
                    "tag_count: key out of range");
            u.push(2 * k + 1);
            for (int i = 0; i < a; ++i) {
              if (i == key_index) continue;
              require(r[i] >= 0 && r[i] < (Word{1} << kPairBits),
                      "tag_count: word out of range");
              u.push(r[i]);
            }
          } else {
            require(r.arity() == 2, "tag_count: ragged counts");
            require(r[0] >= 0 && r[0] < (Word{1} << 20),
                    "tag_count: count key out of range");
            require(r[1] >= 0 && r[1] < (Word{1} << kPairBits),
                    "tag_count: count out of range");
            u = Record{2 * r[0], r[1]};
          }
          em.send(un.base + slot / un.cap_records, u);
          ++slot;
        }
      });

  SortPlan plan;
  plan.indices = {0};
  plan.bits = {22};
  plan.full_tiebreak = true;
  const Layout su = sort_with_plan(sim, un, plan);

  // Leader scan: the latest count record seen so far (packed, plus one so
  // zero means none) and how many data records precede the leaf.
  ScanOp op;
  op.payload = 2;
  op.tag = 0;
  op.identity = {0, 0, 0, 0};
  op.leaf = [](std::int64_t, const std::vector<Record>& box) -> Payload {
    Word leader = 0;
    Word data = 0;
    for (const Record& r : box) {
      if (r.arity() == 0 || is_role(r[0])) continue;
      if (r[0] % 2 == 0)
        leader = 1 + (((r[0] / 2) << 21) | r[1]);
      else
        ++data;
    }
    return {leader, data, 0, 0};
  };
  op.combine = [](const Payload& x, const Payload& y) -> Payload {
    return {y[0] != 0 ? y[0] : x[0], x[1] + y[1], 0, 0};
  };
  run_scan(sim, su, op);

  // Apply: rebuild each data record in input word order with the count
  // appended, placed at its global data rank. Count records die here.
  step_over(
      sim, {&su, &out},
      [&, out, a, key_index](std::int64_t, std::vector<Record> box,
                             Emitter& em) {
        const CtxPair cx = read_ctx(box, 0, 2, {0, 0, 0, 0});
        Word leader = cx.left[0];
        std::int64_t rank = cx.left[1];
        const Word cmask = (Word{1} << 21) - 1;
        for (const Record& r : box) {
          if (r.arity() == 0 || is_role(r[0])) continue;
          if (r[0] % 2 == 0) {
            leader = 1 + (((r[0] / 2) << 21) | r[1]);
            continue;
          }
          const Word k = (r[0] - 1) / 2;
          require(leader != 0 && ((leader - 1) >> 21) == k,
                  "tag_count: record key missing from counts");
          Record o;
          int t = 1;
          for (int i = 0; i < a; ++i)
            o.push(i == key_index ? k : r[t++]);
          o.push((leader - 1) & cmask);
          em.send(out.base + rank / out.cap_records, o);
          ++rank;
        }
      });
  if (pad) pad_rounds(sim, t0, rounds_budget(sim.config().delta, kTagRoundsK));
  return out;
}

// ---------------------------------------------------------------------------
// Filter. Queries and edges share a packed key word; after one sort, a key
// block survives when it contains an edge, found by an OR over run ends
// plus a survivor-rank prefix scan.

namespace {

struct RunOr {
  Word fk = -1;
  Word lk = -1;
  bool fh = false;
  bool lh = false;
};

Payload runor_pack(const RunOr& r) {
  return {r.fk, r.lk, (r.fh ? 1 : 0) | (r.lh ? 2 : 0), 0};
}

RunOr runor_unpack(const Payload& p) {
  return {p[0], p[1], (p[2] & 1) != 0, (p[2] & 2) != 0};
}

RunOr runor_combine(const RunOr& x, const RunOr& y) {
  if (x.fk == -1) return y;
  if (y.fk == -1) return x;
  const bool merge = x.lk == y.fk;
  RunOr r;
  r.fk = x.fk;
  r.lk = y.lk;
  r.fh = x.fh || (x.fk == x.lk && merge && y.fh);
  r.lh = y.lh || (y.fk == y.lk && merge && x.lh);
  return r;
}

RunOr runor_leaf(const std::vector<Record>& box) {
  RunOr c;
  bool first_open = true;
  Word cur = 0;
  bool curh = false;
  for (const Record& r : box) {
    if (r.arity() == 0 || is_role(r[0])) continue;
    const Word key = r[0];
    const bool e = r.arity() == 1;
    if (c.fk == -1) {
      c.fk = key;
      cur = key;
      curh = e;
      continue;
    }
    if (key == cur) {
      curh = curh || e;
      continue;
    }
    require(key > cur, "filter: union not sorted");
    if (first_open) {
      c.fh = curh;
      first_open = false;
    }
    cur = key;
    curh = e;
  }
  if (c.fk != -1) {
    if (first_open) c.fh = curh;
    c.lk = cur;
    c.lh = curh;
  }
  return c;
}

// Walks a sorted union box and calls fn for every query (arity >= 2) whose
// key block holds an edge, locally or across the box boundary.
template <typename F>
void filter_surviving(const std::vector<Record>& box, const RunOr& L,
                      const RunOr& R, F&& fn) {
  std::vector<const Record*> data;
  for (const Record& r : box)
    if (r.arity() > 0 && !is_role(r[0])) data.push_back(&r);
  std::int64_t i = 0;
  const std::int64_t nd = static_cast<std::int64_t>(data.size());
  while (i < nd) {
    const Word key = (*data[i])[0];
    std::int64_t j = i;
    bool hit = false;
    while (j < nd && (*data[j])[0] == key) {
      hit = hit || data[j]->arity() == 1;
      ++j;
    }
    if (i == 0 && L.fk != -1 && L.lk == key) hit = hit || L.lh;
    if (j == nd && R.fk != -1 && R.fk == key) hit = hit || R.fh;
    if (hit)
      for (std::int64_t t = i; t < j; ++t)
        if (data[t]->arity() >= 2) fn(*data[t]);
    i = j;
  }
}

// Shared core: sorted union in, survivors out at their global survivor
// rank. unpack_keys splits word 0 back into two words for the public shape.
Layout filter_run(Simulation& sim, const Layout& un, std::int64_t out_records,
                  int out_arity, bool unpack_keys) {
  const Word S = sim.config().space;
  SortPlan plan;
  plan.indices = {0};
  plan.bits = {2 * kPairBits};
  const Layout su = sort_with_plan(sim, un, plan);

  ScanOp orop;
  orop.payload = 3;
  orop.tag = 0;
  orop.identity = runor_pack(RunOr{});
  orop.leaf = [](std::int64_t, const std::vector<Record>& box) {
    return runor_pack(runor_leaf(box));
  };
  orop.combine = [](const Payload& x, const Payload& y) {
    return runor_pack(runor_combine(runor_unpack(x), runor_unpack(y)));
  };
  run_scan(sim, su, orop);

  const Payload orid = runor_pack(RunOr{});
  ScanOp pre;
  pre.payload = 1;
  pre.tag = 1;
  pre.identity = {0, 0, 0, 0};
  pre.leaf = [orid](std::int64_t, const std::vector<Record>& box) -> Payload {
    const CtxPair cx = read_ctx(box, 0, 3, orid);
    Word count = 0;
    filter_surviving(box, runor_unpack(cx.left), runor_unpack(cx.right),
                     [&count](const Record&) { ++count; });
    return {count, 0, 0, 0};
  };
  pre.combine = [](const Payload& x, const Payload& y) -> Payload {
    return {x[0] + y[0], 0, 0, 0};
  };
  run_scan(sim, su, pre);

  Layout out = reserve_layout(sim, std::max<std::int64_t>(out_records, 1),
                              out_arity, bank_cap(S, out_arity));
  out.records = out_records;
  step_over(sim, {&su, &out},
            [&, out, orid, unpack_keys](std::int64_t, std::vector<Record> box,
                                        Emitter& em) {
              const CtxPair c0 = read_ctx(box, 0, 3, orid);
              const CtxPair c1 = read_ctx(box, 1, 1, {0, 0, 0, 0});
              std::int64_t rank = c1.left[0];
              filter_surviving(
                  box, runor_unpack(c0.left), runor_unpack(c0.right),
                  [&](const Record& q) {
                    Record o;
                    if (unpack_keys) {
                      o.push(pair_first(q[0]));
                      o.push(pair_second(q[0]));
                      for (int i = 1; i < q.arity(); ++i) o.push(q[i]);
                    } else {
                      o = q;
                    }
                    em.send(out.base + rank / out.cap_records, o);
                    ++rank;
                  });
            });
  return out;
}

// Builds the query+edge union bank. pack_query turns a query record into
// its union form; edges always become single packed words.
Layout filter_union(Simulation& sim, const Layout& queries,
                    const Layout& edges, int ua,
                    const std::function<Record(const Record&)>& pack_query) {
  const Word S = sim.config().space;
  const std::int64_t cap_u = bank_cap(S, ua);
  const std::int64_t qslots = slot_capacity(queries);
  Layout un;
  un.records = queries.records + edges.records;
  un.max_arity = ua;
  un.cap_records = cap_u;
  un.width = ceil_div(qslots + slot_capacity(edges), cap_u);
  un.base = sim.reserve_window(un.width);
  step_over(sim, {&queries, &edges, &un},
            [&, un, qslots](std::int64_t mach, std::vector<Record> box,
                            Emitter& em) {
              const bool is_q = in_window(queries, mach);
              const Layout& src = is_q ? queries : edges;
              std::int64_t slot =
                  (mach - src.base) * src.cap_records + (is_q ? 0 : qslots);
              for (const Record& r : box) {
                require(r.arity() > 0 && !is_role(r[0]),
                        "filter: control record in input");
                if (is_q) {
                  em.send(un.base + slot / un.cap_records, pack_query(r));
                } else {
                  require(r.arity() == 2, "filter: malformed edge");
                  em.send(un.base + slot / un.cap_records,
                          Record{pack_pair(r[0], r[1])});
                }
                ++slot;
              }
            });
  return un;
}

}  // namespace

Layout mpc_filter(Simulation& sim, const Layout& queries, const Layout& edges) {
  const std::int64_t t0 = sim.trace().rounds;
  const int qa = queries.max_arity;
  require(qa >= 3 && qa <= 5, "filter: queries must have arity 3..5");
  require(edges.max_arity == 2, "filter: edges must be pairs");
  if (queries.width == 0 && edges.width == 0) {
    Layout out = reserve_layout(sim, 1, qa, bank_cap(sim.config().space, qa));
    out.records = 0;
    pad_rounds(sim, t0, rounds_budget(sim.config().delta, kFilterRoundsK));
    return out;
  }
  const int ua = qa - 1;
  const Layout un = filter_union(
      sim, queries, edges, ua, [qa](const Record& r) {
        require(r.arity() == qa, "filter: ragged queries");
        Record u{pack_pair(r[0], r[1])};
        for (int i = 2; i < qa; ++i) {
          require(r[i] >= 0 && r[i] < (Word{1} << kPairBits),
                  "filter: word out of range");
          u.push(r[i]);
        }
        return u;
      });
  Layout out = filter_run(sim, un, queries.records, qa, true);
  pad_rounds(sim, t0, rounds_budget(sim.config().delta, kFilterRoundsK));
  return out;
}

// ---------------------------------------------------------------------------
// Adjacency partitioning.

namespace detail {

std::int64_t duplicate_safe_cap(std::int64_t space) {
  return std::max<std::int64_t>(1, space / 6);
}

std::int64_t dense_cap(std::int64_t space, int arity) {
  return bank_cap(space, arity);
}

CountResult sum_window(Simulation& sim, const Layout& in) {
  return count_core(sim, in, true);
}

Layout filter_packed(Simulation& sim, const Layout& packed_queries,
                     const Layout& edges) {
  require(packed_queries.max_arity >= 2,
          "filter: packed queries need a rider word");
  require(edges.max_arity == 2, "filter: edges must be pairs");
  const int ua = packed_queries.max_arity;
  const Layout un = filter_union(sim, packed_queries, edges, ua,
                                 [](const Record& r) { return r; });
  return filter_run(sim, un, packed_queries.records, ua, false);
}

ChunkedAdjacency partition_core(Simulation& sim, const Layout& tagged,
                                std::int64_t chunk_capacity,
                                std::int64_t total_chunk_bound,
                                std::int64_t doubling_bound) {
  const Word S = sim.config().space;
  const Word H = working_words(S);
  require(tagged.max_arity == 3, "partition: tagged records must be triples");
  require(chunk_capacity >= 1 && 3 * chunk_capacity + 1 <= S &&
              2 * chunk_capacity + 18 <= S,
          "partition: chunk capacity over budget");
  require(tagged.records % 2 == 0,
          "partition: tagged bank must hold both orientations");
  require(tagged.records < (Word{1} << 20), "partition: too many records");
  const std::int64_t cap = chunk_capacity;

  ChunkedAdjacency res;
  res.chunk_capacity = cap;
  if (tagged.records == 0) {
    res.chunk_bank = bare_window(sim, 0);
    return res;
  }
  require(tagged.cap_records >= 1 && tagged.cap_records * 3 <= H,
          "partition: tagged bank over density");
  const std::int64_t n2 = tagged.records;  // both orientations
  const std::int64_t mm = n2 / 2;          // one per edge

  // Twin bank: [min, max, endpoint, deg(endpoint)] so one sort lands the
  // two orientations of an edge side by side. The cap stays even so twins
  // never straddle machines.
  const std::int64_t cap5 = std::max<std::int64_t>(2, (H / 4) & ~Word{1});
  Layout b5;
  b5.records = n2;
  b5.max_arity = 4;
  b5.cap_records = cap5;
  b5.width = ceil_div(slot_capacity(tagged), cap5);
  b5.base = sim.reserve_window(b5.width);
  step_over(sim, {&tagged, &b5},
            [&, b5](std::int64_t mach, std::vector<Record> box, Emitter& em) {
              std::int64_t slot = (mach - tagged.base) * tagged.cap_records;
              for (const Record& r : box) {
                require(r.arity() == 3 && !is_role(r[0]),
                        "partition: malformed tagged record");
                for (int i = 0; i < 3; ++i)
                  require(r[i] >= 0 && r[i] < (Word{1} << 20),
                          "partition: id or degree out of range");
                require(r[2] >= 1, "partition: tagged degree must be positive");
                em.send(b5.base + slot / cap5,
                        Record{std::min(r[0], r[1]), std::max(r[0], r[1]),
                               r[0], r[2]});
                ++slot;
              }
            });
  SortPlan p5;
  p5.indices = {0, 1, 2};
  p5.bits = {kPairBits, kPairBits, kPairBits};
  p5.cap_override = cap5;
  const Layout b5s = sort_with_plan(sim, b5, p5);

  // Pivot choice per twin pair: the lower-degree endpoint, ties to the
  // smaller id. Emits the pivot bank [w, x, deg(w)] and both oriented
  // adjacency halves [2u+1, other] into the shared union bank.
  const std::int64_t cap_bp = 5;
  Layout bp = reserve_layout(sim, mm, 3, cap_bp);
  const std::int64_t cap_u3 = bank_cap(S, 3);
  Layout u3 = reserve_layout(sim, n2 + mm, 3, cap_u3);
  step_over(
      sim, {&b5s, &bp, &u3},
      [&, bp, u3, cap5](std::int64_t mach, std::vector<Record> box,
                        Emitter& em) {
        require(box.size() % 2 == 0, "partition: twin bank misaligned");
        const std::int64_t pair0 = (mach - b5s.base) * cap5 / 2;
        for (std::size_t t = 0; t + 1 < box.size(); t += 2) {
          const Record& x = box[t];
          const Record& y = box[t + 1];
          require(x[0] == y[0] && x[1] == y[1] && x[2] < y[2],
                  "partition: twin records out of step");
          const bool first_is_pivot = x[3] <= y[3];
          const Word w = first_is_pivot ? x[2] : y[2];
          const Word wx = first_is_pivot ? y[2] : x[2];
          const Word dw = first_is_pivot ? x[3] : y[3];
          const std::int64_t j = pair0 + static_cast<std::int64_t>(t) / 2;
          em.send(bp.base + j / cap_bp, Record{w, wx, dw});
          em.send(u3.base + (2 * j) / cap_u3, Record{2 * x[2] + 1, y[2]});
          em.send(u3.base + (2 * j + 1) / cap_u3, Record{2 * y[2] + 1, x[2]});
        }
      });

  // Rank the pivot bank by pivot id; two scans produce, per edge, the run
  // position within its pivot plus global chunk and query offsets.
  SortPlan pp;
  pp.indices = {0, 1};
  pp.bits = {kPairBits, kPairBits};
  pp.cap_override = cap_bp;
  const Layout sb = sort_with_plan(sim, bp, pp);

  run_scan(sim, sb, runsum_op(0, 0));
  ScanOp need;
  need.payload = 2;
  need.tag = 1;
  need.identity = {0, 0, 0, 0};
  need.leaf = [cap](std::int64_t, const std::vector<Record>& box) -> Payload {
    Word chunks = 0;
    Word queries = 0;
    for (const Record& r : box) {
      if (r.arity() == 0 || is_role(r[0])) continue;
      chunks += ceil_div(r[2], cap);
      queries += r[2];
    }
    return {chunks, queries, 0, 0};
  };
  need.combine = [](const Payload& x, const Payload& y) -> Payload {
    return {x[0] + y[0], x[1] + y[1], 0, 0};
  };
  run_scan(sim, sb, need);

  res.chunk_bank = bare_window(sim, total_chunk_bound);
  const Layout cb = res.chunk_bank;

  // Placement: edge e gets ceil(deg(w)/cap) chunk machines headed by an
  // edge ctx record; the first edge of each pivot run also posts the pivot
  // info [2w, w|count|chunks, chunk base] into the union bank's tail.
  const Payload rid = runsum_pack(RunSum{});
  std::vector<MachineRange> prs{{sb.base, sb.base + sb.width},
                                {u3.base, u3.base + u3.width}};
  if (cb.width > 0) prs.push_back({cb.base, cb.base + cb.width});
  sim.run_step(prs, [&, cb, u3, cap, n2, mm, total_chunk_bound, rid](
                        std::int64_t mach, std::vector<Record> box,
                        Emitter& em) {
    if (in_window(u3, mach)) {
      for (const Record& r : box) em.send(mach, r);
      return;
    }
    const CtxPair ca = read_ctx(box, 0, 4, rid);
    const CtxPair cn = read_ctx(box, 1, 2, {0, 0, 0, 0});
    const RunSum L = runsum_unpack(ca.left);
    std::int64_t gpre = cn.left[0];
    std::int64_t qpre = cn.left[1];
    std::vector<const Record*> data;
    for (const Record& r : box)
      if (r.arity() > 0 && !is_role(r[0])) data.push_back(&r);
    std::int64_t i = 0;
    const std::int64_t nd = static_cast<std::int64_t>(data.size());
    std::int64_t starts = 0;
    const bool cont0 = L.nruns > 0 && nd > 0 && L.lk == (*data[0])[0];
    while (i < nd) {
      const Word w = (*data[i])[0];
      std::int64_t j = i;
      while (j < nd && (*data[j])[0] == w) ++j;
      const bool cont = i == 0 && cont0;
      const std::int64_t left_len = cont ? L.lc : 0;
      std::int64_t total = left_len + (j - i);
      if (j == nd) {
        const RunSum R = runsum_unpack(ca.right);
        if (R.nruns > 0 && R.fk == w) total += R.fc;
      }
      const std::int64_t run_idx = cont ? L.nruns - 1 : L.nruns + starts;
      for (std::int64_t t = i; t < j; ++t) {
        const Record& r = *data[t];
        const std::int64_t i_e = left_len + (t - i);
        const Word dw = r[2];
        const std::int64_t g = ceil_div(dw, cap);
        require(gpre + g <= total_chunk_bound,
                "partition: chunk bound too small");
        em.send(cb.base + gpre, Record{kRoleEdgeCtx, r[0], r[1], qpre, 0, g});
        if (i_e == 0) {
          require(run_idx >= 0 && run_idx < mm, "partition: run index skew");
          const Word packed = w | (static_cast<Word>(total) << 20) |
                              (static_cast<Word>(g) << 40);
          em.send(u3.base + (n2 + run_idx) / u3.cap_records,
                  Record{2 * w, packed, gpre});
        }
        gpre += g;
        qpre += dw;
      }
      if (!cont) ++starts;
      i = j;
    }
  });

  // Sort infos in front of their oriented adjacency, then seed copy zero of
  // every pivot's chunked adjacency, slice by slice.
  SortPlan pu;
  pu.indices = {0, 1};
  pu.bits = {22, 60};
  const Layout su = sort_with_plan(sim, u3, pu);

  ScanOp info;
  info.payload = 2;
  info.tag = 0;
  info.identity = {-1, 0, 0, 0};
  info.leaf = [](std::int64_t, const std::vector<Record>& box) -> Payload {
    Payload p{-1, 0, 0, 0};
    for (const Record& r : box) {
      if (r.arity() == 0 || is_role(r[0])) continue;
      if (r[0] % 2 == 0) {
        p[0] = r[1];
        p[1] = r[2] << 22;  // chunk base high, orienteds-since-info low
      } else {
        ++p[1];
      }
    }
    return p;
  };
  info.combine = [](const Payload& x, const Payload& y) -> Payload {
    if (y[0] != -1) return y;
    return {x[0], x[1] + y[1], 0, 0};
  };
  run_scan(sim, su, info);

  const Word m20 = (Word{1} << 20) - 1;
  const Word m22 = (Word{1} << 22) - 1;
  step_over(
      sim, {&su, &cb},
      [&, cb, cap, m20, m22](std::int64_t mach, std::vector<Record> box,
                             Emitter& em) {
        if (in_window(cb, mach)) {
          for (const Record& r : box) em.send(mach, r);
          return;
        }
        const CtxPair cx = read_ctx(box, 0, 2, {-1, 0, 0, 0});
        Word packed = cx.left[0];
        std::int64_t count = cx.left[1] & m22;
        std::int64_t obase = cx.left[1] >> 22;
        for (const Record& r : box) {
          if (r.arity() == 0 || is_role(r[0])) continue;
          if (r[0] % 2 == 0) {
            packed = r[1];
            obase = r[2];
            count = 0;
            continue;
          }
          const std::int64_t ord = count++;
          if (packed == -1 || (r[0] - 1) / 2 != (packed & m20)) continue;
          const std::int64_t dest = cb.base + obase + ord / cap;
          em.send(dest, Record{r[1]});
          if (ord % cap == 0)
            em.send(dest, Record{kRoleSliceCtx, (packed >> 20) & m20,
                                 (packed >> 40) & m20});
        }
      });

  // Doubling: edge ctx spans split in half within their chunk span; slices
  // copy themselves across the remaining pivot copies, one power of two
  // per round, until every chunk machine holds one edge and one slice.
  std::int64_t drounds = 0;
  while ((std::int64_t{1} << drounds) < std::max<std::int64_t>(doubling_bound, 2))
    ++drounds;
  for (std::int64_t d = 0; d < drounds; ++d) {
    step_over(sim, {&cb}, [&](std::int64_t mach, std::vector<Record> box,
                              Emitter& em) {
      const Record* ectx = nullptr;
      const Record* sctx = nullptr;
      std::vector<const Record*> slice;
      for (const Record& r : box) {
        if (r.arity() > 0 && r[0] == kRoleEdgeCtx)
          ectx = &r;
        else if (r.arity() > 0 && r[0] == kRoleSliceCtx)
          sctx = &r;
        else if (r.arity() > 0 && !is_role(r[0]))
          slice.push_back(&r);
      }
      if (ectx != nullptr) {
        const std::int64_t klo = (*ectx)[4];
        const std::int64_t size = (*ectx)[5];
        if (size > 1) {
          const std::int64_t keep = (size + 1) / 2;
          em.send(mach, Record{kRoleEdgeCtx, (*ectx)[1], (*ectx)[2],
                               (*ectx)[3], klo, keep});
          em.send(mach + keep, Record{kRoleEdgeCtx, (*ectx)[1], (*ectx)[2],
                                      (*ectx)[3], klo + keep, size - keep});
        } else {
          em.send(mach, *ectx);
        }
      }
      std::int64_t copy_to = -1;
      if (sctx != nullptr) {
        const std::int64_t z = (*sctx)[1];
        const std::int64_t g = (*sctx)[2];
        if (z > 1) {
          const std::int64_t zk = (z + 1) / 2;
          em.send(mach, Record{kRoleSliceCtx, zk, g});
          copy_to = mach + zk * g;
          em.send(copy_to, Record{kRoleSliceCtx, z - zk, g});
        }
        // z == 1: replication done, the marker dies.
      }
      for (const Record* s : slice) {
        em.send(mach, *s);
        if (copy_to >= 0) em.send(copy_to, *s);
      }
    });
  }
  return res;
}

}  // namespace detail

PartitionResult mpc_partition_adjacency(Simulation& sim, const Layout& tagged,
                                        std::int64_t chunk_capacity,
                                        std::int64_t min_degree_sum_bound) {
  const std::int64_t t0 = sim.trace().rounds;
  require(min_degree_sum_bound >= 0, "partition: bad degree sum bound");
  const std::int64_t mm = tagged.records / 2;
  const std::int64_t chunk_bound =
      min_degree_sum_bound / std::max<std::int64_t>(chunk_capacity, 1) + mm + 1;
  const auto core = detail::partition_core(
      sim, tagged, chunk_capacity, chunk_bound,
      std::max<std::int64_t>(tagged.records, 2));

  PartitionResult res;
  res.chunk_bank = core.chunk_bank;
  for (std::int64_t mach = core.chunk_bank.base;
       mach < core.chunk_bank.base + core.chunk_bank.width; ++mach) {
    const auto box = sim.read_machine(mach);
    if (box.empty()) continue;
    ChunkPlacement pl;
    pl.machine = mach;
    bool saw_ctx = false;
    for (const Record& r : box) {
      if (r.arity() > 0 && r[0] == kRoleEdgeCtx) {
        require(r[5] == 1, "partition: unfinished edge span");
        pl.pivot = r[1];
        pl.edge = Edge{std::min(r[1], r[2]), std::max(r[1], r[2])};
        pl.chunk_index = r[4];
        saw_ctx = true;
      } else if (r.arity() > 0 && !is_role(r[0])) {
        pl.chunk.push_back(r[0]);
      }
    }
    require(saw_ctx, "partition: chunk machine without its edge");
    res.placements.push_back(std::move(pl));
  }
  pad_rounds(sim, t0, rounds_budget(sim.config().delta, kPartitionRoundsK));
  return res;
}

// ---------------------------------------------------------------------------
// Round padding.

std::int64_t rounds_budget(double delta, std::int64_t k) {
  require(delta > 0.0 && delta <= 1.0, "rounds budget: delta out of range");
  const auto inv = static_cast<std::int64_t>(std::ceil(1.0 / delta - 1e-9));
  return k * inv;
}

void pad_rounds(Simulation& sim, std::int64_t start_round,
                std::int64_t target_rounds) {
  std::int64_t used = sim.trace().rounds - start_round;
  if (used > target_rounds)
    throw ContractViolation("superstep budget exceeded (" +
                            std::to_string(used) + " used, " +
                            std::to_string(target_rounds) + " budgeted)");
  for (; used < target_rounds; ++used) sim.run_null_step();
}

}  // namespace mpctri
