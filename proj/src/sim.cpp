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

#include "mpctri/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mpctri {

SimConfig SimConfig::sublinear(std::int64_t n, double delta,
                               std::int64_t machine_cap) {
  if (n < 0) throw ContractViolation("sublinear: negative n");
  if (!(delta > 0.0 && delta < 1.0))
    throw ContractViolation("sublinear: delta must lie in (0,1)");
  SimConfig c;
  c.n = n;
  c.delta = delta;
  // ceil(n^delta) with a nudge so exact powers (e.g. 1024^0.5) do not round
  // up to 33 on a stray ulp.
  long double p = powl(static_cast<long double>(std::max<std::int64_t>(n, 1)),
                       static_cast<long double>(delta));
  Word s = static_cast<Word>(ceill(p - 1e-9L));
  c.space = std::max(s, kSpaceFloor);
  c.machine_cap = machine_cap;
  return c;
}

std::string metrics_to_json(const RunMetrics& mm) {
  std::ostringstream os;
  os << "{";
  os << "\"rounds\": " << mm.rounds;
  os << ", \"peak_machine_load\": " << mm.peak_machine_load;
  os << ", \"peak_total_records\": " << mm.peak_total_records;
  os << ", \"machines_used\": " << mm.machines_used;
  os << ", \"alpha_lower\": " << mm.alpha_lower;
  os << ", \"alpha_upper\": " << mm.alpha_upper;
  os << ", \"n\": " << mm.n;
  os << ", \"m\": " << mm.m;
  std::ostringstream ds;
  ds.precision(17);
  ds << mm.delta;
  std::string d = ds.str();
  if (d.find('.') == std::string::npos && d.find('e') == std::string::npos)
    d += ".0";
  os << ", \"delta\": " << d;
  os << ", \"S\": " << mm.S;
  os << "}";
  return os.str();
}

Word Simulation::box_words(const std::vector<Record>& box) const {
  Word w = 0;
  for (const Record& r : box) w += record_words(r);
  return w;
}

Simulation::Simulation(SimConfig config, const std::vector<Record>& initial)
    : config_(config) {
  if (config_.space < 1) throw ContractViolation("simulation: space < 1");
  Word total = 0;
  Word amax = 0;
  for (const Record& r : initial) {
    total += record_words(r);
    amax = std::max<Word>(amax, r.arity());
  }
  std::int64_t machines =
      total == 0 ? 0 : (total + config_.space - 1) / config_.space;
  if (total > 0) {
    // The word total can undercount what an even split piles onto one box
    // when record sizes do not divide S; provision for the worst box. A
    // record wider than S still lands alone and fails the residency check.
    const std::int64_t per = std::max<Word>(1, config_.space / amax);
    const auto count = static_cast<std::int64_t>(initial.size());
    machines = std::max(machines, (count + per - 1) / per);
  }
  if (machines > config_.machine_cap)
    throw CapacityError("initial load needs " + std::to_string(machines) +
                        " machines, cap is " +
                        std::to_string(config_.machine_cap));
  frontier_ = machines;
  if (machines > 0) {
    // Contiguous blocks of near-equal size, so machine order is input order.
    const auto count = static_cast<std::int64_t>(initial.size());
    const std::int64_t q = count / machines;
    const std::int64_t rem = count % machines;
    std::size_t next = 0;
    for (std::int64_t mach = 0; mach < machines; ++mach) {
      std::vector<Record> box;
      const std::int64_t cnt = q + (mach < rem ? 1 : 0);
      for (std::int64_t i = 0; i < cnt; ++i) box.push_back(initial[next++]);
      Word w = box_words(box);
      if (w > config_.space)
        throw BudgetViolation("initial residency over budget", mach, 0,
                              w - config_.space);
      trace_.peak_machine_load = std::max(trace_.peak_machine_load, w);
      set_box(mach, std::move(box));
    }
  }
  trace_.peak_total_load = total_words_;
  trace_.peak_total_records = total_records_;
}

void Simulation::set_box(std::int64_t machine, std::vector<Record> box) {
  auto it = boxes_.find(machine);
  if (it != boxes_.end()) {
    total_words_ -= box_words(it->second);
    total_records_ -= static_cast<std::int64_t>(it->second.size());
    --nonempty_;
    boxes_.erase(it);
  }
  if (!box.empty()) {
    total_words_ += box_words(box);
    total_records_ += static_cast<std::int64_t>(box.size());
    ++nonempty_;
    boxes_.emplace(machine, std::move(box));
  }
  peak_nonempty_ = std::max(peak_nonempty_, nonempty_);
}

std::int64_t Simulation::reserve_window(std::int64_t width) {
  if (width < 0) throw ContractViolation("reserve_window: negative width");
  std::int64_t base = frontier_;
  frontier_ += width;
  return base;
}

std::vector<Record> Simulation::read_machine(std::int64_t machine) const {
  auto it = boxes_.find(machine);
  if (it == boxes_.end()) return {};
  return it->second;
}

std::vector<Record> Simulation::gather(std::int64_t lo, std::int64_t hi) const {
  std::vector<Record> out;
  for (std::int64_t mach = lo; mach < hi; ++mach) {
    auto it = boxes_.find(mach);
    if (it == boxes_.end()) continue;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

namespace {
bool in_ranges(const std::vector<MachineRange>& rs, std::int64_t mach) {
  for (const MachineRange& r : rs)
    if (mach >= r.lo && mach < r.hi) return true;
  return false;
}
}  // namespace

void Simulation::run_round(const std::vector<MachineRange>& active,
                           const LocalFn* fn) {
  const std::int64_t round = trace_.rounds + 1;
  struct Staged {
    std::int64_t dest;
    std::int64_t src;
    Record rec;
  };
  std::vector<Staged> staged;
  std::vector<std::int64_t> order;

  if (fn) {
    // Machines act in ascending machine order within the active ranges; only
    // nonempty boxes run (an empty machine has nothing to compute on).
    for (const MachineRange& r : active)
      for (std::int64_t mach = r.lo; mach < r.hi; ++mach)
        if (boxes_.count(mach)) order.push_back(mach);
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());

    for (std::int64_t mach : order) {
      auto it = boxes_.find(mach);
      std::vector<Record> residents = std::move(it->second);
      total_words_ -= box_words(residents);
      total_records_ -= static_cast<std::int64_t>(residents.size());
      --nonempty_;
      boxes_.erase(it);

      Emitter em;
      (*fn)(mach, std::move(residents), em);

      Word sent = 0;
      for (Emitter::Msg& msg : em.out_) {
        if (msg.dest < 0 || msg.dest >= frontier_)
          throw ContractViolation(
              "send to unreserved machine " + std::to_string(msg.dest) +
              " (frontier " + std::to_string(frontier_) + ", round " +
              std::to_string(round) + ")");
        sent += record_words(msg.rec);
        staged.push_back({msg.dest, mach, std::move(msg.rec)});
      }
      if (sent > config_.space)
        throw BudgetViolation("send budget exceeded", mach, round,
                              sent - config_.space);
      RoundStat& rs = stat_scratch_;
      rs.max_sent = std::max(rs.max_sent, sent);
    }
  }

  // Deliver in (destination, source, emission order); stable sort keeps the
  // per-source emission order.
  std::stable_sort(staged.begin(), staged.end(),
                   [](const Staged& a, const Staged& b) {
                     if (a.dest != b.dest) return a.dest < b.dest;
                     return a.src < b.src;
                   });

  std::int64_t fresh_receivers = 0;
  std::size_t i = 0;
  while (i < staged.size()) {
    std::size_t j = i;
    std::int64_t dest = staged[i].dest;
    Word received = 0;
    while (j < staged.size() && staged[j].dest == dest) {
      received += record_words(staged[j].rec);
      ++j;
    }
    if (!std::binary_search(order.begin(), order.end(), dest))
      ++fresh_receivers;
    if (!in_ranges(active, dest))
      throw ContractViolation("delivery to parked machine " +
                              std::to_string(dest) + " in round " +
                              std::to_string(round));
    if (received > config_.space)
      throw BudgetViolation("receive budget exceeded", dest, round,
                            received - config_.space);
    std::vector<Record> box;
    box.reserve(j - i);
    for (std::size_t k = i; k < j; ++k) box.push_back(std::move(staged[k].rec));
    set_box(dest, std::move(box));
    trace_.peak_machine_load = std::max(trace_.peak_machine_load, received);
    stat_scratch_.max_received =
        std::max(stat_scratch_.max_received, received);
    i = j;
  }

  if (nonempty_ > config_.machine_cap)
    throw CapacityError("round " + std::to_string(round) + " left " +
                        std::to_string(nonempty_) +
                        " machines occupied, cap is " +
                        std::to_string(config_.machine_cap));

  trace_.peak_total_load = std::max(trace_.peak_total_load, total_words_);
  trace_.peak_total_records =
      std::max(trace_.peak_total_records, total_records_);
  stat_scratch_.machines_touched =
      static_cast<std::int64_t>(order.size()) + fresh_receivers;
  trace_.per_round.push_back(stat_scratch_);
  stat_scratch_ = RoundStat{};
  ++trace_.rounds;
}

void Simulation::run_step(const std::vector<MachineRange>& active,
                          const LocalFn& fn) {
  run_round(active, &fn);
}

void Simulation::run_superstep(const LocalFn& fn) {
  run_round({{0, frontier_}}, &fn);
}

void Simulation::run_null_step() { run_round({}, nullptr); }

}  // namespace mpctri
