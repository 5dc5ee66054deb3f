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

#ifndef MPCTRI_SIM_HPP_
#define MPCTRI_SIM_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mpctri {

// One machine word. All space accounting is in words.
using Word = std::int64_t;

// Fixed-arity tuple of words; the unit of space accounting. A record of
// arity a costs a words of budget, nothing more.
class Record {
 public:
  static constexpr int kMaxArity = 6;

  Record() = default;
  Record(std::initializer_list<Word> ws) {
    if (ws.size() > kMaxArity) throw std::length_error("record arity > 6");
    for (Word w : ws) words_[arity_++] = w;
  }

  int arity() const { return arity_; }
  Word operator[](int i) const { return words_[i]; }
  Word& operator[](int i) { return words_[i]; }
  void push(Word w) {
    if (arity_ >= kMaxArity) throw std::length_error("record arity > 6");
    words_[arity_++] = w;
  }

  friend bool operator==(const Record& a, const Record& b) {
    if (a.arity_ != b.arity_) return false;
    for (int i = 0; i < a.arity_; ++i)
      if (a.words_[i] != b.words_[i]) return false;
    return true;
  }

 private:
  std::array<Word, kMaxArity> words_{};
  std::int8_t arity_ = 0;
};

// A machine exceeded its per-round send/receive/residency budget. Always a
// bug in the calling protocol, never tolerated.
class BudgetViolation : public std::runtime_error {
 public:
  BudgetViolation(const std::string& what, std::int64_t machine,
                  std::int64_t round, Word overflow)
      : std::runtime_error(what + " (machine " + std::to_string(machine) +
                           ", round " + std::to_string(round) + ", " +
                           std::to_string(overflow) + " words over budget)"),
        machine(machine),
        round(round),
        overflow(overflow) {}
  std::int64_t machine;
  std::int64_t round;
  Word overflow;
};

// A primitive was fed input violating its preconditions.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what)
      : std::runtime_error(what) {}
};

// The simulation would exceed its machine-count cap.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what)
      : std::runtime_error(what) {}
};

struct SimConfig {
  std::int64_t n = 0;     // vertex count of the problem instance
  double delta = 0.5;     // space exponent
  Word space = 64;        // S: words per machine
  std::int64_t machine_cap = 1LL << 40;  // max simultaneously nonempty machines

  // Space floor: tiny inputs would otherwise leave no room for constant-size
  // protocol headers. The floor is a constant, so asymptotics are untouched.
  static constexpr Word kSpaceFloor = 64;

  // Sublinear regime: S = max(ceil(n^delta), 64).
  static SimConfig sublinear(std::int64_t n, double delta,
                             std::int64_t machine_cap = 1LL << 40);
};

struct RoundStat {
  Word max_sent = 0;
  Word max_received = 0;
  std::int64_t machines_touched = 0;
};

struct RoundTrace {
  std::int64_t rounds = 0;
  Word peak_machine_load = 0;
  Word peak_total_load = 0;               // words
  std::int64_t peak_total_records = 0;    // records
  std::vector<RoundStat> per_round;
};

struct RunMetrics {
  std::int64_t rounds = 0;
  Word peak_machine_load = 0;
  std::int64_t peak_total_records = 0;
  std::int64_t machines_used = 0;
  std::int64_t alpha_lower = 0;
  std::int64_t alpha_upper = 0;
  std::int64_t n = 0;
  std::int64_t m = 0;
  double delta = 0.0;
  Word S = 0;
};

std::string metrics_to_json(const RunMetrics& mm);

// Message sink handed to per-machine local functions.
class Emitter {
 public:
  void send(std::int64_t dest, Record r) { out_.push_back({dest, r}); }

 private:
  friend class Simulation;
  struct Msg {
    std::int64_t dest;
    Record rec;
  };
  std::vector<Msg> out_;
};

struct MachineRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // exclusive
};

// Per-machine step function. Residents are handed over by value: whatever is
// not re-sent (to self or elsewhere) is gone after the round.
using LocalFn =
    std::function<void(std::int64_t machine, std::vector<Record> residents,
                       Emitter& out)>;

// Deterministic superstep engine. M machines with S words each; residents
// are replaced by the records received each round, so keeping data means
// sending it to yourself, and that self-send is charged against the budget.
// Machines outside a step's active ranges are parked: their box carries over
// untouched (an identity self-move), and delivering a message to a parked
// machine is an error.
class Simulation {
 public:
  Simulation(SimConfig config, const std::vector<Record>& initial);

  // Runs local_fn on the nonempty machines in the active ranges (ascending
  // machine order), parks everything else, then delivers. Messages arrive
  // sorted by (destination, source).
  void run_step(const std::vector<MachineRange>& active, const LocalFn& fn);

  // run_step over every machine: no one is parked.
  void run_superstep(const LocalFn& fn);

  // A round in which nothing moves; still counted and traced.
  void run_null_step();

  // Claims a fresh contiguous window of machine addresses.
  std::int64_t reserve_window(std::int64_t width);
  std::int64_t frontier() const { return frontier_; }

  const SimConfig& config() const { return config_; }
  const RoundTrace& trace() const { return trace_; }
  std::int64_t nonempty_machines() const { return nonempty_; }
  std::int64_t peak_nonempty_machines() const { return peak_nonempty_; }
  Word total_words() const { return total_words_; }

  // Driver-side reads; no model cost (used for O(1) root reads and for
  // extracting final results).
  std::vector<Record> read_machine(std::int64_t machine) const;
  std::vector<Record> gather(std::int64_t lo, std::int64_t hi) const;

 private:
  static Word record_words(const Record& r) { return r.arity(); }
  Word box_words(const std::vector<Record>& box) const;
  void set_box(std::int64_t machine, std::vector<Record> box);
  void run_round(const std::vector<MachineRange>& active, const LocalFn* fn);

  SimConfig config_;
  std::unordered_map<std::int64_t, std::vector<Record>> boxes_;
  std::int64_t frontier_ = 0;
  std::int64_t nonempty_ = 0;
  std::int64_t peak_nonempty_ = 0;
  Word total_words_ = 0;
  std::int64_t total_records_ = 0;
  RoundTrace trace_;
  RoundStat stat_scratch_;
};

}  // namespace mpctri

#endif  // MPCTRI_SIM_HPP_
