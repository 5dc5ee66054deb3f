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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "mpctri/rng.hpp"
#include "mpctri/sim.hpp"

using namespace mpctri;

namespace {

std::vector<Record> arity2_records(std::int64_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Record> out;
  out.reserve(count);
  for (std::int64_t i = 0; i < count; ++i)
    out.push_back({static_cast<Word>(rng.next_below(1 << 20)),
                   static_cast<Word>(rng.next_below(1 << 20))});
  return out;
}

std::vector<Record> sorted_copy(std::vector<Record> v) {
  std::sort(v.begin(), v.end(), [](const Record& a, const Record& b) {
    if (a.arity() != b.arity()) return a.arity() < b.arity();
    for (int i = 0; i < a.arity(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  });
  return v;
}

const LocalFn identity_fn = [](std::int64_t mach, std::vector<Record> res,
                               Emitter& out) {
  for (Record& r : res) out.send(mach, r);
};

}  // namespace

TEST_CASE("space floor and sublinear exponent") {
  CHECK(SimConfig::sublinear(1024, 0.5).space == 64);  // 32 floored to 64
  CHECK(SimConfig::sublinear(1 << 14, 0.5).space == 128);
  CHECK(SimConfig::sublinear(1 << 16, 0.5).space == 256);
  CHECK(SimConfig::sublinear(100, 0.3).space == 64);
  CHECK(SimConfig::sublinear(0, 0.5).space == 64);
  CHECK_THROWS_AS(SimConfig::sublinear(10, 0.0), ContractViolation);
  CHECK_THROWS_AS(SimConfig::sublinear(10, 1.0), ContractViolation);
}

TEST_CASE("balanced initial distribution") {
  // 10 records of arity 2 with S=8: ceil(20/8) = 3 machines, loads 8/6/6.
  SimConfig cfg;
  cfg.space = 8;
  std::vector<Record> init;
  for (int i = 0; i < 10; ++i) init.push_back({i, i});
  Simulation sim(cfg, init);
  CHECK(sim.frontier() == 3);
  CHECK(sim.nonempty_machines() == 3);
  CHECK(sim.read_machine(0).size() == 4);
  CHECK(sim.read_machine(1).size() == 3);
  CHECK(sim.read_machine(2).size() == 3);
  CHECK(sim.trace().rounds == 0);
  CHECK(sim.trace().peak_machine_load == 8);
  CHECK(sim.trace().peak_total_load == 20);
}

TEST_CASE("zero records means zero machines and zero rounds") {
  SimConfig cfg;
  Simulation sim(cfg, {});
  CHECK(sim.frontier() == 0);
  CHECK(sim.trace().rounds == 0);
  CHECK(sim.trace().peak_total_load == 0);
}

TEST_CASE("capacity error when initial load exceeds machine cap") {
  SimConfig cfg;
  cfg.space = 8;
  cfg.machine_cap = 2;
  std::vector<Record> init;
  for (int i = 0; i < 10; ++i) init.push_back({i, i});
  CHECK_THROWS_AS(Simulation(cfg, init), CapacityError);
}

TEST_CASE("identity superstep leaves state unchanged and counts a round") {
  SimConfig cfg;
  cfg.space = 64;
  auto init = arity2_records(100, 7);
  Simulation sim(cfg, init);
  auto before = sim.gather(0, sim.frontier());
  sim.run_superstep(identity_fn);
  CHECK(sim.trace().rounds == 1);
  CHECK(sim.gather(0, sim.frontier()) == before);
  sim.run_superstep(identity_fn);
  CHECK(sim.trace().rounds == 2);
}

TEST_CASE("send budget violation names machine, round, and overflow") {
  SimConfig cfg;
  cfg.space = 8;
  std::vector<Record> init;
  for (int i = 0; i < 10; ++i) init.push_back({i, i});
  Simulation sim(cfg, init);
  // Machine 0 holds 8 words; duplicating them on send is 16 > 8.
  LocalFn dup = [](std::int64_t mach, std::vector<Record> res, Emitter& out) {
    for (Record& r : res) {
      out.send(mach, r);
      out.send(mach, r);
    }
  };
  try {
    sim.run_superstep(dup);
    FAIL("expected BudgetViolation");
  } catch (const BudgetViolation& e) {
    CHECK(e.machine == 0);
    CHECK(e.round == 1);
    CHECK(e.overflow == 8);
    CHECK(std::string(e.what()).find("machine 0") != std::string::npos);
  }
}

TEST_CASE("receive budget violation when everything converges on machine 0") {
  SimConfig cfg;
  cfg.space = 8;
  std::vector<Record> init;
  for (int i = 0; i < 10; ++i) init.push_back({i, i});
  Simulation sim(cfg, init);
  LocalFn to_zero = [](std::int64_t, std::vector<Record> res, Emitter& out) {
    for (Record& r : res) out.send(0, r);
  };
  CHECK_THROWS_AS(sim.run_superstep(to_zero), BudgetViolation);
}

TEST_CASE("replace semantics: records not re-sent are dropped") {
  SimConfig cfg;
  cfg.space = 64;
  Simulation sim(cfg, {{1, 2}, {3, 4}, {5, 6}});
  LocalFn keep_first = [](std::int64_t mach, std::vector<Record> res,
                          Emitter& out) {
    if (!res.empty()) out.send(mach, res[0]);
  };
  sim.run_superstep(keep_first);
  CHECK(sim.total_words() == 2);
  CHECK(sim.gather(0, sim.frontier()) == std::vector<Record>{{1, 2}});
}

TEST_CASE("conserving local functions preserve the record multiset") {
  SimConfig cfg;
  cfg.space = 64;
  auto init = arity2_records(1000, 11);
  Simulation sim(cfg, init);
  std::int64_t machines = sim.frontier();
  // Deterministic permutation route: shift by a machine-dependent stride.
  LocalFn shuffle = [machines](std::int64_t mach, std::vector<Record> res,
                               Emitter& out) {
    for (std::size_t k = 0; k < res.size(); ++k)
      out.send((mach * 31 + static_cast<std::int64_t>(k) * 17 + 5) % machines,
               res[k]);
  };
  for (int r = 0; r < 5; ++r) sim.run_superstep(shuffle);
  CHECK(sorted_copy(sim.gather(0, sim.frontier())) == sorted_copy(init));
  CHECK(sim.trace().rounds == 5);
}

TEST_CASE("large random load stays within budget everywhere") {
  SimConfig cfg;
  cfg.space = 1000;
  auto init = arity2_records(100000, 3);
  Simulation sim(cfg, init);
  CHECK(sim.trace().peak_machine_load <= 1000);
  CHECK(sorted_copy(sim.gather(0, sim.frontier())) == sorted_copy(init));
}

TEST_CASE("deterministic delivery order: source-major, emission order") {
  SimConfig cfg;
  cfg.space = 64;
  // Three machines each send two records to machine 0; arrival must be
  // machine 0's records, then 1's, then 2's, in emission order.
  std::vector<Record> init;
  for (int i = 0; i < 12; ++i) init.push_back({i});
  Simulation sim(cfg, init);  // 12 words -> 1 machine; spread manually
  std::int64_t extra = sim.reserve_window(2);
  LocalFn spread = [extra](std::int64_t, std::vector<Record> res,
                           Emitter& out) {
    for (std::size_t k = 0; k < res.size(); ++k)
      out.send(static_cast<std::int64_t>(k) % 3 == 0
                   ? 0
                   : extra + static_cast<std::int64_t>(k) % 3 - 1,
               res[k]);
  };
  sim.run_step({{0, 1}, {extra, extra + 2}}, spread);
  LocalFn converge = [](std::int64_t, std::vector<Record> res, Emitter& out) {
    for (Record& r : res) out.send(0, r);
  };
  sim.run_step({{0, 1}, {extra, extra + 2}}, converge);
  auto box = sim.read_machine(0);
  REQUIRE(box.size() == 12);
  // Source 0 held 0,3,6,9; source extra held 1,4,7,10; extra+1 held 2,5,8,11.
  std::vector<Word> got;
  for (const Record& r : box) got.push_back(r[0]);
  CHECK(got == std::vector<Word>{0, 3, 6, 9, 1, 4, 7, 10, 2, 5, 8, 11});
}

TEST_CASE("delivery to a parked machine is a contract violation") {
  SimConfig cfg;
  cfg.space = 64;
  Simulation sim(cfg, {{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6},
                       {7, 7}, {8, 8}, {9, 9}, {10, 10}, {11, 11}, {12, 12},
                       {13, 13}, {14, 14}, {15, 15}, {16, 16}, {17, 17},
                       {18, 18}, {19, 19}, {20, 20}, {21, 21}, {22, 22},
                       {23, 23}, {24, 24}, {25, 25}, {26, 26}, {27, 27},
                       {28, 28}, {29, 29}, {30, 30}, {31, 31}, {32, 32},
                       {33, 33}});
  REQUIRE(sim.frontier() >= 2);
  LocalFn poke = [](std::int64_t mach, std::vector<Record> res, Emitter& out) {
    for (Record& r : res) out.send(mach, r);
    if (mach == 0) out.send(1, {99, 99});
  };
  CHECK_THROWS_AS(sim.run_step({{0, 1}}, poke), ContractViolation);
}

TEST_CASE("parked machines carry over untouched") {
  SimConfig cfg;
  cfg.space = 8;
  std::vector<Record> init;
  for (int i = 0; i < 10; ++i) init.push_back({i, i});
  Simulation sim(cfg, init);  // 3 machines
  auto parked_before = sim.read_machine(2);
  LocalFn nothing = [](std::int64_t, std::vector<Record>, Emitter&) {};
  sim.run_step({{0, 2}}, nothing);
  CHECK(sim.read_machine(0).empty());
  CHECK(sim.read_machine(1).empty());
  CHECK(sim.read_machine(2) == parked_before);
  CHECK(sim.trace().rounds == 1);
}

TEST_CASE("null steps advance the round counter only") {
  SimConfig cfg;
  cfg.space = 64;
  Simulation sim(cfg, {{1, 2}});
  auto before = sim.gather(0, sim.frontier());
  for (int i = 0; i < 10; ++i) sim.run_null_step();
  CHECK(sim.trace().rounds == 10);
  CHECK(sim.trace().per_round.size() == 10);
  CHECK(sim.trace().per_round[3].max_sent == 0);
  CHECK(sim.gather(0, sim.frontier()) == before);
}

TEST_CASE("send to unreserved machine rejected") {
  SimConfig cfg;
  cfg.space = 64;
  Simulation sim(cfg, {{1, 2}});
  LocalFn wild = [](std::int64_t, std::vector<Record> res, Emitter& out) {
    for (Record& r : res) out.send(1000, r);
  };
  CHECK_THROWS_AS(sim.run_superstep(wild), ContractViolation);
}

TEST_CASE("reserve_window hands out disjoint address windows") {
  SimConfig cfg;
  cfg.space = 64;
  Simulation sim(cfg, {{1, 2}});
  std::int64_t a = sim.reserve_window(10);
  std::int64_t b = sim.reserve_window(5);
  CHECK(a == 1);
  CHECK(b == 11);
  CHECK(sim.frontier() == 16);
}

TEST_CASE("trace peaks track load highs across rounds") {
  SimConfig cfg;
  cfg.space = 16;
  std::vector<Record> init;
  for (int i = 0; i < 8; ++i) init.push_back({i, i});  // 16 words, 1 machine
  Simulation sim(cfg, init);
  std::int64_t w = sim.reserve_window(4);
  LocalFn fan_out = [w](std::int64_t, std::vector<Record> res, Emitter& out) {
    for (std::size_t k = 0; k < res.size(); ++k)
      out.send(w + static_cast<std::int64_t>(k) % 4, res[k]);
  };
  sim.run_step({{0, 1}, {w, w + 4}}, fan_out);
  CHECK(sim.trace().peak_machine_load == 16);  // the initial full machine
  CHECK(sim.trace().peak_total_load == 16);
  CHECK(sim.nonempty_machines() == 4);
  CHECK(sim.trace().per_round[0].max_sent == 16);
  CHECK(sim.trace().per_round[0].max_received == 4);
  CHECK(sim.trace().per_round[0].machines_touched == 5);
}

TEST_CASE("determinism: identical runs produce identical state and trace") {
  auto run_once = [] {
    SimConfig cfg;
    cfg.space = 32;
    auto init = arity2_records(500, 42);
    Simulation sim(cfg, init);
    std::int64_t machines = sim.frontier();
    // Coprime stride permutation keeps each full box moving as one unit.
    LocalFn mix = [machines](std::int64_t mach, std::vector<Record> res,
                             Emitter& out) {
      for (Record& r : res) out.send((mach * 7 + 3) % machines, r);
    };
    for (int r = 0; r < 3; ++r) sim.run_superstep(mix);
    return sim.gather(0, sim.frontier());
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("metrics serialize with stable key order") {
  RunMetrics mm;
  mm.rounds = 12;
  mm.peak_machine_load = 60;
  mm.peak_total_records = 500;
  mm.machines_used = 9;
  mm.alpha_lower = 1;
  mm.alpha_upper = 2;
  mm.n = 100;
  mm.m = 99;
  mm.delta = 0.5;
  mm.S = 64;
  CHECK(metrics_to_json(mm) ==
        "{\"rounds\": 12, \"peak_machine_load\": 60, "
        "\"peak_total_records\": 500, \"machines_used\": 9, "
        "\"alpha_lower\": 1, \"alpha_upper\": 2, \"n\": 100, \"m\": 99, "
        "\"delta\": 0.5, \"S\": 64}");
}
