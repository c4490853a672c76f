#include "doctest.h"

#include <set>

#include "driver/generators.hpp"
#include "ir/lower_interp.hpp"
#include "ir/lowering.hpp"
#include "ir/netlist_interp.hpp"
#include "opt/passes.hpp"
#include "par/partition.hpp"

using namespace mnt;
using low::Op;

namespace {

low::Program prepare(const std::string& text) {
  auto l = lower(parse_netlist(text));
  optimize(l);
  split(l);
  return l;
}

std::set<uint32_t> origins(const low::Process& p) {
  std::set<uint32_t> s;
  for (const auto& in : p.body)
    if (in.op != Op::Set)
      s.insert(in.origin);
  return s;
}

int privileged_count(const low::Program& p) {
  int n = 0;
  for (const auto& proc : p.processes)
    n += proc.privileged();
  return n;
}

RandomDagParams params(uint64_t seed) {
  RandomDagParams rp;
  rp.seed = seed;
  rp.instructions = 150;
  rp.max_width = seed % 3 == 0 ? 96 : 40;
  rp.global_memory = seed % 4 == 0;
  rp.registers = 12;
  return rp;
}

void check_same(const NetlistProgram& n, const low::Program& l, uint64_t vcycles) {
  auto d = compare_traces(interpret_netlist(n, vcycles), interpret_lower(l, vcycles));
  INFO(d.message);
  CHECK(d.equal);
}

const char* kShared = R"(design fig
reg a 16 = 1
reg b 16 = 2
g:16 = xor a, b
h:16 = add g, a
k:16 = sub g, b
next a = h
next b = k
)";

} // namespace

TEST_CASE("split") {
  SUBCASE("two independent counters give two disjoint processes") {
    auto l = prepare(gen_counters(2));
    REQUIRE(l.processes.size() == 2);
    auto a = origins(l.processes[0]), b = origins(l.processes[1]);
    for (uint32_t o : a)
      CHECK(b.count(o) == 0);
  }
  SUBCASE("a gate feeding two sinks is duplicated") {
    auto l = prepare(kShared);
    REQUIRE(l.processes.size() == 2);
    auto a = origins(l.processes[0]), b = origins(l.processes[1]);
    std::vector<uint32_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    CHECK(common.size() == 1);
  }
  SUBCASE("sinks reading one local memory share a process") {
    auto l = prepare(R"(design m
mem ram 16 16 local
reg i 4
reg x 16
reg y 16
i1:4 = add i, 4'h1
next i = i1
v:16 = load ram, i
x1:16 = add x, v
y1:16 = xor y, v
next x = x1
next y = y1
)");
    CHECK(l.processes.size() == 2);
    size_t with_load = 0;
    for (const auto& p : l.processes)
      for (const auto& in : p.body)
        with_load += in.op == Op::Lld;
    CHECK(with_load == 1);
  }
  SUBCASE("split preserves semantics on random designs") {
    for (uint64_t seed = 1; seed <= 30; ++seed) {
      auto n = parse_netlist(gen_random_dag(params(seed)));
      auto l = lower(n);
      optimize(l);
      split(l);
      low::validate_lower(l);
      CHECK(privileged_count(l) <= 1);
      INFO("seed " << seed);
      check_same(n, l, 80);
    }
  }
}

TEST_CASE("estimate_cost") {
  low::Program p;
  p.processes.resize(2);
  CHECK(estimate_cost(p, 0) == 0);

  // Ten ALU instructions in process 0 and three state words read by process 1.
  p.states.resize(3);
  p.registers.push_back({"r", 48, 0});
  for (uint32_t s = 0; s < 3; ++s) {
    p.states[s] = {0, static_cast<uint16_t>(s), 0, s, 10 + s};
    p.processes[0].owned.push_back({s, 10 + s});
  }
  p.next_vreg = 20;
  p.next_origin = 10;
  for (uint32_t i = 0; i < 10; ++i) {
    low::Instr in;
    in.op = Op::Add;
    in.rd = 10 + i;
    in.rs = {0, 1, low::kNoReg, low::kNoReg, low::kNoReg};
    in.origin = i;
    p.processes[0].body.push_back(in);
  }
  low::Instr use;
  use.op = Op::Xor;
  use.rd = 19;
  use.rs = {0, 1, low::kNoReg, low::kNoReg, low::kNoReg};
  low::Instr use2 = use;
  use2.rs = {2, 2, low::kNoReg, low::kNoReg, low::kNoReg};
  use2.rd = 18;
  p.processes[1].body = {use, use2};
  CHECK(estimate_cost(p, 0) == 13);
  materialize_sends(p);
  CHECK(estimate_cost(p, 0) == 13);
  CHECK(total_sends(p) == 3);
}

TEST_CASE("merge_balanced") {
  SUBCASE("five identical processes onto four cores") {
    auto l = prepare(R"(design five
reg a 16
reg b 16
reg c 16
reg d 16
reg e 16
a1:16 = add a, 16'h1
b1:16 = add b, 16'h1
c1:16 = add c, 16'h1
d1:16 = add d, 16'h1
e1:16 = add e, 16'h1
next a = a1
next b = b1
next c = c1
next d = d1
next e = e1
)");
    REQUIRE(l.processes.size() == 5);
    std::vector<std::set<uint32_t>> before;
    for (const auto& p : l.processes)
      before.push_back(origins(p));
    merge_balanced(l, 4);
    REQUIRE(l.processes.size() == 4);
    size_t pairs = 0;
    for (const auto& p : l.processes) {
      auto o = origins(p);
      if (o.size() == 2) {
        ++pairs;
        size_t covered = 0;
        for (const auto& b : before)
          covered += std::includes(o.begin(), o.end(), b.begin(), b.end());
        CHECK(covered == 2);
      }
    }
    CHECK(pairs == 1);
  }
  SUBCASE("merging two consumers removes one SEND from their producer") {
    auto l = prepare(R"(design fan
reg c 16
reg x 16
reg y 16
c1:16 = add c, 16'h1
x1:16 = add x, c
y1:16 = xor y, c
next c = c1
next x = x1
next y = y1
)");
    REQUIRE(l.processes.size() == 3);
    auto g = process_graph(l);
    CHECK(g.total_words() == 2);
    const uint64_t producer = g.cost[0];
    merge_group(l, {{0}, {1, 2}});
    auto g2 = process_graph(l);
    CHECK(g2.total_words() == 1);
    CHECK(g2.cost[0] == producer - 1);
  }
  SUBCASE("merges never add communication and preserve semantics") {
    for (uint64_t seed = 1; seed <= 25; ++seed) {
      auto n = parse_netlist(gen_random_dag(params(seed)));
      auto l = lower(n);
      optimize(l);
      split(l);
      // Any pairwise merge step only internalizes edges.
      for (uint32_t a = 0; a + 1 < l.processes.size() && a < 4; ++a) {
        auto trial = l;
        const uint64_t before = process_graph(trial).total_words();
        std::vector<std::vector<uint32_t>> groups;
        for (uint32_t i = 0; i < trial.processes.size(); ++i)
          if (i == a)
            groups.push_back({a, a + 1});
          else if (i != a + 1)
            groups.push_back({i});
        merge_group(trial, groups);
        CHECK(process_graph(trial).total_words() <= before);
      }
      for (uint32_t cores : {1u, 3u, 8u}) {
        auto m = l;
        merge_balanced(m, cores);
        CHECK(m.processes.size() <= cores);
        CHECK(privileged_count(m) == privileged_count(l));
        INFO("seed " << seed << " cores " << cores);
        check_same(n, m, 60);
        materialize_sends(m);
        low::validate_lower(m);
        check_same(n, m, 60);
      }
    }
  }
  SUBCASE("merging is deterministic") {
    auto a = prepare(gen_random_dag(params(9)));
    auto b = a;
    merge_balanced(a, 4);
    merge_balanced(b, 4);
    CHECK(a == b);
  }
}

TEST_CASE("merge_lpt") {
  SUBCASE("textbook LPT packing") {
    auto bins = lpt_bins({5, 4, 3, 3, 3}, 2);
    REQUIRE(bins.size() == 2);
    std::vector<uint64_t> costs{5, 4, 3, 3, 3};
    std::vector<uint64_t> loads;
    for (const auto& b : bins) {
      uint64_t s = 0;
      for (uint32_t i : b)
        s += costs[i];
      loads.push_back(s);
    }
    // Oracle: greedy longest-first into the currently lightest bin.
    CHECK(loads == std::vector<uint64_t>{8, 10});
    CHECK(bins[0] == std::vector<uint32_t>{0, 3});
    CHECK(bins[1] == std::vector<uint32_t>{1, 2, 4});
  }
  SUBCASE("a single process is unchanged") {
    auto l = prepare(gen_counters(1));
    auto before = l;
    merge_lpt(l, 4);
    CHECK(l == before);
  }
  SUBCASE("lpt merges preserve semantics") {
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      auto n = parse_netlist(gen_random_dag(params(seed)));
      auto l = lower(n);
      optimize(l);
      split(l);
      merge_lpt(l, 3);
      CHECK(l.processes.size() <= 3);
      materialize_sends(l);
      check_same(n, l, 50);
    }
  }
}

TEST_CASE("place_random") {
  SUBCASE("one process on one core") {
    auto l = prepare(gen_counters(1));
    auto pl = place_random(l, {1, 1}, {0, 0}, 3);
    CHECK(pl.coord[0] == Coord{0, 0});
  }
  SUBCASE("same seed gives the same placement") {
    auto l = prepare(gen_counters(9));
    auto a = place_random(l, {4, 4}, {0, 0}, 11);
    auto b = place_random(l, {4, 4}, {0, 0}, 11);
    CHECK(a.coord == b.coord);
  }
  SUBCASE("225 processes fill a 15x15 grid") {
    low::Program p;
    p.processes.resize(225);
    auto pl = place_random(p, {15, 15}, {0, 0}, 5);
    std::set<std::pair<uint32_t, uint32_t>> used;
    for (const auto& c : pl.coord)
      used.insert({c.x, c.y});
    CHECK(used.size() == 225);
    p.processes.resize(226);
    CHECK_THROWS_AS(place_random(p, {15, 15}, {0, 0}, 5), CompileError);
  }
  SUBCASE("the privileged process sits on the privileged core") {
    RandomDagParams rp = params(4);
    rp.global_memory = true;
    auto l = prepare(gen_random_dag(rp));
    int pp = l.privileged_process();
    REQUIRE(pp >= 0);
    for (uint64_t seed = 0; seed < 10; ++seed) {
      auto pl = place_random(l, {4, 4}, {2, 1}, seed);
      CHECK(pl.coord[pp] == Coord{2, 1});
    }
  }
}
