#include "doctest.h"

#include <set>

#include "driver/generators.hpp"
#include "ir/lower_interp.hpp"
#include "ir/lowering.hpp"
#include "ir/netlist_interp.hpp"
#include "opt/passes.hpp"
#include "par/partition.hpp"
#include "sched/regalloc.hpp"

using namespace mnt;
using low::Op;

namespace {

void check_same(const NetlistProgram& n, const low::Program& l, uint64_t vcycles) {
  auto d = compare_traces(interpret_netlist(n, vcycles), interpret_lower(l, vcycles));
  INFO(d.message);
  CHECK(d.equal);
}

size_t count(const low::Process& p, Op op) {
  size_t n = 0;
  for (const auto& in : p.body)
    n += in.op == op;
  return n;
}

std::set<low::Reg> registers_of(const low::Process& p) {
  std::set<low::Reg> s;
  for (const auto& in : p.body) {
    if (low::has_dest(in.op))
      s.insert(in.rd);
    for (unsigned k = 0; k < low::source_count(in.op); ++k)
      s.insert(in.rs[k]);
  }
  for (const auto& [r, v] : p.reg_init)
    s.insert(r);
  return s;
}

/// `n` values of a dependent chain, all live until an XOR reduction.
std::string wide_live(unsigned n) {
  std::string t = "design live\nreg a 16 = 3\nreg o 16\nx1:16 = add a, a\n";
  for (unsigned i = 2; i <= n; ++i)
    t += "x" + std::to_string(i) + ":16 = add x" + std::to_string(i - 1) + ", a\n";
  // Consumed newest first so the whole chain is computed before the reduction.
  t += "s1:16 = xor x" + std::to_string(n) + ", x" + std::to_string(n - 1) + "\n";
  for (unsigned i = 2; i < n; ++i)
    t += "s" + std::to_string(i) + ":16 = xor s" + std::to_string(i - 1) + ", x" + std::to_string(n - i) + "\n";
  t += "next o = s" + std::to_string(n - 1) + "\nnext a = x" + std::to_string(n) + "\n";
  return t;
}

} // namespace

TEST_CASE("regalloc basics") {
  SUBCASE("a counter commits in place without moves") {
    auto n = parse_netlist(gen_counters(1));
    auto l = lower(n);
    optimize(l);
    auto stats = regalloc(l);
    CHECK(stats.moves == 0);
    CHECK(stats.spilled == 0);
    CHECK(l.processes[0].allocated);
    CHECK(count(l.processes[0], Op::Set) == 0);
    check_same(n, l, 50);
  }
  SUBCASE("three values live at once use three temps") {
    auto n = parse_netlist(R"(design t
reg a 16 = 1
reg o 16
x:16 = add a, a
y:16 = sub a, x
z:16 = xor x, y
w:16 = and z, x
u:16 = or w, y
next o = u
)");
    auto l = lower(n);
    optimize(l);
    auto stats = regalloc(l);
    // a, o currents plus at most three temps; u is coalesced into o.
    CHECK(stats.max_registers <= 5);
    CHECK(stats.coalesced == 1);
    CHECK(registers_of(l.processes[0]).size() <= 5);
    check_same(n, l, 20);
  }
  SUBCASE("swapped registers snapshot their currents") {
    auto n = parse_netlist("design s\nreg a 16 = 1\nreg b 16 = 2\nnext a = b\nnext b = a\n");
    auto l = lower(n);
    optimize(l);
    auto stats = regalloc(l);
    CHECK(stats.copies >= 1);
    check_same(n, l, 10);
  }
  SUBCASE("local memories are laid out at disjoint bases") {
    auto n = parse_netlist(gen_fifo(512));
    auto l = lower(n);
    optimize(l);
    regalloc(l);
    for (const auto& in : l.processes[0].body)
      if (in.op == Op::Lld || in.op == Op::Lst)
        CHECK(in.aux == low::kNoRegion);
    check_same(n, l, 300);
  }
  SUBCASE("a second allocation is rejected") {
    auto l = lower(parse_netlist(gen_counters(1)));
    regalloc(l);
    CHECK_THROWS_AS(regalloc(l), CompileError);
  }
}

TEST_CASE("spilling") {
  SUBCASE("a small register file spills and stays correct") {
    auto n = parse_netlist(wide_live(100));
    auto l = lower(n);
    optimize(l);
    RegallocOptions opt;
    opt.registers = 64;
    auto stats = regalloc(l, opt);
    CHECK(stats.spilled > 0);
    CHECK(stats.max_registers <= 64);
    for (low::Reg r : registers_of(l.processes[0]))
      CHECK(r < 64);
    check_same(n, l, 10);
  }
  SUBCASE("3000 simultaneously live values fit after spilling") {
    auto n = parse_netlist(wide_live(3000));
    auto l = lower(n);
    optimize(l);
    auto stats = regalloc(l);
    CHECK(stats.spilled >= 3000 - 2048);
    CHECK(stats.max_registers <= 2048);
    check_same(n, l, 4);
  }
  SUBCASE("too little scratchpad for spills is an error") {
    auto l = lower(parse_netlist(wide_live(200)));
    optimize(l);
    RegallocOptions opt;
    opt.registers = 32;
    opt.scratchpad_words = 16;
    CHECK_THROWS_AS(regalloc(l, opt), CompileError);
  }
}

TEST_CASE("regalloc preserves semantics of partitioned random designs") {
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    RandomDagParams rp;
    rp.seed = seed;
    rp.instructions = 150;
    rp.registers = 12;
    rp.max_width = seed % 3 == 0 ? 96 : 40;
    rp.global_memory = seed % 4 == 0;
    rp.memories = seed % 2;
    auto n = parse_netlist(gen_random_dag(rp));
    auto l = lower(n);
    optimize(l);
    split(l);
    merge_balanced(l, 1 + seed % 6);
    materialize_sends(l);
    const uint64_t sends = total_sends(l);
    regalloc(l);
    CHECK(total_sends(l) == sends);
    INFO("seed " << seed);
    low::validate_lower(l);
    check_same(n, l, 80);
  }
}

TEST_CASE("SENDs target the receiver's register for the state") {
  auto n = parse_netlist(gen_counters(4));
  auto l = lower(n);
  optimize(l);
  split(l);
  merge_balanced(l, 2);
  materialize_sends(l);
  regalloc(l);
  for (const auto& p : l.processes)
    for (const auto& in : p.body)
      if (in.op == Op::Send) {
        bool found = false;
        for (const auto& [s, r] : l.processes[in.aux].state_regs)
          found = found || r == in.remote;
        CHECK(found);
      }
  check_same(n, l, 40);
}

TEST_CASE("spilled random designs with carries stay correct") {
  uint32_t spilled = 0;
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    RandomDagParams rp;
    rp.seed = seed;
    rp.instructions = 200;
    rp.registers = 6;
    rp.max_width = 128;
    rp.memories = seed % 2;
    auto n = parse_netlist(gen_random_dag(rp));
    auto l = lower(n);
    optimize(l);
    auto roomy = l;
    const uint32_t need = regalloc(roomy).max_registers;
    // Shrink the register file until spilling kicks in or spill code no longer fits.
    RegallocOptions opt;
    opt.registers = need * 3 / 4;
    RegallocStats stats;
    try {
      stats = regalloc(l, opt);
    } catch (const CompileError&) {
      continue;
    }
    spilled += stats.spilled;
    CHECK(stats.max_registers <= opt.registers);
    INFO("seed " << seed);
    check_same(n, l, 40);
  }
  CHECK(spilled > 0);
}
