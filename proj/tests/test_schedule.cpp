#include "doctest.h"

#include <random>
#include <set>

#include "driver/generators.hpp"
#include "driver/pipeline.hpp"
#include "machine/machine.hpp"
#include "sched/bootstream.hpp"
#include "sched/schedule.hpp"

using namespace mnt;
using low::Instr;
using low::Op;

namespace {

Instr alu(Op op, low::Reg rd, low::Reg a, low::Reg b) {
  Instr in;
  in.op = op;
  in.rd = rd;
  in.rs[0] = a;
  in.rs[1] = b;
  return in;
}

Instr set(low::Reg rd, uint16_t v) {
  Instr in;
  in.op = Op::Set;
  in.rd = rd;
  in.imm = v;
  return in;
}

Instr send(low::Reg value, uint32_t process, low::Reg remote) {
  Instr in;
  in.op = Op::Send;
  in.rs[0] = value;
  in.aux = process;
  in.remote = remote;
  return in;
}

low::Process allocated(std::vector<Instr> body) {
  low::Process p;
  p.body = std::move(body);
  p.allocated = true;
  return p;
}

MachineModel model(uint32_t x, uint32_t y) {
  MachineModel m;
  m.grid = {x, y};
  return m;
}

size_t first_slot(const CoreProgram& c, Op op, size_t from = 0) {
  for (size_t i = from; i < c.slots.size(); ++i)
    if (c.slots[i].op == op)
      return i;
  return SIZE_MAX;
}

uint32_t u32_at(const std::vector<uint8_t>& b, size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (uint32_t(b[at + 3]) << 24);
}

} // namespace

TEST_CASE("route") {
  auto m = model(4, 4);
  SUBCASE("x hops before y hops") {
    auto r = route({0, 0}, {2, 1}, 10, m);
    CHECK(r.links.size() == 3);
    CHECK(r.arrival == 13);
    CHECK(r.links[0].dim == 0);
    CHECK(r.links[1].dim == 0);
    CHECK(r.links[2].dim == 1);
  }
  SUBCASE("no backward shortcut") { CHECK(route({0, 0}, {3, 0}, 0, m).links.size() == 3); }
  SUBCASE("wrap-around") {
    auto r = route({1, 1}, {0, 1}, 0, m);
    CHECK(r.links.size() == 3);
    CHECK(r.arrival == 3);
  }
  SUBCASE("hop counts match the modular oracle on random grids") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
      const uint32_t X = 1 + rng() % 8, Y = 1 + rng() % 8;
      auto mm = model(X, Y);
      mm.hop_latency = 1 + rng() % 3;
      const Coord a{uint32_t(rng() % X), uint32_t(rng() % Y)}, b{uint32_t(rng() % X), uint32_t(rng() % Y)};
      if (a == b)
        continue;
      const uint32_t oracle = (b.x + X - a.x) % X + (b.y + Y - a.y) % Y;
      auto r = route(a, b, 5, mm);
      REQUIRE(r.links.size() == oracle);
      CHECK(r.arrival == 5 + oracle * mm.hop_latency);
      bool seen_y = false;
      Coord at = a;
      for (const Link& l : r.links) {
        CHECK(l.core == mm.grid.index(at));
        if (l.dim == 1)
          seen_y = true;
        else
          CHECK_FALSE(seen_y);
        if (l.dim == 0)
          at.x = (at.x + 1) % X;
        else
          at.y = (at.y + 1) % Y;
      }
      CHECK(at == b);
    }
  }
}

TEST_CASE("list scheduling") {
  SUBCASE("two dependent ALU ops are 8 NOPs apart") {
    low::Program p;
    p.processes.push_back(allocated({alu(Op::Add, 2, 0, 0), alu(Op::Add, 3, 2, 0)}));
    auto s = schedule(p, {{{0, 0}}}, model(1, 1));
    const auto& c = s.cores.at(0);
    REQUIRE(c.slots.size() == 10);
    CHECK(c.slots[0].op == Op::Add);
    for (int i = 1; i <= 8; ++i)
      CHECK(c.slots[i].op == Op::Nop);
    CHECK(c.slots[9].op == Op::Add);
  }
  SUBCASE("independent work fills the latency gap") {
    low::Program p;
    p.processes.push_back(allocated(
        {alu(Op::Add, 2, 0, 0), alu(Op::Add, 3, 2, 0), alu(Op::Xor, 4, 0, 1), alu(Op::And, 5, 1, 1)}));
    auto s = schedule(p, {{{0, 0}}}, model(1, 1));
    CHECK(s.cores[0].slots.size() == 10);
    CHECK(vcpl(s).cores[0].nop == 6);
  }
  SUBCASE("a SEND contending for a link is delayed") {
    // (0,0) sends to (2,0) through link x(1,0) during slot 1; (1,0) wants that link at slot 1 too.
    low::Program p;
    p.processes.push_back(allocated({send(0, 2, 10)}));
    p.processes.push_back(allocated({send(0, 2, 11), send(1, 2, 12)}));
    p.processes.push_back(allocated({}));
    p.processes[2].reg_init = {{10, 0}, {11, 0}, {12, 0}};
    Placement pl{{{0, 0}, {1, 0}, {2, 0}}};
    auto s = schedule(p, pl, model(3, 1));
    const auto& b = s.cores.at(1);
    const size_t first = first_slot(b, Op::Send);
    const size_t second = first_slot(b, Op::Send, first + 1);
    CHECK(first == 0);
    CHECK(second >= 2);
    CHECK(s.cores.at(2).epilogue == 3);
    GridConfig g;
    g.dims = {3, 1};
    Machine mach(s, g);
    CHECK(mach.run(4) == RunStatus::Completed);
    CHECK(mach.metrics().dropped_messages == 0);
    CHECK(mach.metrics().hazards == 0);
  }
  SUBCASE("every core fills the vcycle") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      RandomDagParams rp;
      rp.seed = seed;
      rp.registers = 10;
      CompileOptions o;
      o.grid = {1 + uint32_t(seed % 3), 2};
      auto r = compile_source(gen_random_dag(rp), o);
      for (const auto& c : r.schedule.cores) {
        CHECK(c.slots.size() + c.epilogue + c.sleep == r.schedule.vcycle_length);
        CHECK(c.slots.size() <= 4096);
      }
    }
  }
  SUBCASE("a process larger than instruction memory is rejected") {
    low::Program p;
    std::vector<Instr> body;
    for (low::Reg r = 0; r < 5000; ++r)
      body.push_back(set(r % 2000, 1));
    p.processes.push_back(allocated(body));
    CHECK_THROWS_AS(schedule(p, {{{0, 0}}}, model(1, 1)), CompileError);
  }
  SUBCASE("unallocated processes are rejected") {
    low::Program p;
    p.processes.emplace_back();
    CHECK_THROWS_AS(schedule(p, {{{0, 0}}}, model(1, 1)), CompileError);
  }
}

TEST_CASE("vcpl") {
  Schedule s;
  s.vcycle_length = 100;
  CoreProgram a, b;
  a.slots.resize(80);
  a.sleep = 20;
  b.slots.resize(100);
  s.cores = {b};
  CHECK(vcpl(s).length == 100);
  s.cores = {a, b};
  auto v = vcpl(s);
  CHECK(v.length == 100);
  CHECK(v.cores[0].nop == 80);
  CHECK(v.cores[0].sleep == 20);
}

TEST_CASE("bootstream") {
  SUBCASE("five instructions on one core, no messages") {
    low::Program p;
    p.processes.push_back(allocated({set(0, 1), set(1, 2), set(2, 3), set(3, 4), set(4, 5)}));
    auto s = schedule(p, {{{0, 0}}}, model(1, 1));
    auto bytes = emit_bootstream(s);
    // Header: magic, version, grid, privileged coordinate (2-byte fields), three latencies/lengths and the segment count.
    const size_t segment = 4 + 2 * 5 + 4 * 4;
    CHECK(u32_at(bytes, segment + 4) == 5);
    auto back = parse_bootstream(bytes);
    CHECK(back.cores.at(0).epilogue == 0);
    CHECK(back.cores.at(0).slots.size() == 5);
    CHECK(back == s);
  }
  SUBCASE("instruction words round-trip") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) {
      Instr in;
      in.op = static_cast<Op>(rng() % (static_cast<unsigned>(Op::Expect) + 1));
      for (auto& r : in.rs)
        r = rng() % 2048;
      in.rd = rng() % 2048;
      in.imm = static_cast<uint16_t>(rng());
      in.aux = rng() % 32;
      in.remote = rng() % 2048;
      const Instr m = machine_form(in);
      CHECK(decode_instr(encode_instr(m)) == m);
    }
  }
  SUBCASE("a truncated footer names the missing field") {
    low::Program p;
    p.processes.push_back(allocated({set(0, 1)}));
    auto s = schedule(p, {{{0, 0}}}, model(1, 1));
    auto bytes = emit_bootstream(s);
    const size_t end_of_segment = 4 + 2 * 5 + 4 * 4 + 4 + 4 + 8 + 4 + 4 + 4 + 4 + 4 + 4;
    bytes.resize(end_of_segment - 2);
    CHECK_THROWS_WITH_AS(parse_bootstream(bytes), doctest::Contains("missing COUNT_DOWN"), Error);
    bytes.resize(3);
    CHECK_THROWS_AS(parse_bootstream(bytes), Error);
  }
  SUBCASE("compiled designs round-trip and are deterministic") {
    for (uint64_t seed = 1; seed <= 15; ++seed) {
      RandomDagParams rp;
      rp.seed = seed;
      rp.logic_heavy = seed % 2 == 0;
      rp.global_memory = seed % 3 == 0;
      CompileOptions o;
      o.grid = {2, 2};
      auto a = compile_source(gen_random_dag(rp), o);
      auto b = compile_source(gen_random_dag(rp), o);
      CHECK(a.bootstream == b.bootstream);
      CHECK(parse_bootstream(a.bootstream) == a.schedule);
    }
  }
  SUBCASE("countdowns align staggered cores") {
    CompileOptions o;
    o.grid = {4, 4};
    auto r = compile_source(gen_counters(16), o);
    std::set<uint32_t> countdowns;
    for (const auto& c : r.schedule.cores)
      countdowns.insert(c.countdown);
    CHECK(countdowns.size() > 1);
    GridConfig g;
    g.dims = o.grid;
    Machine m(r.bootstream, g);
    for (const auto& c : m.metrics().cores)
      CHECK(c.start_cycle == m.metrics().boot_cycles);
  }
}
