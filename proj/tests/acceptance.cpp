// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cf/synth.hpp"
#include "driver/generators.hpp"
#include "driver/pipeline.hpp"
#include "ir/dag.hpp"
#include "ir/lowering.hpp"
#include "ir/netlist_interp.hpp"
#include "machine/machine.hpp"
#include "opt/passes.hpp"
#include "sched/bootstream.hpp"

using namespace mnt;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::ostringstream failures;

  void require(bool ok, const std::string& what) {
    if (ok)
      return;
    if (pass)
      failures << what;
    pass = false;
  }
};

// Conservation is checked on every simulated run of criteria 1 to 6.
Outcome conservation;
uint64_t conservation_runs = 0;

void check_conservation(const SimMetrics& m, const std::string& what) {
  ++conservation_runs;
  const uint64_t expected =
      m.vcycles * m.vcycle_length + m.partial_slots + m.stalled_cycles + m.exception_cycles;
  conservation.require(m.total_cycles == expected, what + ": total " + std::to_string(m.total_cycles) +
                                                       " != " + std::to_string(expected));
}

GridConfig machine_for(GridDims g) {
  GridConfig c;
  c.dims = g;
  return c;
}

std::string grid_str(GridDims g) { return std::to_string(g.x) + "x" + std::to_string(g.y); }

struct Design {
  std::string label;
  std::string source;
};

std::vector<Design> equivalence_suite() {
  std::vector<Design> s;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    RandomDagParams rp;
    rp.seed = seed;
    rp.instructions = 50 + static_cast<unsigned>((seed * 37) % 451); // 50..500
    rp.registers = 4 + seed % 12;
    rp.max_width = seed % 5 == 0 ? 128 : 48;
    rp.logic_heavy = seed % 7 == 0;
    rp.global_memory = seed % 6 == 0;
    s.push_back({"random-dag seed " + std::to_string(seed), gen_random_dag(rp)});
  }
  s.push_back({"fifo 1KiB", gen_fifo(1024)});
  s.push_back({"fifo 64KiB", gen_fifo(65536)});
  s.push_back({"ram 1KiB", gen_ram(1024)});
  s.push_back({"ram 512KiB", gen_ram(524288)});
  s.push_back({"counters 64", gen_counters(64)});
  return s;
}

// Criteria 1 and 2 share the suite: every design on every grid.
void criteria_1_2(Outcome& c1, Outcome& c2) {
  const GridDims grids[] = {{1, 1}, {2, 2}, {4, 4}, {8, 8}};
  const uint64_t vcycles = 256;
  uint64_t runs = 0, drops = 0, hazards = 0, messages = 0, stopped = 0;
  const auto suite = equivalence_suite();
  for (const Design& d : suite) {
    const NetlistProgram n = parse_netlist(d.source);
    const StateTrace ref = interpret_netlist(n, vcycles);
    stopped += ref.stop.has_value();
    for (GridDims g : grids) {
      const std::string what = d.label + " on " + grid_str(g);
      CompileOptions o;
      o.grid = g;
      CompileResult r;
      try {
        r = compile(n, o);
      } catch (const Error& e) {
        c1.require(false, what + ": " + e.what());
        c2.require(false, what + ": " + e.what());
        continue;
      }
      Machine m(r.bootstream, machine_for(g));
      const RunStatus st = m.run(vcycles);
      ++runs;
      const SimMetrics& mm = m.metrics();
      check_conservation(mm, what);
      drops += mm.dropped_messages;
      hazards += mm.hazards;
      messages += mm.messages;
      c2.require(st != RunStatus::ScheduleBug && mm.dropped_messages == 0 && mm.hazards == 0,
                 what + ": " + m.failure());
      const TraceDiff diff = compare_traces(ref, m.trace());
      c1.require(diff.equal, what + ": " + diff.message);
    }
  }
  c1.detail << suite.size() << " designs x 4 grids, " << runs << " runs of " << vcycles << " vcycles ("
            << stopped << " designs stop early by EXPECT)";
  c2.detail << runs << " runs, " << messages << " messages, " << drops << " dropped, " << hazards << " hazards";
}

void criterion_3(Outcome& c) {
  const GridDims g{2, 2};
  unsigned designs = 0, improved = 0;
  double sum = 0;
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    RandomDagParams rp;
    rp.seed = seed;
    rp.instructions = 300;
    rp.registers = 12;
    rp.memories = false;
    const NetlistProgram n = parse_netlist(gen_random_dag(rp));
    const size_t sinks = build_dag(n).sinks.size();
    c.require(sinks >= 8, "seed " + std::to_string(seed) + " has only " + std::to_string(sinks) + " sinks");
    CompileOptions o;
    o.grid = g;
    o.partitioner = Partitioner::Lpt;
    const CompileResult l = compile(n, o);
    o.partitioner = Partitioner::Balanced;
    const CompileResult b = compile(n, o);
    const double ls = double(l.report.total_sends), bs = double(b.report.total_sends);
    const double red = ls == 0 ? 0 : (ls - bs) / ls;
    sum += red;
    improved += bs < ls;
    ++designs;
  }
  const double mean = sum / designs;
  c.require(mean > 0, "mean reduction is not positive");
  c.require(improved * 10 >= designs * 7, "fewer than 70% of designs improve");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%u designs on 2x2, mean SEND reduction %.1f%%, %u/%u improve", designs,
                100 * mean, improved, designs);
  c.detail << buf;
}

void criterion_4(Outcome& c) {
  uint64_t before = 0, after = 0;
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    RandomDagParams rp;
    rp.seed = seed;
    rp.logic_heavy = true;
    rp.instructions = 200;
    const NetlistProgram n = parse_netlist(gen_random_dag(rp));
    CompileOptions o;
    o.grid = {2, 2};
    o.custom_functions = false;
    const uint64_t without = compile(n, o).report.non_nop;
    o.custom_functions = true;
    const uint64_t with = compile(n, o).report.non_nop;
    c.require(with <= without, "seed " + std::to_string(seed) + " grows from " + std::to_string(without) +
                                   " to " + std::to_string(with));
    before += without;
    after += with;
  }
  c.require(after * 100 <= before * 98, "saving below 2%");

  // The chain (a & 0xF) | b | (c & 0x3) | (d ^ 0x1) must become one CUST.
  low::Program l = lower(parse_netlist(gen_logic_chain()));
  optimize(l);
  synthesize_functions(l);
  const low::Process& p = l.processes.at(0);
  const low::Instr* cust = nullptr;
  size_t custs = 0, logic = 0;
  for (const auto& in : p.body) {
    if (in.op == low::Op::Cust) {
      cust = &in;
      ++custs;
    }
    logic += in.op == low::Op::And || in.op == low::Op::Or || in.op == low::Op::Xor;
  }
  c.require(custs == 1 && logic == 0 && p.functions.size() == 1, "chain does not compile to exactly one CUST");
  unsigned matched = 0;
  if (cust) {
    auto current = [&](const char* name) {
      for (const auto& r : l.registers)
        if (r.name == name)
          return l.states[r.first_state].current;
      return low::kNoReg;
    };
    const low::Reg regs[4] = {current("a"), current("b"), current("c"), current("d")};
    for (unsigned combo = 0; combo < 16; ++combo) {
      uint16_t v[4];
      for (unsigned k = 0; k < 4; ++k)
        v[k] = (combo >> k) & 1 ? 0xFFFF : 0;
      const uint16_t expect = static_cast<uint16_t>((v[0] & 0xF) | v[1] | (v[2] & 0x3) | (v[3] ^ 0x1));
      uint16_t ops[4] = {0, 0, 0, 0};
      for (unsigned i = 0; i < 4; ++i)
        for (unsigned k = 0; k < 4; ++k)
          if (cust->rs[i] == regs[k])
            ops[i] = v[k];
      matched += low::apply_custom(p.functions[0], ops[0], ops[1], ops[2], ops[3]) == expect;
    }
  }
  c.require(matched == 16, "chain function table disagrees with the oracle");
  char buf[160];
  std::snprintf(buf, sizeof buf, "30 logic-heavy designs: non-NOP %llu -> %llu (%.1f%% saved); chain: %zu CUST, %u/16",
                static_cast<unsigned long long>(before), static_cast<unsigned long long>(after),
                before ? 100.0 * double(before - after) / double(before) : 0.0, custs, matched);
  c.detail << buf;
}

struct CacheRun {
  uint64_t hits = 0, misses = 0; // steady-state window
  uint64_t accesses = 0;         // whole run
};

CacheRun cache_benchmark(const std::string& src, uint64_t warmup, uint64_t measured, const std::string& what) {
  CompileOptions o;
  o.grid = {2, 2};
  const CompileResult r = compile_source(src, o);
  GridConfig g = machine_for(o.grid);
  g.record_snapshots = false;
  Machine m(r.bootstream, g);
  m.run(warmup);
  const uint64_t h0 = m.metrics().cache_hits, m0 = m.metrics().cache_misses;
  m.run(measured);
  const SimMetrics& mm = m.metrics();
  check_conservation(mm, what);
  return {mm.cache_hits - h0, mm.cache_misses - m0, mm.cache_hits + mm.cache_misses};
}

void criterion_5(Outcome& c) {
  const uint64_t total = 65536;
  // A 64 KiB FIFO holds 32Ki words; one pass over it takes that many vcycles.
  const CacheRun fifo = cache_benchmark(gen_fifo(65536), 32768, total - 32768, "fifo 64KiB");
  const CacheRun ram = cache_benchmark(gen_ram(524288), 16384, total - 16384, "ram 512KiB");
  const CacheRun small = cache_benchmark(gen_ram(1024), 1024, total - 1024, "ram 1KiB");
  const double fifo_rate = double(fifo.hits) / double(fifo.hits + fifo.misses);
  const double ram_rate = double(ram.hits) / double(ram.hits + ram.misses);
  c.require(fifo.hits > 0 && fifo.misses == 0, "fifo 64KiB misses in steady state");
  c.require(ram_rate >= 0.20 && ram_rate <= 0.30, "ram 512KiB hit rate outside 0.25 +/- 0.05");
  c.require(small.accesses == 0, "ram 1KiB touches the cache");
  char buf[200];
  std::snprintf(buf, sizeof buf, "%llu vcycles each: fifo 64KiB %.4f, ram 512KiB %.4f, ram 1KiB %llu accesses",
                static_cast<unsigned long long>(total), fifo_rate, ram_rate,
                static_cast<unsigned long long>(small.accesses));
  c.detail << buf;
}

void criterion_6(Outcome& c) {
  const GridDims grids[] = {{1, 1}, {2, 2}, {4, 4}, {8, 8}};
  const std::string src = gen_counters(64);
  const NetlistProgram n = parse_netlist(src);
  const StateTrace ref = interpret_netlist(n, 256);
  std::vector<uint32_t> v;
  for (GridDims g : grids) {
    CompileOptions o;
    o.grid = g;
    const CompileResult r = compile(n, o);
    v.push_back(r.schedule.vcycle_length);
    Machine m(r.bootstream, machine_for(g));
    m.run(256);
    check_conservation(m.metrics(), "counters 64 on " + grid_str(g));
    c.require(compare_traces(ref, m.trace()).equal, "counters 64 diverge on " + grid_str(g));
  }
  c.require(v[0] > v[1] && v[1] > v[2], "VCPL does not strictly decrease up to 4x4");
  c.detail << "64 counters VCPL 1x1 " << v[0] << ", 2x2 " << v[1] << ", 4x4 " << v[2] << ", 8x8 " << v[3];
  if (v[3] >= v[2])
    c.detail << " (no gain past 4x4)";
}

void criterion_7(Outcome& c) {
  unsigned streams = 0, staggered = 0;
  auto check_one = [&](const std::string& label, const std::string& src, GridDims g) {
    CompileOptions o;
    o.grid = g;
    const CompileResult r = compile_source(src, o);
    Schedule back = parse_bootstream(r.bootstream);
    c.require(back == r.schedule, label + ": parsed bootstream differs from the schedule");
    c.require(emit_bootstream(back) == r.bootstream, label + ": re-emitted bootstream differs");
    Machine m(r.bootstream, machine_for(g));
    c.require(m.schedule() == r.schedule, label + ": loaded program differs");
    std::set<uint32_t> countdowns;
    for (const auto& core : r.schedule.cores)
      countdowns.insert(core.countdown);
    staggered += countdowns.size() > 1;
    for (const CoreCounters& core : m.metrics().cores)
      c.require(core.start_cycle == m.metrics().boot_cycles, label + ": cores start on different cycles");
    ++streams;
  };
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    RandomDagParams rp;
    rp.seed = seed;
    rp.logic_heavy = seed % 2 == 0;
    rp.global_memory = seed % 3 == 0;
    check_one("seed " + std::to_string(seed), gen_random_dag(rp), seed % 2 ? GridDims{4, 4} : GridDims{3, 2});
  }
  check_one("counters 64", gen_counters(64), {8, 8});
  check_one("ram 512KiB", gen_ram(524288), {2, 2});
  c.require(staggered > 0, "no stream has staggered countdowns");
  c.detail << streams << " bootstreams round-trip exactly, " << staggered
           << " with staggered countdowns, all cores start together";
}

void report(int number, const char* name, const Outcome& o, double seconds) {
  std::printf("%s criterion %d: %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", number, name, o.detail.str().c_str(),
              seconds);
  if (!o.pass)
    std::printf("    first failure: %s\n", o.failures.str().c_str());
  std::fflush(stdout);
}

double timed(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    f();
  } catch (const std::exception& e) {
    std::printf("    unexpected error: %s\n", e.what());
    throw;
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main() {
  Outcome c[9];
  bool ok = true;
  try {
    const double t12 = timed([&] { criteria_1_2(c[1], c[2]); });
    report(1, "oracle equivalence", c[1], t12);
    report(2, "collision-free schedules", c[2], 0);
    report(3, "balanced vs LPT communication", c[3], timed([&] { criterion_3(c[3]); }));
    report(4, "custom-function savings", c[4], timed([&] { criterion_4(c[4]); }));
    report(5, "cache microbenchmarks", c[5], timed([&] { criterion_5(c[5]); }));
    report(6, "parallel scaling", c[6], timed([&] { criterion_6(c[6]); }));
    report(7, "bootstream round-trip", c[7], timed([&] { criterion_7(c[7]); }));
    conservation.detail << conservation_runs << " runs";
    report(8, "metrics conservation", conservation, 0);
    c[8].pass = conservation.pass;
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  for (int i = 1; i <= 8; ++i)
    ok = ok && c[i].pass;
  return ok ? 0 : 1;
}
