#include "driver/pipeline.hpp"

#include <chrono>

#include "ir/lowering.hpp"
#include "sched/bootstream.hpp"

namespace mnt {

namespace {

class PassTimer {
public:
  explicit PassTimer(CompileReport* r) : r_(r) {}
  template <typename F>
  void operator()(const char* name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    if (r_)
      r_->pass_ms.emplace_back(name, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

private:
  CompileReport* r_;
};

uint64_t counted(const low::Program& p) {
  uint64_t n = 0;
  for (const auto& proc : p.processes)
    for (const auto& in : proc.body)
      n += in.op != low::Op::Nop && in.op != low::Op::Set;
  return n;
}

} // namespace

const char* partitioner_name(Partitioner p) { return p == Partitioner::Lpt ? "lpt" : "balanced"; }

bool parse_partitioner(const std::string& s, Partitioner& p) {
  if (s == "balanced")
    p = Partitioner::Balanced;
  else if (s == "lpt")
    p = Partitioner::Lpt;
  else
    return false;
  return true;
}

low::Program compile_to_lower(const NetlistProgram& n, const CompileOptions& opt, CompileReport* report) {
  PassTimer time(report);
  low::Program l;
  time("lower", [&] { l = lower(n); });
  if (opt.optimize)
    time("optimize", [&] { optimize(l, opt.passes); });
  time("split", [&] { split(l); });
  time("merge", [&] {
    if (opt.partitioner == Partitioner::Lpt)
      merge_lpt(l, opt.grid.cores());
    else
      merge_balanced(l, opt.grid.cores());
  });
  if (report) {
    report->partition = process_graph(l);
    report->instructions_before_cf = counted(l);
  }
  if (opt.custom_functions)
    time("custom-functions", [&] {
      const SynthStats s = synthesize_functions(l);
      if (report)
        report->cf = s;
    });
  if (report)
    report->instructions_after_cf = counted(l);
  time("sends", [&] { materialize_sends(l); });
  if (report) {
    report->processes = static_cast<uint32_t>(l.processes.size());
    report->total_sends = total_sends(l);
  }
  time("regalloc", [&] {
    const RegallocStats s = regalloc(l);
    if (report)
      report->regalloc = s;
  });
  return l;
}

CompileResult compile(const NetlistProgram& n, const CompileOptions& opt) {
  CompileResult r;
  r.report.design = n.name;
  r.report.grid = opt.grid;
  r.report.partitioner = opt.partitioner;
  r.report.custom_functions = opt.custom_functions;
  if (opt.privileged.x >= opt.grid.x || opt.privileged.y >= opt.grid.y)
    throw CompileError("place", "privileged core outside the grid");
  low::Program l = compile_to_lower(n, opt, &r.report);
  PassTimer time(&r.report);
  MachineModel m;
  m.grid = opt.grid;
  m.privileged = opt.privileged;
  m.def_use_latency = opt.def_use_latency;
  m.hop_latency = opt.hop_latency;
  time("schedule", [&] {
    const Placement pl = place_random(l, opt.grid, opt.privileged, opt.placement_seed);
    r.schedule = schedule(l, pl, m);
  });
  time("emit", [&] { r.bootstream = emit_bootstream(r.schedule); });
  r.report.vcpl = vcpl(r.schedule);
  for (const CoreBreakdown& c : r.report.vcpl.cores)
    r.report.non_nop += c.compute + c.send;
  r.report.bootstream_bytes = r.bootstream.size();
  return r;
}

CompileResult compile_source(const std::string& mntl, const CompileOptions& opt) {
  return compile(parse_netlist(mntl), opt);
}

} // namespace mnt
