// mntc: compile .mntl netlists, run bootstreams, generate benchmarks, tabulate reports.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mnt/mnt.h"

namespace {

enum Exit {
  kOk = 0,
  kUsage = 1,     // bad flags, unreadable input, parse or compile diagnostics
  kLoad = 2,      // bootstream rejected by the machine
  kStopped = 3,   // a stop EXPECT fired
  kScheduleBug = 4,
  kMismatch = 5,  // --check found a trace difference
};

constexpr const char* kGridEnv = "MNT_GRID";

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Failure{kUsage, "cannot read " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const void* data, size_t size) {
  if (path == "-") {
    std::fwrite(data, 1, size, stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(static_cast<const char*>(data), std::streamsize(size)))
    throw Failure{kUsage, "cannot write " + path};
}

void write_text(const std::string& path, const std::string& s) { write_file(path, s.data(), s.size()); }

void check(mnt_status s, int code = kUsage) {
  if (s != MNT_OK)
    throw Failure{code, mnt_last_error()};
}

bool parse_grid(const std::string& s, uint32_t& x, uint32_t& y) {
  unsigned w = 0, h = 0;
  char sep = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%u%c%u%c", &w, &sep, &h, &extra) != 3 || (sep != 'x' && sep != 'X') || w == 0 ||
      h == 0 || w > 256 || h > 256)
    return false;
  x = w;
  y = h;
  return true;
}

// --grid wins over the environment; an empty result means "not given".
std::optional<std::pair<uint32_t, uint32_t>> resolve_grid(const std::string& flag) {
  std::string g = flag;
  if (g.empty())
    if (const char* env = std::getenv(kGridEnv))
      g = env;
  if (g.empty())
    return std::nullopt;
  uint32_t x = 0, y = 0;
  if (!parse_grid(g, x, y))
    throw Failure{kUsage, "bad grid '" + g + "', expected WxH"};
  return std::make_pair(x, y);
}

// Accepts plain byte counts and KiB/MiB suffixes.
uint64_t parse_bytes(const std::string& s) {
  size_t used = 0;
  uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (...) {
    throw Failure{kUsage, "bad size '" + s + "'"};
  }
  const std::string unit = s.substr(used);
  if (unit == "KiB" || unit == "K" || unit == "k")
    v <<= 10;
  else if (unit == "MiB" || unit == "M")
    v <<= 20;
  else if (!unit.empty() && unit != "B")
    throw Failure{kUsage, "bad size unit '" + unit + "'"};
  return v;
}

struct CompileArgs {
  std::string input, output, grid, partitioner = "balanced", report, partition_csv;
  uint64_t seed = 1;
  uint32_t def_use = 9, hop = 1, priv_x = 0, priv_y = 0;
  bool no_cf = false, no_fold = false, no_cse = false, no_dce = false;
};

int cmd_compile(const CompileArgs& a) {
  mnt_compile_options o;
  mnt_compile_options_init(&o);
  if (auto g = resolve_grid(a.grid)) {
    o.grid_x = g->first;
    o.grid_y = g->second;
  }
  o.partitioner = a.partitioner == "lpt" ? MNT_PARTITION_LPT : MNT_PARTITION_BALANCED;
  o.custom_functions = !a.no_cf;
  o.const_fold = !a.no_fold;
  o.cse = !a.no_cse;
  o.dce = !a.no_dce;
  o.def_use_latency = a.def_use;
  o.hop_latency = a.hop;
  o.seed = a.seed;
  o.privileged_x = a.priv_x;
  o.privileged_y = a.priv_y;
  const std::string src = read_file(a.input);
  mnt_compilation* c = nullptr;
  check(mnt_compile(src.data(), src.size(), &o, &c));
  std::unique_ptr<mnt_compilation, decltype(&mnt_compilation_free)> owner(c, mnt_compilation_free);
  const uint8_t* data = nullptr;
  size_t size = 0;
  check(mnt_compilation_bootstream(c, &data, &size));
  std::string out = a.output;
  if (out.empty()) {
    out = a.input;
    if (auto dot = out.rfind(".mntl"); dot != std::string::npos && dot + 5 == out.size())
      out.resize(dot);
    out += ".mntb";
  }
  write_file(out, data, size);
  if (!a.report.empty())
    write_text(a.report, std::string(mnt_compilation_report_json(c)) + "\n");
  if (!a.partition_csv.empty())
    write_text(a.partition_csv, mnt_compilation_partition_csv(c));
  return kOk;
}

struct RunArgs {
  std::string input, grid, metrics, trace, check_source;
  uint64_t vcycles = 65536;
  uint32_t dram_latency = 100, hit_latency = 0, exception_latency = 500, priv_x = 0, priv_y = 0;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  const std::string bytes = read_file(a.input);
  mnt_machine_config cfg;
  mnt_machine_config_init(&cfg);
  if (auto g = resolve_grid(a.grid)) {
    cfg.grid_x = g->first;
    cfg.grid_y = g->second;
    cfg.privileged_x = a.priv_x;
    cfg.privileged_y = a.priv_y;
  }
  cfg.dram_latency = a.dram_latency;
  cfg.cache_hit_latency = a.hit_latency;
  cfg.exception_latency = a.exception_latency;
  cfg.record_trace = !a.trace.empty() || !a.check_source.empty();
  mnt_machine* m = nullptr;
  check(mnt_machine_load(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), &cfg, &m), kLoad);
  std::unique_ptr<mnt_machine, decltype(&mnt_machine_free)> owner(m, mnt_machine_free);
  mnt_run_result result = MNT_RUN_COMPLETED;
  check(mnt_machine_run(m, a.vcycles, &result));
  if (!a.quiet)
    std::fputs(mnt_machine_displays(m), stdout);
  if (!a.metrics.empty())
    write_text(a.metrics, std::string(mnt_machine_metrics_json(m)) + "\n");
  if (!a.trace.empty())
    write_text(a.trace, mnt_machine_trace_csv(m));
  if (result == MNT_RUN_SCHEDULE_BUG) {
    std::cerr << "mntc: schedule bug: " << mnt_machine_failure(m) << "\n";
    return kScheduleBug;
  }
  if (!a.check_source.empty()) {
    const std::string src = read_file(a.check_source);
    int equal = 0;
    const char* diff = nullptr;
    check(mnt_machine_check(m, src.data(), src.size(), &equal, &diff));
    if (!equal) {
      std::cerr << "mntc: trace differs from the reference: " << diff << "\n";
      return kMismatch;
    }
  }
  if (result == MNT_RUN_STOPPED) {
    std::cerr << "mntc: stopped by EXPECT\n";
    return kStopped;
  }
  return kOk;
}

struct GenArgs {
  std::string kind, output = "-", bytes = "1KiB";
  uint32_t count = 64, width = 16, instructions = 200, registers = 10, max_width = 64;
  uint64_t seed = 1;
  bool logic_heavy = false, global_memory = false;
};

int cmd_gen(const GenArgs& a) {
  mnt_gen_params p;
  mnt_gen_params_init(&p);
  if (a.kind == "counters")
    p.kind = MNT_GEN_COUNTERS;
  else if (a.kind == "fifo")
    p.kind = MNT_GEN_FIFO;
  else if (a.kind == "ram")
    p.kind = MNT_GEN_RAM;
  else if (a.kind == "random-dag")
    p.kind = MNT_GEN_RANDOM_DAG;
  else
    p.kind = MNT_GEN_LOGIC_CHAIN;
  p.bytes = parse_bytes(a.bytes);
  p.count = a.count;
  p.width = a.width;
  p.seed = a.seed;
  p.instructions = a.instructions;
  p.registers = a.registers;
  p.max_width = a.max_width;
  p.logic_heavy = a.logic_heavy;
  p.global_memory = a.global_memory;
  char* out = nullptr;
  check(mnt_generate(&p, &out));
  std::unique_ptr<char, decltype(&mnt_string_free)> owner(out, mnt_string_free);
  write_text(a.output, out);
  return kOk;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string output = "-";
  bool csv = false, timing = false;
};

int cmd_report(const ReportArgs& a) {
  std::vector<std::string> docs;
  for (const auto& path : a.inputs)
    docs.push_back(read_file(path));
  std::vector<const char*> ptrs;
  for (const auto& d : docs)
    ptrs.push_back(d.c_str());
  char* out = nullptr;
  check(mnt_report(ptrs.data(), ptrs.size(), a.csv, a.timing, &out));
  std::unique_ptr<char, decltype(&mnt_string_free)> owner(out, mnt_string_free);
  write_text(a.output, out);
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compiler and simulator for statically scheduled RTL simulation on a core grid"};
  app.set_version_flag("--version", mnt_version());
  app.require_subcommand(1);
  const std::string grid_help = std::string("Grid WxH (default: $") + kGridEnv + ", else 1x1)";

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Compile a .mntl netlist to a bootstream");
  compile->add_option("input", ca.input, "Netlist source")->required();
  compile->add_option("-o,--output", ca.output, "Bootstream path (default: input with .mntb)");
  compile->add_option("--grid", ca.grid, grid_help);
  compile->add_option("--partitioner", ca.partitioner, "Process merging strategy")
      ->check(CLI::IsMember({"balanced", "lpt"}));
  compile->add_option("--seed", ca.seed, "Placement seed");
  compile->add_flag("--no-custom-functions", ca.no_cf, "Skip custom-function synthesis");
  compile->add_flag("--no-const-fold", ca.no_fold, "Disable constant folding");
  compile->add_flag("--no-cse", ca.no_cse, "Disable common subexpression elimination");
  compile->add_flag("--no-dce", ca.no_dce, "Disable dead code elimination");
  compile->add_option("--def-use-latency", ca.def_use, "Cycles from issue to register visibility")
      ->check(CLI::Range(1u, 64u));
  compile->add_option("--hop-latency", ca.hop, "Cycles per network hop")->check(CLI::Range(1u, 64u));
  compile->add_option("--privileged-x", ca.priv_x, "Privileged core column");
  compile->add_option("--privileged-y", ca.priv_y, "Privileged core row");
  compile->add_option("--report", ca.report, "Write the compile report as JSON");
  compile->add_option("--partition-csv", ca.partition_csv, "Write process costs and edge word counts");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Simulate a bootstream");
  run->add_option("input", ra.input, "Bootstream")->required();
  run->add_option("--grid", ra.grid, grid_help + "; defaults to the bootstream's grid");
  run->add_option("--vcycles", ra.vcycles, "Virtual cycles to run");
  run->add_option("--metrics", ra.metrics, "Write metrics as JSON");
  run->add_option("--trace", ra.trace, "Write the register trace as CSV");
  run->add_option("--check", ra.check_source, "Compare the trace against this netlist's interpreter");
  run->add_option("--dram-latency", ra.dram_latency, "Cache miss stall cycles");
  run->add_option("--cache-hit-latency", ra.hit_latency, "Extra stall cycles per cache hit");
  run->add_option("--exception-latency", ra.exception_latency, "Host round trip per display");
  run->add_option("--privileged-x", ra.priv_x, "Privileged core column");
  run->add_option("--privileged-y", ra.priv_y, "Privileged core row");
  run->add_flag("-q,--quiet", ra.quiet, "Do not print displayed values");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a benchmark netlist");
  gen->add_option("kind", ga.kind, "counters, fifo, ram, random-dag or logic-chain")
      ->required()
      ->check(CLI::IsMember({"counters", "fifo", "ram", "random-dag", "logic-chain"}));
  gen->add_option("-o,--output", ga.output, "Output path, - for stdout");
  gen->add_option("--bytes", ga.bytes, "fifo/ram footprint, e.g. 1KiB, 64KiB, 512KiB");
  gen->add_option("--count", ga.count, "Number of counters");
  gen->add_option("--width", ga.width, "Counter width");
  gen->add_option("--seed", ga.seed, "random-dag seed");
  gen->add_option("--instructions", ga.instructions, "random-dag size");
  gen->add_option("--registers", ga.registers, "random-dag registers");
  gen->add_option("--max-width", ga.max_width, "random-dag widest value");
  gen->add_flag("--logic-heavy", ga.logic_heavy, "random-dag: 16-bit bitwise logic");
  gen->add_flag("--global-memory", ga.global_memory, "random-dag: add a memory in DRAM");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Tabulate compile reports and run metrics");
  report->add_option("inputs", rep.inputs, "JSON files from compile --report and run --metrics")->required();
  report->add_option("-o,--output", rep.output, "Output path, - for stdout");
  report->add_flag("--csv", rep.csv, "CSV instead of aligned columns");
  report->add_flag("--timing", rep.timing, "Include per-pass compile times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*compile)
      return cmd_compile(ca);
    if (*run)
      return cmd_run(ra);
    if (*gen)
      return cmd_gen(ga);
    return cmd_report(rep);
  } catch (const Failure& f) {
    std::cerr << "mntc: " << f.message << "\n";
    return f.code;
  }
}
