#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cf/synth.hpp"
#include "ir/lower.hpp"
#include "ir/netlist.hpp"
#include "opt/passes.hpp"
#include "par/partition.hpp"
#include "sched/regalloc.hpp"
#include "sched/schedule.hpp"

namespace mnt {

enum class Partitioner { Balanced, Lpt };

struct CompileOptions {
  GridDims grid;
  Coord privileged;
  Partitioner partitioner = Partitioner::Balanced;
  bool custom_functions = true;
  bool optimize = true;
  OptimizerOptions passes;
  uint32_t def_use_latency = 9;
  uint32_t hop_latency = 1;
  uint64_t placement_seed = 1;
};

struct CompileReport {
  std::string design;
  GridDims grid;
  Partitioner partitioner = Partitioner::Balanced;
  bool custom_functions = true;
  uint32_t processes = 0;
  ProcessGraph partition; // after merging
  uint64_t total_sends = 0;
  uint64_t non_nop = 0;  // scheduled instructions other than NOPs, all cores
  uint64_t instructions_before_cf = 0;
  uint64_t instructions_after_cf = 0;
  SynthStats cf;
  RegallocStats regalloc;
  Vcpl vcpl;
  uint64_t bootstream_bytes = 0;
  std::vector<std::pair<std::string, double>> pass_ms;
};

struct CompileResult {
  Schedule schedule;
  std::vector<uint8_t> bootstream;
  CompileReport report;
};

/// Lowered, partitioned and register-allocated program ready for scheduling.
low::Program compile_to_lower(const NetlistProgram& n, const CompileOptions& opt, CompileReport* report = nullptr);

CompileResult compile(const NetlistProgram& n, const CompileOptions& opt);
CompileResult compile_source(const std::string& mntl, const CompileOptions& opt);

const char* partitioner_name(Partitioner p);
bool parse_partitioner(const std::string& s, Partitioner& p);

} // namespace mnt
