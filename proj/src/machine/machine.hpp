#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ir/trace.hpp"
#include "sched/schedule.hpp"
#include "support/grid.hpp"

namespace mnt {

struct GridConfig {
  GridDims dims;
  Coord privileged;
  uint32_t cache_bytes = 131072;
  uint32_t cache_line_words = 4;
  uint32_t dram_latency = 100;
  uint32_t cache_hit_latency = 0;    // extra stall cycles charged on a hit
  uint32_t exception_latency = 500;  // host round trip for a display
  uint32_t registers = 2048;
  uint32_t imem_capacity = 4096;
  uint32_t scratchpad_words = 16384;
  bool record_snapshots = true;
};

struct CoreCounters {
  Coord coord;
  uint64_t compute = 0;
  uint64_t send = 0;
  uint64_t nop = 0;
  uint64_t epilogue = 0;
  uint64_t sleep = 0;
  uint64_t start_cycle = 0; // first cycle of vcycle 0
};

struct ExceptionRecord {
  uint64_t vcycle = 0;
  uint32_t eid = 0;
  bool stop = false;
};

struct SimMetrics {
  uint64_t vcycles = 0;        // completed vcycles
  uint32_t vcycle_length = 0;
  uint64_t partial_slots = 0;  // slots of a vcycle cut short by a stop
  uint64_t total_cycles = 0;   // excludes boot
  uint64_t stalled_cycles = 0; // cache-miss stalls
  uint64_t exception_cycles = 0;
  uint64_t boot_cycles = 0;
  uint64_t cache_hits = 0;
  uint64_t cache_misses = 0;
  uint64_t cache_writebacks = 0;
  uint64_t messages = 0;
  uint64_t dropped_messages = 0;
  uint64_t hazards = 0;
  std::vector<CoreCounters> cores;
  std::vector<ExceptionRecord> exceptions;
};

enum class RunStatus { Completed, Stopped, ScheduleBug };

class Machine {
public:
  /// Loads a bootstream; throws Error(Load) on a malformed stream or a grid mismatch.
  Machine(const std::vector<uint8_t>& bootstream, const GridConfig& cfg);
  /// Loads a schedule directly, assigning its boot countdowns.
  Machine(Schedule s, const GridConfig& cfg);
  ~Machine();
  Machine(Machine&&) noexcept;

  /// Runs up to `vcycles` more vcycles. Returns early on a stop or a schedule bug.
  RunStatus run(uint64_t vcycles);

  /// Register snapshots so far; final registers and memories as of the last boundary.
  StateTrace trace() const;
  const SimMetrics& metrics() const;
  const Schedule& schedule() const;
  /// Description of the first schedule bug, empty if none.
  const std::string& failure() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace mnt
