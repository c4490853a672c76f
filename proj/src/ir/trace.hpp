#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ir/bits.hpp"

namespace mnt {

struct DisplayEvent {
  uint64_t vcycle = 0;
  uint32_t eid = 0;
  BigUint value = 0;

  bool operator==(const DisplayEvent&) const = default;
};

struct StopInfo {
  uint64_t vcycle = 0;
  std::vector<uint32_t> eids; // every EXPECT that failed in that vcycle (a single one from hardware)
};

struct MemoryImage {
  std::string name;
  unsigned width = 0;
  std::vector<BigUint> values;
};

/// Register values after every committed vcycle, final memory contents,
/// the display log, and the terminating EXPECT if any.
struct StateTrace {
  std::vector<std::string> reg_names;
  std::vector<unsigned> reg_widths;
  std::vector<std::vector<BigUint>> snapshots;
  std::vector<BigUint> final_registers;
  std::vector<MemoryImage> memories;
  std::vector<DisplayEvent> displays;
  std::optional<StopInfo> stop;
  uint64_t vcycles = 0; // committed vcycles
};

struct TraceDiff {
  bool equal = true;
  std::string message;
};

/// Compares `actual` against the oracle trace `reference`. Displays from a
/// halting vcycle are ignored; memories are compared only for runs that did
/// not stop.
TraceDiff compare_traces(const StateTrace& reference, const StateTrace& actual);

std::string trace_csv(const StateTrace& t);

} // namespace mnt
