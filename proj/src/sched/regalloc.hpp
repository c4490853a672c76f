#pragma once

#include <cstdint>

#include "ir/lower.hpp"

namespace mnt {

struct RegallocOptions {
  uint32_t registers = 2048;
  uint32_t scratchpad_words = 16384;
};

struct RegallocStats {
  uint32_t max_registers = 0; // most machine registers used by one process
  uint32_t spilled = 0;       // virtual registers living in the scratchpad
  uint32_t moves = 0;         // end-of-body current := next copies
  uint32_t coalesced = 0;     // next values sharing the current's register
  uint32_t copies = 0;        // start-of-body snapshots of owned currents
};

/// Assigns machine registers to every process, lays out local memories and
/// spill slots in the scratchpad, and commits state explicitly. SETs become
/// preloaded constant registers. SEND destinations become machine registers
/// of the receiving process.
RegallocStats regalloc(low::Program& p, const RegallocOptions& opt = {});

} // namespace mnt
