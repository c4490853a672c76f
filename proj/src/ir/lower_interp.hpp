#pragma once

#include "ir/lower.hpp"
#include "ir/trace.hpp"

namespace mnt {

struct LowerInterpOptions {
  bool record_snapshots = true;
  uint32_t scratchpad_words = 16384;
};

/// Untimed ISA-level interpreter: processes run in order each vcycle, SENDs
/// are delivered and state is committed at the vcycle boundary.
StateTrace interpret_lower(const low::Program& p, uint64_t vcycles, const LowerInterpOptions& opt = {});

} // namespace mnt
