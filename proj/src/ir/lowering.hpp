#pragma once

#include "ir/lower.hpp"
#include "ir/netlist.hpp"

namespace mnt {

struct LowerOptions {
  uint32_t scratchpad_words = 16384;
};

/// Translates a netlist into one monolithic process over 16-bit words.
low::Program lower(const NetlistProgram& p, const LowerOptions& opt = {});

} // namespace mnt
