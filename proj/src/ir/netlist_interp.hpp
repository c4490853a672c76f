#pragma once

#include "ir/netlist.hpp"
#include "ir/trace.hpp"

namespace mnt {

struct InterpOptions {
  bool record_snapshots = true;
};

/// Reference semantics: every vcycle evaluates all instructions on current
/// values, then commits stores (in source order) and register nexts.
StateTrace interpret_netlist(const NetlistProgram& p, uint64_t vcycles, const InterpOptions& opt = {});

/// Evaluates one value-producing instruction on already computed operands.
BigUint eval_netlist_op(const NetlistInstr& in, const std::vector<BigUint>& args);

} // namespace mnt
