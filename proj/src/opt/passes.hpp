#pragma once

#include <unordered_map>

#include "ir/lower.hpp"

namespace mnt {

struct OptimizerOptions {
  bool const_fold = true;
  bool cse = true;
  bool dce = true;
  unsigned max_rounds = 10;
};

/// Register renaming applied to body operands, owned next bindings and SEND payloads.
void substitute(low::Process& p, const std::unordered_map<low::Reg, low::Reg>& map);

/// Each pass returns true when it changed the process.
bool const_fold(low::Process& p);
bool common_subexpr_elim(low::Process& p);
bool dead_code_elim(low::Process& p);

/// const_fold, cse, dce repeated until nothing changes.
void optimize_process(low::Process& p, const OptimizerOptions& opt = {});
void optimize(low::Program& p, const OptimizerOptions& opt = {});

} // namespace mnt
