#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ir/lower.hpp"

namespace mnt {

/// A fanout-free tree of bitwise logic rooted at one instruction.
struct Cone {
  uint32_t root = 0;              // body index
  std::vector<uint32_t> nodes;    // body indices including the root, ascending
  std::vector<low::Reg> leaves;   // external operands in discovery order
  low::CustomFunction table;      // under `leaves` order
  low::CustomFunction canonical;  // minimum over leaf permutations
  std::array<low::Reg, 4> slots{}; // operand registers for the canonical table

  unsigned savings() const { return static_cast<unsigned>(nodes.size()) - 1; }
};

struct SynthOptions {
  unsigned budget = low::kMaxFunctions;
  uint32_t max_states_per_root = 4096;  // cone enumeration cap per root
  uint32_t max_search_nodes = 20000;    // branch-and-bound cap for the class budget
};

struct SynthStats {
  size_t cones = 0;
  size_t classes = 0;
  size_t selected = 0;
  size_t functions = 0;
  size_t saved = 0;
  bool exact = true; // false when a search cap was hit
};

std::vector<Cone> extract_cones(const low::Process& p, const SynthOptions& opt = {});

/// Class index per cone; classes numbered by first appearance.
std::vector<uint32_t> group_equivalent(const std::vector<Cone>& cones, uint32_t* class_count = nullptr);

/// Indices of a maximum-savings set of instruction-disjoint cones using at
/// most `budget` classes.
std::vector<uint32_t> select_cones(const low::Process& p, const std::vector<Cone>& cones,
                                   const std::vector<uint32_t>& classes, const SynthOptions& opt = {},
                                   bool* exact = nullptr);

/// Replaces each chosen cone by a CUST and fills the process function table.
void rewrite(low::Process& p, const std::vector<Cone>& cones, const std::vector<uint32_t>& classes,
             const std::vector<uint32_t>& chosen);

/// Truth tables of `f(a,b,c,d)` evaluated over all 16 leaf-bit combinations.
low::CustomFunction table_of(const std::array<uint16_t, 16>& outputs);
low::CustomFunction canonicalize(const low::CustomFunction& f, std::array<uint8_t, 4>* perm = nullptr);

SynthStats synthesize_functions(low::Process& p, const SynthOptions& opt = {});
SynthStats synthesize_functions(low::Program& p, const SynthOptions& opt = {});

} // namespace mnt
