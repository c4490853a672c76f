#pragma once

#include <cstdint>
#include <vector>

#include "ir/lower.hpp"
#include "support/grid.hpp"

namespace mnt {

struct ProcessEdge {
  uint32_t from = 0;
  uint32_t to = 0;
  uint32_t words = 0; // distinct 16-bit state words `to` reads from `from` each vcycle
  bool operator==(const ProcessEdge&) const = default;
};

/// View of a partitioned program: per-process cost and communication edges.
struct ProcessGraph {
  std::vector<uint64_t> cost;
  std::vector<ProcessEdge> edges; // sorted by (from, to)

  uint64_t total_words() const;
  uint64_t max_cost() const;
};

struct MergeOptions {
  uint32_t scratchpad_words = 16384;
  uint32_t max_instructions = 4096;
};

/// Instructions executed per vcycle excluding NOPs and SETs (SETs become
/// preloaded constant registers). Before SEND materialization the outgoing
/// state words are added as SENDs to come.
uint64_t estimate_cost(const low::Program& p, uint32_t process);
ProcessGraph process_graph(const low::Program& p);

/// Replaces the monolithic process by one process per sink group.
void split(low::Program& p);

void merge_balanced(low::Program& p, uint32_t max_cores, const MergeOptions& opt = {});
void merge_lpt(low::Program& p, uint32_t max_cores);

/// Textbook LPT: process indices per bin, bins in index order.
std::vector<std::vector<uint32_t>> lpt_bins(const std::vector<uint64_t>& costs, uint32_t bins);

/// Merges the listed processes into the first one (union by origin, then CSE and DCE).
void merge_group(low::Program& p, const std::vector<std::vector<uint32_t>>& groups);

/// Emits one SEND per (owned state word, remote reader).
void materialize_sends(low::Program& p);
uint64_t total_sends(const low::Program& p);

struct Placement {
  std::vector<Coord> coord; // by process id
};

/// Privileged process at `privileged`, the rest shuffled over the remaining cores.
Placement place_random(const low::Program& p, GridDims grid, Coord privileged, uint64_t seed);

} // namespace mnt
