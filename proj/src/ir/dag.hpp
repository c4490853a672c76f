#pragma once

#include <cstdint>
#include <vector>

#include "ir/netlist.hpp"

namespace mnt {

/// Netlist dependence graph with every register split into a current-value
/// source node and its `next` write (a sink instruction node).
struct DependenceDag {
  enum class Kind : uint8_t { RegCurrent, Instr };
  struct Node {
    Kind kind;
    uint32_t ref; // register index or instruction index
    std::vector<uint32_t> preds;
    std::vector<uint32_t> succs;
  };

  std::vector<Node> nodes;
  std::vector<uint32_t> sources;
  std::vector<uint32_t> sinks;

  /// Kahn's algorithm; empty result when the graph has a cycle.
  std::vector<uint32_t> topo_order() const;
  bool is_acyclic() const { return topo_order().size() == nodes.size(); }
};

DependenceDag build_dag(const NetlistProgram& p);

} // namespace mnt
