#include "ir/dag.hpp"

namespace mnt {

std::vector<uint32_t> DependenceDag::topo_order() const {
  std::vector<uint32_t> pending(nodes.size());
  std::vector<uint32_t> order;
  for (uint32_t i = 0; i < nodes.size(); ++i) {
    pending[i] = static_cast<uint32_t>(nodes[i].preds.size());
    if (pending[i] == 0)
      order.push_back(i);
  }
  for (size_t head = 0; head < order.size(); ++head)
    for (uint32_t s : nodes[order[head]].succs)
      if (--pending[s] == 0)
        order.push_back(s);
  if (order.size() != nodes.size())
    return {};
  return order;
}

DependenceDag build_dag(const NetlistProgram& p) {
  DependenceDag g;
  std::vector<uint32_t> reg_node(p.registers.size(), kNone);
  std::vector<uint32_t> instr_node(p.instructions.size());
  for (uint32_t i = 0; i < p.instructions.size(); ++i) {
    instr_node[i] = static_cast<uint32_t>(g.nodes.size());
    g.nodes.push_back({DependenceDag::Kind::Instr, i, {}, {}});
  }
  auto edge = [&](uint32_t from, uint32_t to) {
    g.nodes[from].succs.push_back(to);
    g.nodes[to].preds.push_back(from);
  };
  for (uint32_t i = 0; i < p.instructions.size(); ++i) {
    for (const Operand& a : p.instructions[i].args) {
      if (a.kind == Operand::Kind::Wire) {
        edge(instr_node[p.wires[a.index].def], instr_node[i]);
      } else if (a.kind == Operand::Kind::Reg) {
        if (reg_node[a.index] == kNone) {
          reg_node[a.index] = static_cast<uint32_t>(g.nodes.size());
          g.nodes.push_back({DependenceDag::Kind::RegCurrent, a.index, {}, {}});
          g.sources.push_back(reg_node[a.index]);
        }
        edge(reg_node[a.index], instr_node[i]);
      }
    }
  }
  for (uint32_t i = 0; i < p.instructions.size(); ++i)
    if (p.instructions[i].is_sink())
      g.sinks.push_back(instr_node[i]);
  return g;
}

} // namespace mnt
