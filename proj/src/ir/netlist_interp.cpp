#include "ir/netlist_interp.hpp"

#include <algorithm>

namespace mnt {

namespace {

BigUint shift_amount_or_max(const BigUint& a) { return a > kMaxWidth ? BigUint(kMaxWidth) : a; }

} // namespace

BigUint eval_netlist_op(const NetlistInstr& in, const std::vector<BigUint>& a) {
  const unsigned w = in.width;
  switch (in.op) {
  case NOp::And: return a[0] & a[1];
  case NOp::Or: return a[0] | a[1];
  case NOp::Xor: return a[0] ^ a[1];
  case NOp::Not: return truncate(~a[0], w);
  case NOp::Add: return truncate(a[0] + a[1], w);
  case NOp::Sub: return truncate(a[0] - a[1], w);
  case NOp::Shl: {
    BigUint s = shift_amount_or_max(a[1]);
    if (s >= w)
      return 0;
    return truncate(a[0] << static_cast<unsigned>(s), w);
  }
  case NOp::Shr: {
    BigUint s = shift_amount_or_max(a[1]);
    if (s >= w)
      return 0;
    return a[0] >> static_cast<unsigned>(s);
  }
  case NOp::Sra: {
    BigUint s = shift_amount_or_max(a[1]);
    bool neg = sign_bit(a[0], w);
    if (s >= w)
      return neg ? mask_of(w) : BigUint(0);
    unsigned k = static_cast<unsigned>(s);
    BigUint r = a[0] >> k;
    if (neg)
      r |= mask_of(w) ^ mask_of(w - k);
    return r;
  }
  case NOp::Eq: return a[0] == a[1] ? 1 : 0;
  case NOp::Ltu: return a[0] < a[1] ? 1 : 0;
  case NOp::Lts: {
    const unsigned aw = in.args[0].width;
    BigUint flip = BigUint(1) << (aw - 1);
    return (a[0] ^ flip) < (a[1] ^ flip) ? 1 : 0;
  }
  case NOp::Mux: return a[0] != 0 ? a[1] : a[2];
  case NOp::Concat: {
    BigUint r = 0;
    for (size_t i = 0; i < a.size(); ++i)
      r = (r << in.args[i].width) | a[i];
    return r;
  }
  case NOp::Slice: return truncate(a[0] >> in.lo, w);
  default: return 0;
  }
}

StateTrace interpret_netlist(const NetlistProgram& p, uint64_t vcycles, const InterpOptions& opt) {
  StateTrace t;
  for (const auto& r : p.registers) {
    t.reg_names.push_back(r.name);
    t.reg_widths.push_back(r.width);
  }
  std::vector<BigUint> regs;
  for (const auto& r : p.registers)
    regs.push_back(r.init);
  std::vector<std::vector<BigUint>> mems;
  for (const auto& m : p.memories)
    mems.push_back(m.init.empty() ? std::vector<BigUint>(m.depth, 0) : m.init);

  const auto order = p.topo_order();
  std::vector<BigUint> wires(p.wires.size());
  std::vector<BigUint> args;
  auto value = [&](const Operand& o) -> const BigUint& {
    switch (o.kind) {
    case Operand::Kind::Wire: return wires[o.index];
    case Operand::Kind::Reg: return regs[o.index];
    default: return o.value;
    }
  };

  struct PendingStore {
    uint32_t instr;
    uint32_t mem;
    uint64_t addr;
    BigUint data;
  };
  std::vector<PendingStore> stores;
  std::vector<std::pair<uint32_t, BigUint>> nexts;
  std::vector<DisplayEvent> displays;
  std::vector<uint32_t> failed;

  for (uint64_t v = 0; v < vcycles; ++v) {
    stores.clear();
    nexts.clear();
    displays.clear();
    failed.clear();
    for (uint32_t i : order) {
      const NetlistInstr& in = p.instructions[i];
      switch (in.op) {
      case NOp::Load: {
        uint64_t addr = static_cast<uint64_t>(value(in.args[0]));
        wires[in.result] = mems[in.target][addr];
        break;
      }
      case NOp::Next: nexts.emplace_back(in.target, value(in.args[0])); break;
      case NOp::Store:
        if (value(in.args[2]) != 0)
          stores.push_back({i, in.target, static_cast<uint64_t>(value(in.args[0])), value(in.args[1])});
        break;
      case NOp::Expect:
        if (value(in.args[0]) != value(in.args[1]))
          failed.push_back(in.eid);
        break;
      case NOp::Display:
        if (value(in.args[0]) != 0)
          displays.push_back({v, in.eid, value(in.args[1])});
        break;
      default:
        args.clear();
        for (const Operand& o : in.args)
          args.push_back(value(o));
        wires[in.result] = eval_netlist_op(in, args);
        break;
      }
    }
    if (!failed.empty()) {
      std::sort(failed.begin(), failed.end());
      t.stop = StopInfo{v, failed};
      break;
    }
    std::sort(displays.begin(), displays.end(), [](const auto& a, const auto& b) { return a.eid < b.eid; });
    t.displays.insert(t.displays.end(), displays.begin(), displays.end());
    // Stores are applied in source order so that the last one wins.
    std::sort(stores.begin(), stores.end(), [](const auto& a, const auto& b) { return a.instr < b.instr; });
    for (const auto& s : stores)
      mems[s.mem][s.addr] = s.data;
    for (auto& [r, val] : nexts)
      regs[r] = val;
    ++t.vcycles;
    if (opt.record_snapshots)
      t.snapshots.push_back(regs);
  }
  t.final_registers = regs;
  for (size_t m = 0; m < p.memories.size(); ++m)
    t.memories.push_back({p.memories[m].name, p.memories[m].width, std::move(mems[m])});
  return t;
}

} // namespace mnt
