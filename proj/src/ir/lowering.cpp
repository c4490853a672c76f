#include "ir/lowering.hpp"

#include <map>

namespace mnt {

using low::Instr;
using low::Op;
using low::Reg;
using Words = std::vector<Reg>;

namespace {

unsigned top_bits(unsigned width) { return width - kWordBits * (word_count(width) - 1); }

uint16_t word_mask(unsigned width, unsigned k) {
  unsigned n = word_count(width);
  if (k + 1 < n)
    return 0xFFFF;
  unsigned b = top_bits(width);
  return b == 16 ? 0xFFFF : static_cast<uint16_t>((1u << b) - 1);
}

unsigned ceil_log2(uint64_t v) {
  unsigned k = 0;
  while ((uint64_t(1) << k) < v)
    ++k;
  return k;
}

class Lowerer {
public:
  Lowerer(const NetlistProgram& n, const LowerOptions& opt) : n_(n), opt_(opt) {}

  low::Program run() {
    prog_.name = n_.name;
    declare_state();
    declare_memories();
    wires_.resize(n_.wires.size());

    std::vector<uint32_t> deferred;
    for (uint32_t i : n_.topo_order()) {
      const NetlistInstr& in = n_.instructions[i];
      if (in.is_sink())
        deferred.push_back(i);
      else
        wires_[in.result] = lower_value(in);
    }
    std::sort(deferred.begin(), deferred.end());
    // Register nexts, then stores in source order, then exceptions by eid.
    for (uint32_t i : deferred)
      if (n_.instructions[i].op == NOp::Next)
        lower_next(n_.instructions[i]);
    for (uint32_t i : deferred)
      if (n_.instructions[i].op == NOp::Store)
        lower_store(n_.instructions[i]);
    for (uint32_t i : deferred) {
      const auto& in = n_.instructions[i];
      if (in.op == NOp::Expect)
        lower_expect(in);
      else if (in.op == NOp::Display)
        lower_display(in);
    }

    low::Process proc;
    proc.id = 0;
    proc.body = std::move(body_);
    for (uint32_t s = 0; s < prog_.states.size(); ++s)
      if (prog_.states[s].next != prog_.states[s].current)
        proc.owned.push_back({s, prog_.states[s].next});
    prog_.processes.push_back(std::move(proc));
    return std::move(prog_);
  }

private:
  // --- declarations -------------------------------------------------------

  void declare_state() {
    for (const auto& r : n_.registers) {
      low::RtlRegister rr;
      rr.name = r.name;
      rr.width = r.width;
      rr.first_state = static_cast<uint32_t>(prog_.states.size());
      for (unsigned j = 0; j < rr.words(); ++j) {
        low::StateWord s;
        s.reg = static_cast<uint32_t>(prog_.registers.size());
        s.word = static_cast<uint16_t>(j);
        s.init = word_of(r.init, j);
        s.current = prog_.fresh();
        s.next = s.current;
        prog_.states.push_back(s);
      }
      prog_.registers.push_back(rr);
    }
  }

  void declare_memories() {
    uint64_t cursor = 0;
    for (const auto& m : n_.memories) {
      low::Memory lm;
      lm.name = m.name;
      lm.width = m.width;
      lm.depth = m.depth;
      lm.kind = m.kind;
      if (!m.init.empty()) {
        lm.init.assign(lm.size_words(), 0);
        for (uint64_t i = 0; i < m.depth; ++i)
          for (unsigned j = 0; j < lm.words(); ++j)
            lm.init[j * m.depth + i] = word_of(m.init[i], j);
      }
      if (m.kind == MemKind::Local) {
        if (lm.size_words() > opt_.scratchpad_words)
          throw CompileError("lower", "local memory " + m.name + " needs " + std::to_string(lm.size_words()) +
                                          " words but a scratchpad holds " +
                                          std::to_string(opt_.scratchpad_words) + "; declare it global");
      } else {
        uint64_t align = uint64_t(1) << ceil_log2(lm.size_words());
        cursor = (cursor + align - 1) / align * align;
        lm.global_base = cursor;
        cursor += lm.size_words();
      }
      prog_.memories.push_back(std::move(lm));
    }
    for (const auto& in : n_.instructions) {
      if (in.op != NOp::Expect && in.op != NOp::Display)
        continue;
      low::ExceptionInfo e;
      e.eid = in.eid;
      if (in.op == NOp::Expect) {
        e.kind = low::ExceptionKind::Stop;
        e.width = in.args[0].width;
      } else {
        e.kind = low::ExceptionKind::Display;
        e.width = in.args[1].width;
        e.slot = cursor;
        cursor += word_count(e.width);
      }
      prog_.exceptions.push_back(e);
    }
    std::sort(prog_.exceptions.begin(), prog_.exceptions.end(),
              [](const auto& a, const auto& b) { return a.eid < b.eid; });
    prog_.global_words = cursor;
  }

  // --- emission -----------------------------------------------------------

  Reg emit(Op op, Reg a = low::kNoReg, Reg b = low::kNoReg, Reg c = low::kNoReg) {
    Instr in;
    in.op = op;
    in.rd = prog_.fresh();
    in.rs[0] = a;
    in.rs[1] = b;
    in.rs[2] = c;
    push(in);
    return in.rd;
  }

  void push(Instr in) {
    in.origin = prog_.next_origin++;
    body_.push_back(in);
  }

  Reg konst(uint16_t v) {
    auto it = consts_.find(v);
    if (it != consts_.end())
      return it->second;
    Instr in;
    in.op = Op::Set;
    in.rd = prog_.fresh();
    in.imm = v;
    push(in);
    consts_[v] = in.rd;
    return in.rd;
  }

  Words words_of(const Operand& o) {
    switch (o.kind) {
    case Operand::Kind::Wire: return wires_[o.index];
    case Operand::Kind::Reg: {
      const auto& r = prog_.registers[o.index];
      Words w;
      for (unsigned j = 0; j < r.words(); ++j)
        w.push_back(prog_.states[r.first_state + j].current);
      return w;
    }
    case Operand::Kind::Const: {
      Words w;
      for (unsigned j = 0; j < word_count(o.width); ++j)
        w.push_back(konst(word_of(o.value, j)));
      return w;
    }
    }
    return {};
  }

  Words zeros(unsigned width) { return Words(word_count(width), konst(0)); }

  Reg or_reduce(const std::vector<Reg>& v) {
    if (v.empty())
      return konst(0);
    Reg r = v[0];
    for (size_t i = 1; i < v.size(); ++i)
      r = emit(Op::Or, r, v[i]);
    return r;
  }

  /// Accumulates (x << offset) into `acc` (one contribution list per output
  /// word, `outw` bits total); offset may be negative. Returns whether any
  /// contribution may reach at or beyond bit `outw`.
  bool add_field(std::vector<std::vector<Reg>>& acc, const Words& x, unsigned xw, int offset, unsigned outw) {
    bool overflow = false;
    for (unsigned i = 0; i < x.size(); ++i) {
      int valid = static_cast<int>(std::min(16u, xw - 16 * i));
      int lo = 16 * static_cast<int>(i) + offset; // output bit of input bit 0 of word i
      int hi = lo + valid;                          // exclusive
      if (hi <= 0 || lo >= static_cast<int>(outw)) {
        continue;
      }
      if (hi > static_cast<int>(outw))
        overflow = true;
      for (unsigned k = 0; k < acc.size(); ++k) {
        int base = 16 * static_cast<int>(k);
        if (hi <= base || lo >= base + 16)
          continue;
        int d = lo - base;
        Reg piece = x[i];
        if (d > 0)
          piece = emit(Op::Sll, x[i], konst(static_cast<uint16_t>(d)));
        else if (d < 0)
          piece = emit(Op::Srl, x[i], konst(static_cast<uint16_t>(-d)));
        acc[k].push_back(piece);
      }
    }
    return overflow;
  }

  Words finish(std::vector<std::vector<Reg>>& acc, unsigned outw, bool needs_mask) {
    Words out;
    for (unsigned k = 0; k < acc.size(); ++k)
      out.push_back(or_reduce(acc[k]));
    if (needs_mask && top_bits(outw) < 16)
      out.back() = emit(Op::And, out.back(), konst(word_mask(outw, static_cast<unsigned>(out.size() - 1))));
    return out;
  }

  Words shifted(const Words& x, unsigned xw, int offset, unsigned outw) {
    std::vector<std::vector<Reg>> acc(word_count(outw));
    bool m = add_field(acc, x, xw, offset, outw);
    return finish(acc, outw, m);
  }

  Words mask_top(Words w, unsigned width) {
    if (top_bits(width) < 16)
      w.back() = emit(Op::And, w.back(), konst(word_mask(width, static_cast<unsigned>(w.size() - 1))));
    return w;
  }

  /// 0xFFFF when bit (width-1) of x is set, else 0.
  Reg sign_word(const Words& x, unsigned width) {
    unsigned r = (width - 1) % 16;
    Reg t = x.back();
    if (r != 15)
      t = emit(Op::Sll, t, konst(static_cast<uint16_t>(15 - r)));
    return emit(Op::Sra, t, konst(15));
  }

  Words shift_const(NOp op, const Words& x, unsigned w, uint64_t c, Reg sign) {
    if (c >= w) {
      if (op == NOp::Sra) {
        Words out;
        for (unsigned k = 0; k < x.size(); ++k)
          out.push_back(word_mask(w, k) == 0xFFFF ? sign : emit(Op::And, sign, konst(word_mask(w, k))));
        return out;
      }
      return zeros(w);
    }
    int off = static_cast<int>(c);
    if (op == NOp::Shl)
      return shifted(x, w, off, w);
    Words r = shifted(x, w, -off, w);
    if (op == NOp::Sra && c > 0) {
      // Fill bits [w - c, w) with the sign.
      for (unsigned k = 0; k < r.size(); ++k) {
        uint32_t lo = std::max<uint32_t>(16 * k, static_cast<uint32_t>(w - c));
        uint32_t hi = std::min<uint32_t>(16 * k + 16, w);
        if (lo >= hi)
          continue;
        uint32_t m = ((hi - lo == 16) ? 0xFFFFu : ((1u << (hi - lo)) - 1)) << (lo - 16 * k);
        Reg fill = m == 0xFFFF ? sign : emit(Op::And, sign, konst(static_cast<uint16_t>(m)));
        r[k] = emit(Op::Or, r[k], fill);
      }
    }
    return r;
  }

  Words lower_shift(const NetlistInstr& in) {
    const unsigned w = in.width;
    Words x = words_of(in.args[0]);
    Reg sign = in.op == NOp::Sra ? sign_word(x, w) : low::kNoReg;
    const Operand& amt = in.args[1];
    if (amt.kind == Operand::Kind::Const) {
      uint64_t c = amt.value > BigUint(w) ? uint64_t(w) : static_cast<uint64_t>(amt.value);
      return shift_const(in.op, x, w, c, sign);
    }
    Words a = words_of(amt);
    const unsigned aw = amt.width;
    const unsigned stages = ceil_log2(w);
    for (unsigned k = 0; k < stages && k < aw; ++k) {
      Reg src = a[k / 16];
      Reg bit = (k % 16) ? emit(Op::Srl, src, konst(static_cast<uint16_t>(k % 16))) : src;
      bit = emit(Op::And, bit, konst(1));
      Words s = shift_const(in.op, x, w, uint64_t(1) << k, sign);
      for (unsigned i = 0; i < x.size(); ++i)
        x[i] = emit(Op::Mux, bit, s[i], x[i]);
    }
    if (aw > stages) {
      std::vector<Reg> hi;
      Reg first = a[stages / 16];
      if (stages % 16)
        first = emit(Op::Srl, first, konst(static_cast<uint16_t>(stages % 16)));
      hi.push_back(first);
      for (unsigned j = stages / 16 + 1; j < a.size(); ++j)
        hi.push_back(a[j]);
      Reg out_of_range = or_reduce(hi);
      Words fill = shift_const(in.op, x, w, w, sign);
      for (unsigned i = 0; i < x.size(); ++i)
        x[i] = emit(Op::Mux, out_of_range, fill[i], x[i]);
    }
    return x;
  }

  Reg less_than(const Words& a, const Words& b) {
    Reg lt = emit(Op::Sltu, a[0], b[0]);
    for (size_t i = 1; i < a.size(); ++i) {
      Reg l = emit(Op::Sltu, a[i], b[i]);
      Reg e = emit(Op::Seq, a[i], b[i]);
      lt = emit(Op::Or, l, emit(Op::And, e, lt));
    }
    return lt;
  }

  /// Three-word global address base + offset + addr.
  std::array<Reg, 3> global_address(const Words& addr, uint64_t offset) {
    Reg a0 = addr[0];
    Reg a1 = addr.size() > 1 ? addr[1] : konst(0);
    Reg w0 = emit(Op::Add, a0, konst(static_cast<uint16_t>(offset)));
    Reg w1 = emit(Op::Addc, a1, konst(static_cast<uint16_t>(offset >> 16)), w0);
    Reg w2 = emit(Op::Addc, konst(0), konst(static_cast<uint16_t>(offset >> 32)), w1);
    return {w0, w1, w2};
  }

  std::array<Reg, 3> const_address(uint64_t a) {
    return {konst(static_cast<uint16_t>(a)), konst(static_cast<uint16_t>(a >> 16)),
            konst(static_cast<uint16_t>(a >> 32))};
  }

  Words lower_value(const NetlistInstr& in) {
    const unsigned w = in.width;
    switch (in.op) {
    case NOp::And:
    case NOp::Or:
    case NOp::Xor: {
      Op op = in.op == NOp::And ? Op::And : in.op == NOp::Or ? Op::Or : Op::Xor;
      Words a = words_of(in.args[0]), b = words_of(in.args[1]), r;
      for (size_t i = 0; i < a.size(); ++i)
        r.push_back(emit(op, a[i], b[i]));
      return r;
    }
    case NOp::Not: {
      Words a = words_of(in.args[0]), r;
      for (unsigned i = 0; i < a.size(); ++i)
        r.push_back(emit(Op::Xor, a[i], konst(word_mask(w, i))));
      return r;
    }
    case NOp::Add: {
      Words a = words_of(in.args[0]), b = words_of(in.args[1]), r;
      r.push_back(emit(Op::Add, a[0], b[0]));
      for (size_t i = 1; i < a.size(); ++i)
        r.push_back(emit(Op::Addc, a[i], b[i], r.back()));
      return mask_top(r, w);
    }
    case NOp::Sub: {
      Words a = words_of(in.args[0]), b = words_of(in.args[1]), r;
      if (a.size() == 1)
        return mask_top({emit(Op::Sub, a[0], b[0])}, w);
      // a - b = a + ~b + 1 with the incoming carry produced by 0xFFFF + 1.
      Reg carry = emit(Op::Add, konst(0xFFFF), konst(1));
      for (size_t i = 0; i < a.size(); ++i) {
        Reg nb = emit(Op::Xor, b[i], konst(0xFFFF));
        carry = emit(Op::Addc, a[i], nb, carry);
        r.push_back(carry);
      }
      return mask_top(r, w);
    }
    case NOp::Shl:
    case NOp::Shr:
    case NOp::Sra: return lower_shift(in);
    case NOp::Eq: {
      Words a = words_of(in.args[0]), b = words_of(in.args[1]);
      Reg e = emit(Op::Seq, a[0], b[0]);
      for (size_t i = 1; i < a.size(); ++i)
        e = emit(Op::And, e, emit(Op::Seq, a[i], b[i]));
      return {e};
    }
    case NOp::Ltu: return {less_than(words_of(in.args[0]), words_of(in.args[1]))};
    case NOp::Lts: {
      Words a = words_of(in.args[0]), b = words_of(in.args[1]);
      const unsigned aw = in.args[0].width;
      if (aw == 16)
        return {emit(Op::Slts, a[0], b[0])};
      Reg flip = konst(static_cast<uint16_t>(1u << ((aw - 1) % 16)));
      a.back() = emit(Op::Xor, a.back(), flip);
      b.back() = emit(Op::Xor, b.back(), flip);
      return {less_than(a, b)};
    }
    case NOp::Mux: {
      Reg s = words_of(in.args[0])[0];
      Words a = words_of(in.args[1]), b = words_of(in.args[2]), r;
      for (size_t i = 0; i < a.size(); ++i)
        r.push_back(emit(Op::Mux, s, a[i], b[i]));
      return r;
    }
    case NOp::Concat: {
      std::vector<std::vector<Reg>> acc(word_count(w));
      unsigned off = 0;
      for (size_t k = in.args.size(); k-- > 0;) {
        const Operand& o = in.args[k];
        add_field(acc, words_of(o), o.width, static_cast<int>(off), w);
        off += o.width;
      }
      return finish(acc, w, false);
    }
    case NOp::Slice: return shifted(words_of(in.args[0]), in.args[0].width, -static_cast<int>(in.lo), w);
    case NOp::Load: {
      const low::Memory& m = prog_.memories[in.target];
      Words addr = words_of(in.args[0]);
      Words r;
      for (unsigned j = 0; j < m.words(); ++j) {
        if (m.kind == MemKind::Local) {
          Instr ld;
          ld.op = Op::Lld;
          ld.rd = prog_.fresh();
          ld.rs[0] = addr[0];
          ld.imm = static_cast<uint16_t>(j * m.depth);
          ld.aux = in.target;
          push(ld);
          r.push_back(ld.rd);
        } else {
          auto ga = global_address(addr, m.global_base + j * m.depth);
          r.push_back(emit(Op::Gld, ga[0], ga[1], ga[2]));
        }
      }
      return r;
    }
    default: break;
    }
    throw CompileError("lower", "unexpected operation " + std::string(nop_name(in.op)));
  }

  void lower_next(const NetlistInstr& in) {
    const auto& r = prog_.registers[in.target];
    Words v = words_of(in.args[0]);
    for (unsigned j = 0; j < r.words(); ++j)
      prog_.states[r.first_state + j].next = v[j];
  }

  void lower_store(const NetlistInstr& in) {
    const low::Memory& m = prog_.memories[in.target];
    Words addr = words_of(in.args[0]);
    Words data = words_of(in.args[1]);
    Reg pred = words_of(in.args[2])[0];
    for (unsigned j = 0; j < m.words(); ++j) {
      Instr st;
      if (m.kind == MemKind::Local) {
        st.op = Op::Lst;
        st.rs = {addr[0], data[j], pred, low::kNoReg, low::kNoReg};
        st.imm = static_cast<uint16_t>(j * m.depth);
        st.aux = in.target;
      } else {
        auto ga = global_address(addr, m.global_base + j * m.depth);
        st.op = Op::Gst;
        st.rs = {ga[0], ga[1], ga[2], data[j], pred};
      }
      push(st);
    }
  }

  void lower_expect(const NetlistInstr& in) {
    Words a = words_of(in.args[0]), b = words_of(in.args[1]);
    for (size_t i = 0; i < a.size(); ++i) {
      Instr e;
      e.op = Op::Expect;
      e.rs[0] = a[i];
      e.rs[1] = b[i];
      e.aux = in.eid;
      push(e);
    }
  }

  void lower_display(const NetlistInstr& in) {
    const auto& info = prog_.exceptions[in.eid];
    Reg pred = words_of(in.args[0])[0];
    Words v = words_of(in.args[1]);
    for (size_t i = 0; i < v.size(); ++i) {
      auto ga = const_address(info.slot + i);
      Instr st;
      st.op = Op::Gst;
      st.rs = {ga[0], ga[1], ga[2], v[i], pred};
      push(st);
    }
    Instr e;
    e.op = Op::Expect;
    e.rs[0] = pred;
    e.rs[1] = konst(0);
    e.aux = in.eid;
    push(e);
  }

  const NetlistProgram& n_;
  LowerOptions opt_;
  low::Program prog_;
  std::vector<Instr> body_;
  std::vector<Words> wires_;
  std::map<uint16_t, Reg> consts_;
};

} // namespace

low::Program lower(const NetlistProgram& p, const LowerOptions& opt) { return Lowerer(p, opt).run(); }

} // namespace mnt
