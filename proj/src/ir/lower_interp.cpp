#include "ir/lower_interp.hpp"

#include <unordered_map>

#include "support/error.hpp"
#include "support/paged_memory.hpp"

namespace mnt {

using namespace low;

namespace {

struct Decoded {
  Op op;
  uint32_t rd;
  std::array<uint32_t, 5> rs;
  uint16_t imm;
  uint32_t aux;
  uint32_t remote; // index in the target process's register space
};

constexpr uint32_t kUnused = UINT32_MAX;

struct ProcState {
  std::vector<Word> regs;
  std::vector<Decoded> code;
  std::unordered_map<Reg, uint32_t> index; // virtual register -> dense index (unallocated)
  std::vector<uint16_t> spad;              // allocated only
  const Process* proc = nullptr;

  uint32_t slot(Reg r) {
    if (r == kNoReg)
      return kUnused;
    if (proc->allocated)
      return r;
    auto [it, inserted] = index.emplace(r, static_cast<uint32_t>(index.size()));
    return it->second;
  }
};

class LowerInterpreter {
public:
  LowerInterpreter(const Program& p, const LowerInterpOptions& opt) : p_(p), opt_(opt) {}

  StateTrace run(uint64_t vcycles) {
    setup();
    StateTrace t;
    for (const auto& r : p_.registers) {
      t.reg_names.push_back(r.name);
      t.reg_widths.push_back(r.width);
    }
    // Allocated processes commit in place, so a stop leaves the last boundary as the final state.
    t.final_registers = registers();
    for (uint64_t v = 0; v < vcycles; ++v) {
      if (!step(v, t))
        break;
      ++t.vcycles;
      t.final_registers = registers();
      if (opt_.record_snapshots)
        t.snapshots.push_back(t.final_registers);
    }
    memories(t);
    return t;
  }

private:
  void setup() {
    owner_.assign(p_.states.size(), -1);
    for (size_t pi = 0; pi < p_.processes.size(); ++pi)
      for (const auto& b : p_.processes[pi].owned)
        owner_[b.state] = static_cast<int>(pi);

    procs_.resize(p_.processes.size());
    for (size_t pi = 0; pi < p_.processes.size(); ++pi) {
      ProcState& ps = procs_[pi];
      ps.proc = &p_.processes[pi];
      // Current registers get dense slots first so SEND targets can be resolved.
      if (!ps.proc->allocated)
        for (const auto& s : p_.states)
          ps.slot(s.current);
    }
    for (size_t pi = 0; pi < p_.processes.size(); ++pi) {
      ProcState& ps = procs_[pi];
      for (const Instr& in : ps.proc->body) {
        Decoded d{in.op, ps.slot(in.rd), {}, in.imm, in.aux, kUnused};
        for (unsigned k = 0; k < 5; ++k)
          d.rs[k] = k < source_count(in.op) ? ps.slot(in.rs[k]) : kUnused;
        if (in.op == Op::Send)
          d.remote = procs_[in.aux].slot(in.remote);
        ps.code.push_back(d);
      }
      for (const auto& b : ps.proc->owned)
        ps.slot(b.next);
    }
    for (size_t pi = 0; pi < p_.processes.size(); ++pi) {
      ProcState& ps = procs_[pi];
      if (ps.proc->allocated) {
        ps.regs.assign(2048, Word{});
        for (const auto& [r, v] : ps.proc->reg_init)
          ps.regs.at(r) = {v, false};
        ps.spad.assign(opt_.scratchpad_words, 0);
        for (const auto& [a, v] : ps.proc->scratch_init)
          ps.spad.at(a) = v;
      } else {
        ps.regs.assign(ps.index.size(), Word{});
        for (const auto& s : p_.states)
          ps.regs[ps.index.at(s.current)] = {s.init, false};
      }
    }
    local_.resize(p_.memories.size());
    for (size_t m = 0; m < p_.memories.size(); ++m) {
      const Memory& mem = p_.memories[m];
      if (mem.kind == MemKind::Local) {
        local_[m] = mem.init.empty() ? std::vector<uint16_t>(mem.size_words(), 0) : mem.init;
      } else if (!mem.init.empty()) {
        for (uint64_t i = 0; i < mem.init.size(); ++i)
          if (mem.init[i])
            global_.write(mem.global_base + i, mem.init[i]);
      }
    }
  }

  struct Message {
    uint32_t target;
    uint32_t reg;
    uint16_t value;
  };

  /// Executes one vcycle; false when a stop-class EXPECT fired.
  bool step(uint64_t v, StateTrace& t) {
    messages_.clear();
    for (size_t pi = 0; pi < procs_.size(); ++pi) {
      ProcState& ps = procs_[pi];
      auto& R = ps.regs;
      auto rd = [&](uint32_t i) -> Word { return i == kUnused ? Word{} : R[i]; };
      for (const Decoded& d : ps.code) {
        switch (d.op) {
        case Op::Nop: break;
        case Op::Cust: {
          const CustomFunction& f = ps.proc->functions.at(d.aux);
          R[d.rd] = {apply_custom(f, rd(d.rs[0]).value, rd(d.rs[1]).value, rd(d.rs[2]).value, rd(d.rs[3]).value),
                     false};
          break;
        }
        case Op::Lld: R[d.rd] = {local_read(ps, d, rd(d.rs[0]).value), false}; break;
        case Op::Lst:
          if (rd(d.rs[2]).value != 0)
            local_write(ps, d, rd(d.rs[0]).value, rd(d.rs[1]).value);
          break;
        case Op::Gld: R[d.rd] = {global_.read(global_addr(rd(d.rs[0]), rd(d.rs[1]), rd(d.rs[2]))), false}; break;
        case Op::Gst:
          if (rd(d.rs[4]).value != 0)
            global_.write(global_addr(rd(d.rs[0]), rd(d.rs[1]), rd(d.rs[2])), rd(d.rs[3]).value);
          break;
        case Op::Send: messages_.push_back({d.aux, d.remote, rd(d.rs[0]).value}); break;
        case Op::Expect:
          if (rd(d.rs[0]).value != rd(d.rs[1]).value) {
            const ExceptionInfo& e = p_.exceptions.at(d.aux);
            if (e.kind == ExceptionKind::Stop) {
              t.stop = StopInfo{v, {d.aux}};
              return false;
            }
            BigUint val = 0;
            for (unsigned k = word_count(e.width); k-- > 0;)
              val = (val << 16) | BigUint(global_.read(e.slot + k));
            t.displays.push_back({v, d.aux, val});
          }
          break;
        default: R[d.rd] = eval_alu(d.op, rd(d.rs[0]), rd(d.rs[1]), rd(d.rs[2]), d.imm); break;
        }
      }
    }
    commit();
    return true;
  }

  void commit() {
    // Unallocated processes commit implicitly, reading every next before writing.
    std::vector<std::pair<uint32_t, Word>> writes;
    for (size_t pi = 0; pi < procs_.size(); ++pi) {
      ProcState& ps = procs_[pi];
      if (ps.proc->allocated)
        continue;
      writes.clear();
      for (const auto& b : ps.proc->owned)
        writes.emplace_back(b.state, ps.regs[ps.index.at(b.next)]);
      for (const auto& [s, w] : writes) {
        ps.regs[ps.index.at(p_.states[s].current)] = {w.value, false};
        if (!p_.sends_materialized)
          for (auto& other : procs_)
            if (&other != &ps && !other.proc->allocated)
              other.regs[other.index.at(p_.states[s].current)] = {w.value, false};
      }
    }
    for (const auto& m : messages_)
      procs_[m.target].regs[m.reg] = {m.value, false};
  }

  static uint64_t global_addr(Word a, Word b, Word c) {
    return uint64_t(a.value) | (uint64_t(b.value) << 16) | (uint64_t(c.value) << 32);
  }

  uint16_t local_read(ProcState& ps, const Decoded& d, uint16_t base) {
    if (ps.proc->allocated)
      return ps.spad[(base + d.imm) % ps.spad.size()];
    auto& mem = local_.at(d.aux);
    uint64_t a = uint64_t(base) + d.imm;
    if (a >= mem.size())
      throw Error(ErrorKind::Runtime, "local load outside memory " + p_.memories[d.aux].name);
    return mem[a];
  }

  void local_write(ProcState& ps, const Decoded& d, uint16_t base, uint16_t value) {
    if (ps.proc->allocated) {
      ps.spad[(base + d.imm) % ps.spad.size()] = value;
      return;
    }
    auto& mem = local_.at(d.aux);
    uint64_t a = uint64_t(base) + d.imm;
    if (a >= mem.size())
      throw Error(ErrorKind::Runtime, "local store outside memory " + p_.memories[d.aux].name);
    mem[a] = value;
  }

  uint16_t state_value(uint32_t s) {
    int o = owner_[s];
    if (o < 0)
      return p_.states[s].init;
    ProcState& ps = procs_[o];
    if (ps.proc->allocated) {
      for (const auto& [st, r] : ps.proc->state_regs)
        if (st == s)
          return ps.regs[r].value;
      throw Error(ErrorKind::Runtime, "owned state without a machine register");
    }
    return ps.regs[ps.index.at(p_.states[s].current)].value;
  }

  std::vector<BigUint> registers() {
    std::vector<BigUint> out;
    for (const auto& r : p_.registers) {
      std::vector<uint16_t> w;
      for (unsigned j = 0; j < r.words(); ++j)
        w.push_back(state_value(r.first_state + j));
      out.push_back(from_words(w));
    }
    return out;
  }

  void memories(StateTrace& t) {
    for (uint32_t m = 0; m < p_.memories.size(); ++m) {
      const Memory& mem = p_.memories[m];
      std::vector<uint16_t> words(mem.size_words());
      if (mem.kind == MemKind::Global) {
        for (uint64_t i = 0; i < words.size(); ++i)
          words[i] = global_.read(mem.global_base + i);
      } else {
        words = local_[m];
        for (const auto& ps : procs_) {
          if (!ps.proc->allocated)
            continue;
          for (const auto& [region, base] : ps.proc->memory_base)
            if (region == m)
              for (uint64_t i = 0; i < words.size(); ++i)
                words[i] = ps.spad[base + i];
        }
      }
      MemoryImage img{mem.name, mem.width, {}};
      img.values.resize(mem.depth);
      for (uint64_t i = 0; i < mem.depth; ++i) {
        std::vector<uint16_t> el;
        for (unsigned j = 0; j < mem.words(); ++j)
          el.push_back(words[j * mem.depth + i]);
        img.values[i] = from_words(el);
      }
      t.memories.push_back(std::move(img));
    }
  }

  const Program& p_;
  LowerInterpOptions opt_;
  std::vector<int> owner_;
  std::vector<ProcState> procs_;
  std::vector<std::vector<uint16_t>> local_;
  PagedMemory global_;
  std::vector<Message> messages_;
};

} // namespace

StateTrace interpret_lower(const low::Program& p, uint64_t vcycles, const LowerInterpOptions& opt) {
  return LowerInterpreter(p, opt).run(vcycles);
}

} // namespace mnt
