#include "sched/regalloc.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "support/error.hpp"

namespace mnt {

using namespace low;

namespace {

constexpr uint32_t kUnset = UINT32_MAX;
constexpr uint32_t kReloadRegs = 6;

struct Interval {
  Reg vreg;
  uint32_t start;
  uint32_t end;
};

class ProcessAllocator {
public:
  ProcessAllocator(Program& prog, Process& proc, const std::vector<uint32_t>& state_of, const RegallocOptions& opt,
                   RegallocStats& stats)
      : prog_(prog), p_(proc), state_of_(state_of), opt_(opt), stats_(stats) {}

  /// state -> machine register holding its current value
  std::map<uint32_t, Reg> run() {
    collect_states();
    snapshot_owned_nexts();
    hoist_constants();
    layout_memories();
    plan_commits();
    allocate_temps();
    rewrite();
    return cur_reg_;
  }

private:
  uint32_t state(Reg v) const { return v < state_of_.size() ? state_of_[v] : kUnset; }

  void collect_states() {
    std::set<uint32_t> held;
    for (const Binding& b : p_.owned) {
      held.insert(b.state);
      owned_.insert(b.state);
    }
    auto use = [&](Reg v) {
      if (state(v) != kUnset)
        held.insert(state(v));
    };
    for (const Instr& in : p_.body)
      for (unsigned k = 0; k < source_count(in.op); ++k)
        use(in.rs[k]);
    for (const Binding& b : p_.owned)
      use(b.next);
    Reg r = 0;
    for (uint32_t s : held)
      cur_reg_[s] = r++;
  }

  /// Owned currents used as another state's next are copied at body start
  /// so the copy survives this process overwriting them.
  void snapshot_owned_nexts() {
    std::unordered_map<Reg, Reg> copy;
    for (Binding& b : p_.owned) {
      uint32_t t = state(b.next);
      if (t == kUnset || t == b.state || !owned_.count(t))
        continue;
      auto [it, inserted] = copy.emplace(b.next, kNoReg);
      if (inserted)
        it->second = prog_.fresh();
      b.next = it->second;
    }
    if (copy.empty())
      return;
    std::vector<Instr> head;
    for (const auto& [cur, tmp] : std::map<Reg, Reg>(copy.begin(), copy.end())) {
      Instr in;
      in.op = Op::Or;
      in.rd = tmp;
      in.rs[0] = in.rs[1] = cur;
      in.origin = prog_.next_origin++;
      head.push_back(in);
      ++stats_.copies;
    }
    for (Instr& in : p_.body)
      if (in.op == Op::Send) {
        auto it = copy.find(in.rs[0]);
        if (it != copy.end())
          in.rs[0] = it->second;
      }
    p_.body.insert(p_.body.begin(), head.begin(), head.end());
  }

  void hoist_constants() {
    std::vector<Instr> out;
    for (const Instr& in : p_.body) {
      if (in.op == Op::Set)
        const_value_[in.rd] = in.imm;
      else
        out.push_back(in);
    }
    p_.body = std::move(out);
    for (const auto& [v, c] : const_value_)
      const_reg_.emplace(c, kNoReg);
  }

  void layout_memories() {
    std::set<uint32_t> regions;
    for (const Instr& in : p_.body)
      if ((in.op == Op::Lld || in.op == Op::Lst) && in.aux != kNoRegion)
        regions.insert(in.aux);
    uint32_t base = 0;
    for (uint32_t m : regions) {
      const Memory& mem = prog_.memories[m];
      region_base_[m] = base;
      p_.memory_base.emplace_back(m, static_cast<uint16_t>(base));
      for (uint64_t i = 0; i < mem.init.size(); ++i)
        if (mem.init[i])
          p_.scratch_init.emplace_back(static_cast<uint16_t>(base + i), mem.init[i]);
      base += static_cast<uint32_t>(mem.size_words());
      if (base > opt_.scratchpad_words)
        throw CompileError("regalloc", "local memories of process " + std::to_string(p_.id) +
                                           " exceed the scratchpad");
    }
    spill_base_ = base;
    for (Instr& in : p_.body)
      if ((in.op == Op::Lld || in.op == Op::Lst) && in.aux != kNoRegion) {
        in.imm = static_cast<uint16_t>(in.imm + region_base_.at(in.aux));
        in.aux = kNoRegion;
      }
  }

  bool is_temp(Reg v) const { return def_.count(v) != 0; }

  void plan_commits() {
    for (uint32_t i = 0; i < p_.body.size(); ++i) {
      const Instr& in = p_.body[i];
      for (unsigned k = 0; k < source_count(in.op); ++k) {
        last_use_[in.rs[k]] = i;
        if (in.op == Op::Addc && k == 2)
          carry_.insert(in.rs[k]);
      }
      if (has_dest(in.op))
        def_[in.rd] = i;
    }
    const uint32_t end = static_cast<uint32_t>(p_.body.size());
    std::unordered_set<Reg> taken;
    for (const Binding& b : p_.owned) {
      const Reg c = prog_.states[b.state].current;
      if (b.next == c)
        continue;
      auto lu = last_use_.find(c);
      const bool read_before = lu != last_use_.end();
      if (is_temp(b.next) && !taken.count(b.next) && (!read_before || def_.at(b.next) >= lu->second)) {
        taken.insert(b.next);
        coalesced_[b.next] = b.state;
        ++stats_.coalesced;
        continue;
      }
      moves_.push_back(b);
      if (is_temp(b.next))
        last_use_[b.next] = end;
    }
    // Keep coalesced next values live until the end of the body.
    for (const auto& [v, s] : coalesced_)
      last_use_[v] = std::max(last_use_[v], end);
  }

  void allocate_temps() {
    std::vector<Interval> intervals;
    for (const auto& [v, d] : def_) {
      if (coalesced_.count(v))
        continue;
      auto lu = last_use_.find(v);
      intervals.push_back({v, d, lu == last_use_.end() ? d : std::max(d, lu->second)});
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return std::tie(a.start, a.vreg) < std::tie(b.start, b.vreg); });

    const uint32_t fixed = static_cast<uint32_t>(cur_reg_.size() + const_reg_.size());
    if (fixed > opt_.registers)
      throw CompileError("regalloc", "process " + std::to_string(p_.id) + " needs " + std::to_string(fixed) +
                                         " registers for state and constants");
    if (!scan(intervals, opt_.registers - fixed)) {
      // Reserve reload registers plus the 0 and 1 constants for spill code.
      const_reg_.emplace(0, kNoReg);
      const_reg_.emplace(1, kNoReg);
      const uint32_t fixed2 = static_cast<uint32_t>(cur_reg_.size() + const_reg_.size()) + kReloadRegs;
      if (fixed2 >= opt_.registers)
        throw CompileError("regalloc", "no registers left for spill code in process " + std::to_string(p_.id));
      if (!scan(intervals, opt_.registers - fixed2, true))
        throw CompileError("regalloc", "cannot allocate process " + std::to_string(p_.id));
    }
    // Final numbering: currents, then constants, then temps, reload registers last.
    Reg next = static_cast<Reg>(cur_reg_.size());
    for (auto& [c, r] : const_reg_)
      r = next++;
    for (auto& [v, r] : temp_reg_)
      r += next;
    uint32_t used = next + temps_used_;
    if (!spilled_.empty()) {
      reload_base_ = opt_.registers - kReloadRegs;
      used = opt_.registers;
    }
    stats_.max_registers = std::max(stats_.max_registers, used);
  }

  /// Linear scan over `capacity` temp registers; with `spill` set, evicts the
  /// interval ending last instead of failing.
  bool scan(const std::vector<Interval>& intervals, uint32_t capacity, bool spill = false) {
    temp_reg_.clear();
    spilled_.clear();
    temps_used_ = 0;
    // Released registers are reused oldest first before fresh ones are opened.
    std::deque<Reg> free;
    Reg fresh = 0;
    // Active intervals ordered by end.
    std::multimap<uint32_t, const Interval*> active;
    for (const Interval& iv : intervals) {
      for (auto it = active.begin(); it != active.end() && it->first <= iv.start;) {
        free.push_back(temp_reg_.at(it->second->vreg));
        it = active.erase(it);
      }
      if (free.empty() && fresh < capacity)
        free.push_back(fresh++);
      if (!free.empty()) {
        temp_reg_[iv.vreg] = free.front();
        temps_used_ = std::max(temps_used_, free.front() + 1);
        free.pop_front();
        active.emplace(iv.end, &iv);
        continue;
      }
      if (!spill)
        return false;
      // Victim: the spillable interval ending last (carry values cannot be spilled).
      const Interval* victim = carry_.count(iv.vreg) ? nullptr : &iv;
      for (auto it = active.rbegin(); it != active.rend(); ++it) {
        if (carry_.count(it->second->vreg))
          continue;
        if (!victim || it->second->end > victim->end)
          victim = it->second;
        break;
      }
      if (!victim)
        throw CompileError("regalloc", "register pressure of carry values exceeds the register file");
      if (victim == &iv) {
        spilled_.insert(iv.vreg);
        continue;
      }
      Reg r = temp_reg_.at(victim->vreg);
      temp_reg_.erase(victim->vreg);
      spilled_.insert(victim->vreg);
      for (auto it = active.begin(); it != active.end(); ++it)
        if (it->second == victim) {
          active.erase(it);
          break;
        }
      temp_reg_[iv.vreg] = r;
      active.emplace(iv.end, &iv);
    }
    return true;
  }

  Reg machine(Reg v) const {
    if (auto s = state(v); s != kUnset)
      return cur_reg_.at(s);
    if (auto it = const_value_.find(v); it != const_value_.end())
      return const_reg_.at(it->second);
    if (auto it = coalesced_.find(v); it != coalesced_.end())
      return cur_reg_.at(it->second);
    if (auto it = temp_reg_.find(v); it != temp_reg_.end())
      return it->second;
    // Never written in this process: reads as zero.
    auto z = const_reg_.find(0);
    if (z != const_reg_.end() && z->second != kNoReg)
      return z->second;
    throw CompileError("regalloc", "read of undefined register %" + std::to_string(v));
  }

  uint16_t slot_of(Reg v) {
    auto [it, inserted] = spill_slot_.emplace(v, static_cast<uint32_t>(spill_slot_.size()));
    const uint32_t addr = spill_base_ + it->second;
    if (addr >= opt_.scratchpad_words)
      throw CompileError("regalloc", "scratchpad exhausted by spills in process " + std::to_string(p_.id));
    return static_cast<uint16_t>(addr);
  }

  Instr reload(Reg dst, Reg v) {
    Instr ld;
    ld.op = Op::Lld;
    ld.rd = dst;
    ld.rs[0] = const_reg_.at(0);
    ld.imm = slot_of(v);
    ld.aux = kNoRegion;
    ld.origin = prog_.next_origin++;
    return ld;
  }

  void rewrite() {
    // Undefined operands read as zero; make sure a zero register exists.
    bool need_zero = false;
    auto defined = [&](Reg v) {
      return state(v) != kUnset || const_value_.count(v) || coalesced_.count(v) || temp_reg_.count(v) ||
             spilled_.count(v);
    };
    for (const Instr& in : p_.body)
      for (unsigned k = 0; k < source_count(in.op); ++k)
        need_zero = need_zero || !defined(in.rs[k]);
    for (const Binding& b : moves_)
      need_zero = need_zero || !defined(b.next);
    if (need_zero && !const_reg_.count(0)) {
      const_reg_.emplace(0, kNoReg);
      Reg next = static_cast<Reg>(cur_reg_.size());
      for (auto& [c, r] : const_reg_)
        r = next++;
      // Temps were numbered after the constants; shift them by one.
      for (auto& [v, r] : temp_reg_)
        ++r;
      if (next + temps_used_ > (spilled_.empty() ? opt_.registers : opt_.registers - kReloadRegs))
        throw CompileError("regalloc", "register file exhausted in process " + std::to_string(p_.id));
      stats_.max_registers = std::max(stats_.max_registers, next + temps_used_);
    }

    std::vector<Instr> out;
    out.reserve(p_.body.size() + moves_.size());
    auto emit = [&](Instr in) {
      std::array<Reg, 5> loaded{kNoReg, kNoReg, kNoReg, kNoReg, kNoReg};
      for (unsigned k = 0; k < source_count(in.op); ++k) {
        const Reg v = in.rs[k];
        if (!spilled_.count(v)) {
          in.rs[k] = machine(v);
          continue;
        }
        // Reuse the reload of an operand repeated within one instruction.
        unsigned slot = k;
        for (unsigned j = 0; j < k; ++j)
          if (loaded[j] == v)
            slot = j;
        if (slot == k) {
          out.push_back(reload(reload_base_ + k, v));
          loaded[k] = v;
        }
        in.rs[k] = reload_base_ + slot;
      }
      if (has_dest(in.op) && spilled_.count(in.rd)) {
        const Reg v = in.rd;
        in.rd = reload_base_ + 5;
        out.push_back(in);
        Instr st;
        st.op = Op::Lst;
        st.rs[0] = const_reg_.at(0);
        st.rs[1] = reload_base_ + 5;
        st.rs[2] = const_reg_.at(1);
        st.imm = slot_of(v);
        st.aux = kNoRegion;
        st.origin = prog_.next_origin++;
        out.push_back(st);
        return;
      }
      if (has_dest(in.op))
        in.rd = machine(in.rd);
      out.push_back(in);
    };
    for (const Instr& in : p_.body)
      emit(in);
    for (const Binding& b : moves_) {
      const Reg c = cur_reg_.at(b.state);
      if (spilled_.count(b.next)) {
        out.push_back(reload(c, b.next));
      } else {
        Instr mv;
        mv.op = Op::Or;
        mv.rd = c;
        mv.rs[0] = mv.rs[1] = machine(b.next);
        mv.origin = prog_.next_origin++;
        out.push_back(mv);
      }
      ++stats_.moves;
    }
    p_.body = std::move(out);
    for (Binding& b : p_.owned)
      b.next = cur_reg_.at(b.state);

    for (const auto& [s, r] : cur_reg_) {
      p_.reg_init.emplace_back(r, prog_.states[s].init);
      p_.state_regs.emplace_back(s, r);
    }
    for (const auto& [c, r] : const_reg_)
      p_.reg_init.emplace_back(r, c);
    p_.spill_words = static_cast<uint32_t>(spill_slot_.size());
    stats_.spilled += static_cast<uint32_t>(spilled_.size());
    p_.allocated = true;
  }

  Program& prog_;
  Process& p_;
  const std::vector<uint32_t>& state_of_;
  const RegallocOptions& opt_;
  RegallocStats& stats_;

  std::set<uint32_t> owned_;
  std::map<uint32_t, Reg> cur_reg_;
  std::unordered_map<Reg, uint16_t> const_value_;
  std::map<uint16_t, Reg> const_reg_;
  std::map<uint32_t, uint32_t> region_base_;
  uint32_t spill_base_ = 0;
  std::unordered_map<Reg, uint32_t> def_;
  std::unordered_map<Reg, uint32_t> last_use_;
  std::unordered_set<Reg> carry_;
  std::unordered_map<Reg, uint32_t> coalesced_; // next value -> state
  std::vector<Binding> moves_;
  std::map<Reg, Reg> temp_reg_;
  uint32_t temps_used_ = 0;
  std::set<Reg> spilled_;
  std::map<Reg, uint32_t> spill_slot_;
  Reg reload_base_ = 0;
};

} // namespace

RegallocStats regalloc(Program& p, const RegallocOptions& opt) {
  if (p.processes.size() > 1 && !p.sends_materialized)
    throw CompileError("regalloc", "SENDs must be materialized first");
  RegallocStats stats;
  const auto state_of = p.state_of_current();
  std::vector<std::map<uint32_t, Reg>> cur(p.processes.size());
  for (size_t i = 0; i < p.processes.size(); ++i) {
    if (p.processes[i].allocated)
      throw CompileError("regalloc", "process " + std::to_string(i) + " is already allocated");
    cur[i] = ProcessAllocator(p, p.processes[i], state_of, opt, stats).run();
  }
  for (auto& proc : p.processes)
    for (Instr& in : proc.body)
      if (in.op == Op::Send) {
        const uint32_t s = in.remote < state_of.size() ? state_of[in.remote] : kUnset;
        if (s == kUnset || !cur[in.aux].count(s))
          throw CompileError("regalloc", "SEND to a process that does not hold the state");
        in.remote = cur[in.aux].at(s);
      }
  return stats;
}

} // namespace mnt
