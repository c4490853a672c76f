#include "machine/machine.hpp"

#include <deque>

#include "ir/bits.hpp"
#include "machine/cache.hpp"
#include "sched/bootstream.hpp"
#include "support/error.hpp"
#include "support/paged_memory.hpp"

namespace mnt {

using namespace low;

namespace {

constexpr uint32_t kNoCore = UINT32_MAX;

struct PendingWrite {
  uint64_t land; // active cycle at which the value becomes visible
  uint16_t reg;
  Word value;
};

struct Inbound {
  uint16_t reg;
  uint16_t value;
};

struct Flit {
  uint32_t dest;
  uint16_t reg;
  uint16_t value;
  std::vector<Link> links;
  size_t hop = 0;        // next link to enter
  uint64_t next_event;   // active cycle of the next link entry or delivery
};

struct Core {
  const CoreProgram* prog = nullptr;
  uint32_t index = 0;
  std::vector<Word> regs;
  std::vector<uint16_t> spad;
  std::deque<PendingWrite> pending;
  std::vector<uint16_t> pending_count;
  std::deque<Inbound> inbox;
  uint64_t delivered_at = UINT64_MAX; // active cycle of the last ejection
};

} // namespace

struct Machine::Impl {
  Schedule sched;
  GridConfig cfg;
  PagedMemory dram;
  Cache cache;
  std::vector<Core> cores;
  std::vector<uint32_t> core_slot; // grid index -> position in `cores`
  std::vector<Flit> flits;
  std::vector<uint64_t> link_busy_until;
  uint64_t active = 0;   // cycles executed outside stalls
  uint32_t slot = 0;     // position within the current vcycle
  bool halted = false;
  RunStatus halt_status = RunStatus::Completed;
  std::string failure;
  SimMetrics metrics;
  StateTrace trace;
  std::vector<BigUint> last_boundary;

  Impl(Schedule s, const GridConfig& c)
      : sched(std::move(s)), cfg(c), cache(c.cache_bytes, c.cache_line_words, dram) {
    load();
  }

  void load() {
    if (!(sched.grid == cfg.dims))
      throw Error(ErrorKind::Load, "bootstream is for a " + std::to_string(sched.grid.x) + "x" +
                                       std::to_string(sched.grid.y) + " grid, machine is " +
                                       std::to_string(cfg.dims.x) + "x" + std::to_string(cfg.dims.y));
    if (!(sched.privileged == cfg.privileged))
      throw Error(ErrorKind::Load, "bootstream privileged core does not match the machine");
    if (sched.vcycle_length == 0)
      throw Error(ErrorKind::Load, "vcycle length is zero");
    core_slot.assign(cfg.dims.cores(), kNoCore);
    link_busy_until.assign(size_t(cfg.dims.cores()) * 2, 0);
    for (const CoreProgram& p : sched.cores) {
      const uint32_t idx = cfg.dims.index(p.coord);
      if (core_slot[idx] != kNoCore)
        throw Error(ErrorKind::Load, "two segments for one core");
      if (p.slots.size() > cfg.imem_capacity)
        throw Error(ErrorKind::Load, "segment for core (" + std::to_string(p.coord.x) + "," +
                                         std::to_string(p.coord.y) + ") has " + std::to_string(p.slots.size()) +
                                         " instructions, capacity is " + std::to_string(cfg.imem_capacity));
      if (uint64_t(p.slots.size()) + p.epilogue + p.sleep != sched.vcycle_length)
        throw Error(ErrorKind::Load, "core segment does not fill the vcycle");
      const bool privileged = p.coord == cfg.privileged;
      for (const Instr& in : p.slots) {
        if (is_privileged(in.op) && !privileged)
          throw Error(ErrorKind::Load, "privileged instruction on a non-privileged core");
        if (in.op == Op::Cust && in.aux >= p.functions.size())
          throw Error(ErrorKind::Load, "CUST refers to a missing function table");
        if (in.op == Op::Send && in.aux >= cfg.dims.cores())
          throw Error(ErrorKind::Load, "SEND to a core outside the grid");
        if (in.op == Op::Expect && in.aux >= sched.meta.exceptions.size())
          throw Error(ErrorKind::Load, "EXPECT with an unknown exception id");
      }
      Core c;
      c.prog = &p;
      c.index = idx;
      c.regs.assign(cfg.registers, Word{});
      c.pending_count.assign(cfg.registers, 0);
      c.spad.assign(cfg.scratchpad_words, 0);
      for (const auto& [r, v] : p.reg_init) {
        if (r >= cfg.registers)
          throw Error(ErrorKind::Load, "register init outside the register file");
        c.regs[r] = {v, false};
      }
      for (const auto& [a, v] : p.scratch_init) {
        if (a >= cfg.scratchpad_words)
          throw Error(ErrorKind::Load, "scratchpad init outside the scratchpad");
        c.spad[a] = v;
      }
      core_slot[idx] = static_cast<uint32_t>(cores.size());
      cores.push_back(std::move(c));
    }
    for (const Core& c : cores)
      for (const Instr& in : c.prog->slots)
        if (in.op == Op::Send && core_slot[in.aux] == kNoCore)
          throw Error(ErrorKind::Load, "SEND to a core without a program");
    for (const auto& [a, v] : sched.meta.global_init)
      dram.write(a, v);

    // Segments stream out of the privileged core one 8-byte beat per cycle;
    // each core then counts down so that all start together.
    const auto beats = segment_beats(sched);
    uint64_t streamed = 0, start = 0;
    metrics.cores.resize(cores.size());
    for (size_t k = 0; k < cores.size(); ++k) {
      streamed += beats[k];
      const uint64_t t = streamed + uint64_t(hop_count(cfg.dims, cfg.privileged, sched.cores[k].coord)) *
                                        sched.hop_latency;
      metrics.cores[k].coord = sched.cores[k].coord;
      metrics.cores[k].start_cycle = t + sched.cores[k].countdown;
      if (k > 0 && metrics.cores[k].start_cycle != start)
        throw Error(ErrorKind::Load, "COUNT_DOWN values do not start all cores on the same cycle");
      start = metrics.cores[k].start_cycle;
    }
    metrics.boot_cycles = start;
    metrics.vcycle_length = sched.vcycle_length;

    for (const RegisterSymbol& r : sched.meta.registers) {
      trace.reg_names.push_back(r.name);
      trace.reg_widths.push_back(r.width);
      for (const StateLocation& l : r.words)
        if (!l.constant && (l.core >= cfg.dims.cores() || core_slot[l.core] == kNoCore || l.reg >= cfg.registers))
          throw Error(ErrorKind::Load, "register symbol " + r.name + " points outside the loaded cores");
    }
    last_boundary = registers();
  }

  void bug(const std::string& why) {
    if (failure.empty())
      failure = why;
    halted = true;
    halt_status = RunStatus::ScheduleBug;
  }

  Word read(Core& c, Reg r) {
    if (c.pending_count[r] != 0) {
      ++metrics.hazards;
      bug("core " + std::to_string(c.index) + " read register " + std::to_string(r) + " with a write in flight");
    }
    return c.regs[r];
  }

  void write(Core& c, Reg r, Word v) {
    c.pending.push_back({active + sched.def_use_latency, static_cast<uint16_t>(r), v});
    ++c.pending_count[r];
  }

  uint16_t state_word(const StateLocation& l) const {
    if (l.constant)
      return l.value;
    const Core& c = cores[core_slot[l.core]];
    // A write still in flight at the boundary belongs to the vcycle just finished.
    for (auto it = c.pending.rbegin(); it != c.pending.rend(); ++it)
      if (it->reg == l.reg)
        return it->value.value;
    return c.regs[l.reg].value;
  }

  std::vector<BigUint> registers() const {
    std::vector<BigUint> out;
    for (const RegisterSymbol& r : sched.meta.registers) {
      std::vector<uint16_t> w;
      for (const StateLocation& l : r.words)
        w.push_back(state_word(l));
      out.push_back(from_words(w));
    }
    return out;
  }

  void land() {
    for (Core& c : cores)
      while (!c.pending.empty() && c.pending.front().land <= active) {
        const PendingWrite& w = c.pending.front();
        c.regs[w.reg] = w.value;
        --c.pending_count[w.reg];
        c.pending.pop_front();
      }
  }

  void drop(const Flit& f, const std::string& why) {
    ++metrics.dropped_messages;
    bug("message to core " + std::to_string(f.dest) + " dropped: " + why);
  }

  /// Moves a flit into its next link or ejects it; false if it was dropped.
  bool advance(Flit& f) {
    if (f.hop == f.links.size()) {
      Core& d = cores[core_slot[f.dest]];
      if (d.delivered_at == active) {
        drop(f, "ejection port busy");
        return false;
      }
      d.delivered_at = active;
      d.inbox.push_back({f.reg, f.value});
      ++metrics.messages;
      return false;
    }
    const uint32_t id = f.links[f.hop].id();
    if (link_busy_until[id] > active) {
      drop(f, "link busy");
      return false;
    }
    link_busy_until[id] = active + sched.hop_latency;
    ++f.hop;
    f.next_event = active + sched.hop_latency;
    return true;
  }

  void network() {
    size_t keep = 0;
    for (size_t i = 0; i < flits.size(); ++i) {
      Flit& f = flits[i];
      if (f.next_event == active && !advance(f))
        continue;
      if (keep != i)
        flits[keep] = std::move(f);
      ++keep;
    }
    flits.resize(keep);
  }

  uint64_t global_addr(Core& c, const Instr& in) {
    return uint64_t(read(c, in.rs[0]).value) | (uint64_t(read(c, in.rs[1]).value) << 16) |
           (uint64_t(read(c, in.rs[2]).value) << 32);
  }

  void cache_access(uint64_t addr, bool is_write, uint16_t& data) {
    if (cache.access(addr, is_write, data)) {
      metrics.stalled_cycles += cfg.cache_hit_latency;
      metrics.total_cycles += cfg.cache_hit_latency;
    } else {
      metrics.stalled_cycles += cfg.dram_latency;
      metrics.total_cycles += cfg.dram_latency;
    }
  }

  void execute(Core& c, CoreCounters& k, const Instr& in) {
    switch (in.op) {
    case Op::Nop: ++k.nop; return;
    case Op::Send: {
      ++k.send;
      Flit f;
      f.dest = in.aux;
      f.reg = static_cast<uint16_t>(in.remote);
      f.value = read(c, in.rs[0]).value;
      MachineModel m;
      m.grid = cfg.dims;
      m.hop_latency = sched.hop_latency;
      f.links = route(cfg.dims.coord(c.index), cfg.dims.coord(in.aux), active, m).links;
      f.next_event = active;
      if (advance(f))
        flits.push_back(std::move(f));
      return;
    }
    default: break;
    }
    ++k.compute;
    switch (in.op) {
    case Op::Set: write(c, in.rd, {in.imm, false}); break;
    case Op::Cust: {
      const CustomFunction& f = c.prog->functions[in.aux];
      write(c, in.rd,
            {apply_custom(f, read(c, in.rs[0]).value, read(c, in.rs[1]).value, read(c, in.rs[2]).value,
                          read(c, in.rs[3]).value),
             false});
      break;
    }
    case Op::Lld: {
      const uint16_t base = read(c, in.rs[0]).value;
      write(c, in.rd, {c.spad[(uint32_t(base) + in.imm) % c.spad.size()], false});
      break;
    }
    case Op::Lst: {
      const uint16_t base = read(c, in.rs[0]).value;
      const uint16_t v = read(c, in.rs[1]).value;
      if (read(c, in.rs[2]).value != 0)
        c.spad[(uint32_t(base) + in.imm) % c.spad.size()] = v;
      break;
    }
    case Op::Gld: {
      const uint64_t a = global_addr(c, in);
      uint16_t v = 0;
      cache_access(a, false, v);
      write(c, in.rd, {v, false});
      break;
    }
    case Op::Gst: {
      const uint64_t a = global_addr(c, in);
      uint16_t v = read(c, in.rs[3]).value;
      if (read(c, in.rs[4]).value != 0)
        cache_access(a, true, v);
      break;
    }
    case Op::Expect: {
      if (read(c, in.rs[0]).value == read(c, in.rs[1]).value)
        break;
      const ExceptionInfo& e = sched.meta.exceptions[in.aux];
      const uint64_t v = metrics.vcycles;
      if (e.kind == ExceptionKind::Stop) {
        metrics.exceptions.push_back({v, in.aux, true});
        trace.stop = StopInfo{v, {in.aux}};
        halted = true;
        halt_status = RunStatus::Stopped;
        break;
      }
      // The host flushes the cache and reads the value from DRAM.
      cache.flush();
      BigUint val = 0;
      for (unsigned j = word_count(e.width); j-- > 0;)
        val = (val << 16) | BigUint(dram.read(e.slot + j));
      trace.displays.push_back({v, in.aux, val});
      metrics.exceptions.push_back({v, in.aux, false});
      metrics.exception_cycles += cfg.exception_latency;
      metrics.total_cycles += cfg.exception_latency;
      break;
    }
    default: {
      const Word a = read(c, in.rs[0]);
      const Word b = in.rs[1] == kNoReg ? Word{} : read(c, in.rs[1]);
      const Word d = in.rs[2] == kNoReg ? Word{} : read(c, in.rs[2]);
      write(c, in.rd, eval_alu(in.op, a, b, d, in.imm));
      break;
    }
    }
  }

  void cycle() {
    land();
    network();
    for (size_t i = 0; i < cores.size(); ++i) {
      Core& c = cores[i];
      CoreCounters& k = metrics.cores[i];
      const auto& slots = c.prog->slots;
      if (slot < slots.size()) {
        execute(c, k, slots[slot]);
      } else if (slot < slots.size() + c.prog->epilogue) {
        ++k.epilogue;
        if (c.inbox.empty()) {
          bug("core " + std::to_string(c.index) + " reached its epilogue before a message arrived");
          continue;
        }
        const Inbound m = c.inbox.front();
        c.inbox.pop_front();
        write(c, m.reg, {m.value, false});
      } else {
        ++k.sleep;
      }
    }
    ++active;
    ++metrics.total_cycles;
    ++slot;
  }

  void boundary() {
    for (const Core& c : cores)
      if (!c.inbox.empty())
        bug("core " + std::to_string(c.index) + " received more messages than its epilogue length");
    if (!flits.empty())
      bug("messages still in flight at the vcycle boundary");
    slot = 0;
    ++metrics.vcycles;
    last_boundary = registers();
    trace.vcycles = metrics.vcycles;
    if (cfg.record_snapshots)
      trace.snapshots.push_back(last_boundary);
  }

  RunStatus run(uint64_t vcycles) {
    if (halted)
      return halt_status;
    const uint64_t target = metrics.vcycles + vcycles;
    while (metrics.vcycles < target) {
      cycle();
      if (halted)
        break;
      if (slot == sched.vcycle_length)
        boundary();
      if (halted)
        break;
    }
    metrics.partial_slots = slot;
    const CacheStats& cs = cache.stats();
    metrics.cache_hits = cs.hits;
    metrics.cache_misses = cs.misses;
    metrics.cache_writebacks = cs.writebacks;
    return halted ? halt_status : RunStatus::Completed;
  }

  StateTrace snapshot() const {
    StateTrace t = trace;
    t.final_registers = last_boundary;
    for (const MemorySymbol& m : sched.meta.memories) {
      const unsigned words = word_count(m.width);
      MemoryImage img{m.name, m.width, {}};
      img.values.resize(m.depth);
      for (uint64_t i = 0; i < m.depth; ++i) {
        std::vector<uint16_t> el;
        for (unsigned j = 0; j < words; ++j) {
          const uint64_t off = j * m.depth + i;
          if (m.global) {
            el.push_back(cache.peek(m.global_base + off));
          } else {
            const Core& c = cores[core_slot[m.core]];
            el.push_back(c.spad[(m.base + off) % c.spad.size()]);
          }
        }
        img.values[i] = from_words(el);
      }
      t.memories.push_back(std::move(img));
    }
    return t;
  }
};

Machine::Machine(const std::vector<uint8_t>& bootstream, const GridConfig& cfg)
    : impl_(std::make_unique<Impl>(parse_bootstream(bootstream), cfg)) {}
Machine::Machine(Schedule s, const GridConfig& cfg) {
  // Equivalent to loading the emitted stream.
  assign_countdowns(s, segment_beats(s));
  impl_ = std::make_unique<Impl>(std::move(s), cfg);
}
Machine::~Machine() = default;
Machine::Machine(Machine&&) noexcept = default;

RunStatus Machine::run(uint64_t vcycles) { return impl_->run(vcycles); }
StateTrace Machine::trace() const { return impl_->snapshot(); }
const SimMetrics& Machine::metrics() const { return impl_->metrics; }
const Schedule& Machine::schedule() const { return impl_->sched; }
const std::string& Machine::failure() const { return impl_->failure; }

} // namespace mnt
