#include "sched/schedule.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_set>

#include "support/error.hpp"

namespace mnt {

using namespace low;

uint32_t hop_count(GridDims grid, Coord src, Coord dst) {
  return (dst.x + grid.x - src.x) % grid.x + (dst.y + grid.y - src.y) % grid.y;
}

MessageRoute route(Coord src, Coord dst, uint64_t depart, const MachineModel& m) {
  MessageRoute r;
  r.source = src;
  r.dest = dst;
  r.depart = depart;
  Coord at = src;
  while (at.x != dst.x) {
    r.links.push_back({m.grid.index(at), 0});
    at.x = (at.x + 1) % m.grid.x;
  }
  while (at.y != dst.y) {
    r.links.push_back({m.grid.index(at), 1});
    at.y = (at.y + 1) % m.grid.y;
  }
  r.arrival = depart + r.links.size() * uint64_t(m.hop_latency);
  return r;
}

Instr machine_form(const Instr& in) {
  Instr out;
  out.op = in.op;
  const unsigned n = source_count(in.op);
  for (unsigned k = 0; k < n; ++k)
    out.rs[k] = in.rs[k];
  if (has_dest(in.op))
    out.rd = in.rd;
  switch (in.op) {
  case Op::Set:
  case Op::Lld:
  case Op::Lst: out.imm = in.imm; break;
  case Op::Cust:
  case Op::Expect: out.aux = in.aux; break;
  case Op::Send:
    out.aux = in.aux;
    out.remote = in.remote;
    break;
  default: break;
  }
  if (in.op == Op::Lld || in.op == Op::Lst)
    out.aux = kNoRegion;
  return out;
}

namespace {

constexpr uint32_t kNoCore = UINT32_MAX;

struct Edge {
  uint32_t to;
  uint32_t latency;
};

struct CoreSched {
  uint32_t process = 0;
  uint32_t core = 0;
  Coord coord;
  std::vector<Instr> body;
  std::vector<std::vector<Edge>> succ;
  std::vector<uint32_t> npred;
  std::vector<uint64_t> ready;
  std::vector<uint64_t> prio;
  std::vector<uint64_t> issue;
  std::set<std::pair<uint64_t, uint32_t>> released; // (-priority, id)
  std::priority_queue<std::pair<uint64_t, uint32_t>, std::vector<std::pair<uint64_t, uint32_t>>, std::greater<>>
      pending; // (ready, id)
  size_t issued = 0;
  std::vector<Instr> slots;
  std::vector<std::pair<uint64_t, Reg>> arrivals; // (cycle, register)
};

void build_dependencies(CoreSched& c, const MachineModel& m, const std::vector<Coord>& coords) {
  const size_t n = c.body.size();
  c.succ.assign(n, {});
  c.npred.assign(n, 0);
  c.ready.assign(n, 0);
  c.prio.assign(n, 0);
  c.issue.assign(n, UINT64_MAX);
  const uint32_t L = m.def_use_latency;
  std::map<Reg, uint32_t> last_write;
  std::map<Reg, std::vector<uint32_t>> readers;
  std::vector<uint32_t> spad_loads;
  int64_t last_store = -1, last_privileged = -1;
  auto edge = [&](uint32_t from, uint32_t to, uint32_t lat) {
    c.succ[from].push_back({to, lat});
    ++c.npred[to];
  };
  for (uint32_t i = 0; i < n; ++i) {
    const Instr& in = c.body[i];
    for (unsigned k = 0; k < source_count(in.op); ++k) {
      const Reg r = in.rs[k];
      if (auto it = last_write.find(r); it != last_write.end())
        edge(it->second, i, L);
    }
    if (has_dest(in.op)) {
      if (auto it = last_write.find(in.rd); it != last_write.end())
        edge(it->second, i, 1);
      for (uint32_t r : readers[in.rd])
        if (r != i)
          edge(r, i, 1);
    }
    for (unsigned k = 0; k < source_count(in.op); ++k)
      readers[in.rs[k]].push_back(i);
    if (has_dest(in.op)) {
      last_write[in.rd] = i;
      readers[in.rd].clear();
    }
    if (in.op == Op::Lld) {
      if (last_store >= 0)
        edge(static_cast<uint32_t>(last_store), i, 1);
      spad_loads.push_back(i);
    } else if (in.op == Op::Lst) {
      if (last_store >= 0)
        edge(static_cast<uint32_t>(last_store), i, 1);
      for (uint32_t l : spad_loads)
        edge(l, i, 1);
      spad_loads.clear();
      last_store = i;
    }
    if (is_privileged(in.op)) {
      if (last_privileged >= 0)
        edge(static_cast<uint32_t>(last_privileged), i, 1);
      last_privileged = i;
    }
  }
  for (uint32_t i = static_cast<uint32_t>(n); i-- > 0;) {
    const Instr& in = c.body[i];
    uint64_t base = 1;
    if (has_dest(in.op))
      base = L;
    else if (in.op == Op::Send)
      base = 1 + uint64_t(hop_count(m.grid, c.coord, coords.at(in.aux))) * m.hop_latency;
    uint64_t p = base;
    for (const Edge& e : c.succ[i])
      p = std::max(p, e.latency + c.prio[e.to]);
    c.prio[i] = p;
  }
  for (uint32_t i = 0; i < n; ++i)
    if (c.npred[i] == 0)
      c.pending.emplace(0, i);
}

class Reservations {
public:
  bool free(const MessageRoute& r, uint32_t hl, uint32_t dest) const {
    for (size_t i = 0; i < r.links.size(); ++i)
      for (uint32_t k = 0; k < hl; ++k)
        if (links_.count(key(r.links[i].id(), r.depart + i * hl + k)))
          return false;
    return !eject_.count(key(dest, r.arrival));
  }
  void take(const MessageRoute& r, uint32_t hl, uint32_t dest) {
    for (size_t i = 0; i < r.links.size(); ++i)
      for (uint32_t k = 0; k < hl; ++k)
        links_.insert(key(r.links[i].id(), r.depart + i * hl + k));
    eject_.insert(key(dest, r.arrival));
  }

private:
  static uint64_t key(uint32_t a, uint64_t cycle) { return (uint64_t(a) << 40) | cycle; }
  std::unordered_set<uint64_t> links_;
  std::unordered_set<uint64_t> eject_;
};

ScheduleMeta build_meta(const Program& p, const std::vector<uint32_t>& core_of) {
  ScheduleMeta meta;
  meta.name = p.name;
  meta.global_words = p.global_words;
  meta.exceptions = p.exceptions;
  std::vector<StateLocation> loc(p.states.size());
  for (uint32_t s = 0; s < p.states.size(); ++s) {
    loc[s].constant = true;
    loc[s].value = p.states[s].init;
  }
  for (uint32_t pi = 0; pi < p.processes.size(); ++pi) {
    const Process& proc = p.processes[pi];
    std::set<uint32_t> owned;
    for (const Binding& b : proc.owned)
      owned.insert(b.state);
    for (const auto& [s, r] : proc.state_regs)
      if (owned.count(s))
        loc[s] = {false, 0, core_of[pi], static_cast<uint16_t>(r)};
  }
  for (const RtlRegister& r : p.registers) {
    RegisterSymbol sym{r.name, r.width, {}};
    for (unsigned j = 0; j < r.words(); ++j)
      sym.words.push_back(loc[r.first_state + j]);
    meta.registers.push_back(std::move(sym));
  }
  for (uint32_t m = 0; m < p.memories.size(); ++m) {
    const Memory& mem = p.memories[m];
    MemorySymbol sym{mem.name, mem.width, mem.depth, mem.kind == MemKind::Global, 0, 0, mem.global_base};
    if (sym.global) {
      for (uint64_t i = 0; i < mem.init.size(); ++i)
        if (mem.init[i])
          meta.global_init.emplace_back(mem.global_base + i, mem.init[i]);
      meta.memories.push_back(sym);
      continue;
    }
    for (uint32_t pi = 0; pi < p.processes.size(); ++pi)
      for (const auto& [region, base] : p.processes[pi].memory_base)
        if (region == m) {
          sym.core = core_of[pi];
          sym.base = base;
          meta.memories.push_back(sym);
        }
  }
  return meta;
}

} // namespace

Schedule schedule(const Program& p, const Placement& pl, const MachineModel& m) {
  if (pl.coord.size() != p.processes.size())
    throw CompileError("schedule", "placement does not cover every process");
  if (m.def_use_latency == 0 || m.hop_latency == 0)
    throw CompileError("schedule", "latencies must be positive");
  std::vector<uint32_t> core_of(p.processes.size());
  std::vector<uint32_t> owner(m.grid.cores(), kNoCore);
  for (uint32_t i = 0; i < p.processes.size(); ++i) {
    const Process& proc = p.processes[i];
    const Coord c = pl.coord[i];
    if (!proc.allocated)
      throw CompileError("schedule", "process " + std::to_string(i) + " is not register allocated");
    if (c.x >= m.grid.x || c.y >= m.grid.y)
      throw CompileError("schedule", "process " + std::to_string(i) + " placed outside the grid");
    core_of[i] = m.grid.index(c);
    if (owner[core_of[i]] != kNoCore)
      throw CompileError("schedule", "two processes placed on one core");
    owner[core_of[i]] = i;
    if (proc.privileged() && !(c == m.privileged))
      throw CompileError("schedule", "privileged process is not on the privileged core");
  }

  std::vector<CoreSched> cores;
  std::vector<uint32_t> slot_of_core(m.grid.cores(), kNoCore);
  for (uint32_t idx = 0; idx < m.grid.cores(); ++idx) {
    if (owner[idx] == kNoCore)
      continue;
    CoreSched c;
    c.process = owner[idx];
    c.core = idx;
    c.coord = m.grid.coord(idx);
    for (const Instr& in : p.processes[c.process].body)
      if (in.op != Op::Nop)
        c.body.push_back(in);
    slot_of_core[idx] = static_cast<uint32_t>(cores.size());
    cores.push_back(std::move(c));
  }
  for (CoreSched& c : cores) {
    for (Instr& in : c.body)
      if (in.op == Op::Send && in.aux >= p.processes.size())
        throw CompileError("schedule", "SEND to an unknown process");
    build_dependencies(c, m, pl.coord);
  }

  Reservations res;
  size_t remaining = 0;
  for (const CoreSched& c : cores)
    remaining += c.body.size();
  for (uint64_t t = 0; remaining > 0; ++t) {
    for (CoreSched& c : cores) {
      if (c.issued == c.body.size())
        continue;
      while (!c.pending.empty() && c.pending.top().first <= t) {
        const uint32_t i = c.pending.top().second;
        c.pending.pop();
        c.released.emplace(UINT64_MAX - c.prio[i], i);
      }
      uint32_t pick = UINT32_MAX;
      for (auto it = c.released.begin(); it != c.released.end(); ++it) {
        const Instr& in = c.body[it->second];
        if (in.op == Op::Send) {
          const Coord dst = pl.coord[in.aux];
          if (dst == c.coord)
            throw CompileError("schedule", "SEND to the sending core");
          MessageRoute r = route(c.coord, dst, t, m);
          if (!res.free(r, m.hop_latency, m.grid.index(dst)))
            continue;
          res.take(r, m.hop_latency, m.grid.index(dst));
          cores[slot_of_core[m.grid.index(dst)]].arrivals.emplace_back(r.arrival, in.remote);
        }
        pick = it->second;
        c.released.erase(it);
        break;
      }
      if (pick == UINT32_MAX) {
        c.slots.push_back(Instr{});
        continue;
      }
      c.issue[pick] = t;
      Instr out = machine_form(c.body[pick]);
      if (out.op == Op::Send)
        out.aux = m.grid.index(pl.coord[out.aux]);
      c.slots.push_back(out);
      ++c.issued;
      --remaining;
      for (const Edge& e : c.succ[pick]) {
        c.ready[e.to] = std::max(c.ready[e.to], t + e.latency);
        if (--c.npred[e.to] == 0)
          c.pending.emplace(c.ready[e.to], e.to);
      }
    }
  }

  Schedule s;
  s.grid = m.grid;
  s.privileged = m.privileged;
  s.def_use_latency = m.def_use_latency;
  s.hop_latency = m.hop_latency;
  uint64_t V = 1;
  for (CoreSched& c : cores) {
    std::sort(c.arrivals.begin(), c.arrivals.end());
    uint64_t n = c.slots.size();
    for (const auto& a : c.arrivals)
      n = std::max(n, a.first);
    if (n > m.imem_capacity)
      throw CompileError("schedule", "process " + std::to_string(c.process) + " needs " + std::to_string(n) +
                                         " instruction slots, more than the instruction memory holds");
    c.slots.resize(n);
    const uint64_t E = c.arrivals.size();
    V = std::max(V, n + E);
    // Writes of the last vcycle must land before the first read of the next.
    std::map<Reg, uint64_t> last_write, first_read;
    for (uint64_t t = 0; t < n; ++t) {
      const Instr& in = c.slots[t];
      for (unsigned k = 0; k < source_count(in.op); ++k)
        first_read.emplace(in.rs[k], t);
      if (has_dest(in.op))
        last_write[in.rd] = t;
    }
    for (uint64_t j = 0; j < E; ++j)
      last_write[c.arrivals[j].second] = n + j;
    for (const auto& [r, w] : last_write)
      if (auto it = first_read.find(r); it != first_read.end() && w + m.def_use_latency > it->second)
        V = std::max(V, w + m.def_use_latency - it->second);
  }
  s.vcycle_length = static_cast<uint32_t>(V);
  for (CoreSched& c : cores) {
    const Process& proc = p.processes[c.process];
    CoreProgram cp;
    cp.coord = c.coord;
    cp.slots = std::move(c.slots);
    cp.functions = proc.functions;
    for (const auto& [r, v] : proc.reg_init)
      cp.reg_init.emplace_back(static_cast<uint16_t>(r), v);
    cp.scratch_init = proc.scratch_init;
    cp.epilogue = static_cast<uint32_t>(c.arrivals.size());
    cp.sleep = static_cast<uint32_t>(V - cp.slots.size() - cp.epilogue);
    s.cores.push_back(std::move(cp));
  }
  s.meta = build_meta(p, core_of);
  return s;
}

Vcpl vcpl(const Schedule& s) {
  Vcpl v;
  v.length = s.vcycle_length;
  for (const CoreProgram& c : s.cores) {
    CoreBreakdown b;
    b.coord = c.coord;
    for (const Instr& in : c.slots) {
      if (in.op == Op::Nop)
        ++b.nop;
      else if (in.op == Op::Send)
        ++b.send;
      else
        ++b.compute;
    }
    b.epilogue = c.epilogue;
    b.sleep = c.sleep;
    v.cores.push_back(b);
  }
  return v;
}

void assign_countdowns(Schedule& s, const std::vector<uint64_t>& segment_beats) {
  if (segment_beats.size() != s.cores.size())
    throw Error(ErrorKind::Compile, "segment count does not match the core count");
  std::vector<uint64_t> T(s.cores.size());
  uint64_t streamed = 0, latest = 0;
  for (size_t k = 0; k < s.cores.size(); ++k) {
    streamed += segment_beats[k];
    T[k] = streamed + uint64_t(hop_count(s.grid, s.privileged, s.cores[k].coord)) * s.hop_latency;
    latest = std::max(latest, T[k]);
  }
  for (size_t k = 0; k < s.cores.size(); ++k)
    s.cores[k].countdown = static_cast<uint32_t>(latest + 1 - T[k]);
}

} // namespace mnt
