#include "par/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "opt/passes.hpp"
#include "support/error.hpp"

namespace mnt {

using namespace low;

namespace {

constexpr uint32_t kUnset = UINT32_MAX;

bool counted(Op op) { return op != Op::Nop && op != Op::Set; }

/// Per-process facts needed by cost and merge decisions.
struct ProcInfo {
  std::vector<uint32_t> origins; // sorted origins of counted instructions
  std::vector<uint32_t> owns;    // sorted states
  std::vector<uint32_t> reads;   // sorted states whose current value is used
  std::vector<uint32_t> regions; // sorted local memory regions
  bool privileged = false;
};

class Analysis {
public:
  explicit Analysis(const Program& p) : p_(p), state_of_(p.next_vreg, kUnset) {
    for (uint32_t s = 0; s < p.states.size(); ++s)
      if (p.states[s].current < state_of_.size())
        state_of_[p.states[s].current] = s;
    info_.resize(p.processes.size());
    readers_.assign(p.states.size(), {});
    for (uint32_t i = 0; i < p.processes.size(); ++i) {
      info_[i] = analyze(p.processes[i]);
      for (uint32_t s : info_[i].reads)
        readers_[s].push_back(i);
    }
    owner_.assign(p.states.size(), kUnset);
    for (uint32_t i = 0; i < p.processes.size(); ++i)
      for (uint32_t s : info_[i].owns)
        owner_[s] = i;
  }

  const ProcInfo& info(uint32_t i) const { return info_[i]; }
  const std::vector<uint32_t>& readers(uint32_t s) const { return readers_[s]; }
  uint32_t owner(uint32_t s) const { return owner_[s]; }

  uint64_t outgoing(uint32_t i) const {
    uint64_t n = 0;
    for (uint32_t s : info_[i].owns)
      for (uint32_t q : readers_[s])
        n += q != i;
    return n;
  }

  uint64_t cost(uint32_t i) const {
    if (p_.sends_materialized)
      return info_[i].origins.size();
    return info_[i].origins.size() + outgoing(i);
  }

  /// Cost of a merged a+b before CSE, which can only lower it.
  uint64_t merged_cost(uint32_t a, uint32_t b) const {
    uint64_t n = union_size(info_[a].origins, info_[b].origins);
    for (uint32_t x : {a, b})
      for (uint32_t s : info_[x].owns)
        for (uint32_t q : readers_[s])
          n += q != a && q != b;
    return n;
  }

  uint64_t merged_local_words(uint32_t a, uint32_t b) const {
    std::vector<uint32_t> r;
    std::set_union(info_[a].regions.begin(), info_[a].regions.end(), info_[b].regions.begin(),
                   info_[b].regions.end(), std::back_inserter(r));
    uint64_t words = 0;
    for (uint32_t m : r)
      words += p_.memories[m].size_words();
    return words;
  }

  uint64_t merged_instructions(uint32_t a, uint32_t b) const {
    return union_size(info_[a].origins, info_[b].origins);
  }

  /// Processes that exchange at least one word with i, ascending.
  std::vector<uint32_t> neighbors(uint32_t i) const {
    std::set<uint32_t> n;
    for (uint32_t s : info_[i].owns)
      for (uint32_t q : readers_[s])
        if (q != i)
          n.insert(q);
    for (uint32_t s : info_[i].reads)
      if (owner_[s] != kUnset && owner_[s] != i)
        n.insert(owner_[s]);
    return {n.begin(), n.end()};
  }

private:
  static uint64_t union_size(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    uint64_t n = 0;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i] < b[j]))
        ++i;
      else if (i == a.size() || b[j] < a[i])
        ++j;
      else
        ++i, ++j;
      ++n;
    }
    return n;
  }

  ProcInfo analyze(const Process& proc) const {
    ProcInfo r;
    std::set<uint32_t> reads, regions;
    auto use = [&](Reg v) {
      if (v < state_of_.size() && state_of_[v] != kUnset)
        reads.insert(state_of_[v]);
    };
    for (const Instr& in : proc.body) {
      if (counted(in.op))
        r.origins.push_back(in.origin);
      for (unsigned k = 0; k < source_count(in.op); ++k)
        use(in.rs[k]);
      if ((in.op == Op::Lld || in.op == Op::Lst) && in.aux != kNoRegion)
        regions.insert(in.aux);
      r.privileged = r.privileged || is_privileged(in.op);
    }
    for (const Binding& b : proc.owned) {
      use(b.next);
      r.owns.push_back(b.state);
    }
    std::sort(r.origins.begin(), r.origins.end());
    r.origins.erase(std::unique(r.origins.begin(), r.origins.end()), r.origins.end());
    std::sort(r.owns.begin(), r.owns.end());
    r.reads.assign(reads.begin(), reads.end());
    r.regions.assign(regions.begin(), regions.end());
    return r;
  }

  const Program& p_;
  std::vector<uint32_t> state_of_;
  std::vector<ProcInfo> info_;
  std::vector<std::vector<uint32_t>> readers_;
  std::vector<uint32_t> owner_;
};

struct UnionFind {
  std::vector<uint32_t> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  uint32_t find(uint32_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(uint32_t a, uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b)
      parent[std::max(a, b)] = std::min(a, b);
  }
};

Process merge_bodies(const std::vector<const Process*>& parts) {
  Process m;
  m.id = parts.front()->id;
  std::map<uint32_t, const Instr*> by_origin;
  for (const Process* p : parts) {
    if (!p->functions.empty())
      throw CompileError("merge", "cannot merge processes after custom function synthesis");
    for (const Instr& in : p->body)
      by_origin.emplace(in.origin, &in);
    m.owned.insert(m.owned.end(), p->owned.begin(), p->owned.end());
  }
  for (const auto& [o, in] : by_origin)
    m.body.push_back(*in);
  std::sort(m.owned.begin(), m.owned.end(), [](const Binding& a, const Binding& b) { return a.state < b.state; });
  OptimizerOptions opt;
  opt.const_fold = false;
  optimize_process(m, opt);
  return m;
}

void renumber(Program& p) {
  for (uint32_t i = 0; i < p.processes.size(); ++i)
    p.processes[i].id = i;
}

} // namespace

uint64_t ProcessGraph::total_words() const {
  uint64_t n = 0;
  for (const auto& e : edges)
    n += e.words;
  return n;
}

uint64_t ProcessGraph::max_cost() const { return cost.empty() ? 0 : *std::max_element(cost.begin(), cost.end()); }

uint64_t estimate_cost(const Program& p, uint32_t process) { return Analysis(p).cost(process); }

ProcessGraph process_graph(const Program& p) {
  Analysis a(p);
  ProcessGraph g;
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> words;
  for (uint32_t i = 0; i < p.processes.size(); ++i) {
    g.cost.push_back(a.cost(i));
    for (uint32_t s : a.info(i).owns)
      for (uint32_t q : a.readers(s))
        if (q != i)
          ++words[{i, q}];
  }
  for (const auto& [k, w] : words)
    g.edges.push_back({k.first, k.second, w});
  return g;
}

void split(Program& p) {
  if (p.processes.size() != 1)
    throw CompileError("split", "expected a single monolithic process");
  const Process mono = p.processes[0];
  std::unordered_map<Reg, uint32_t> def;
  for (uint32_t i = 0; i < mono.body.size(); ++i)
    if (has_dest(mono.body[i].op))
      def[mono.body[i].rd] = i;

  // Sink groups: all words of one RTL register, or one side-effecting instruction.
  struct Group {
    std::vector<Binding> owned;
    std::vector<uint32_t> roots; // side-effecting instruction indices
  };
  std::vector<Group> groups;
  std::map<uint32_t, uint32_t> group_of_reg;
  for (const Binding& b : mono.owned) {
    uint32_t reg = p.states[b.state].reg;
    auto [it, inserted] = group_of_reg.emplace(reg, static_cast<uint32_t>(groups.size()));
    if (inserted)
      groups.emplace_back();
    groups[it->second].owned.push_back(b);
  }
  for (uint32_t i = 0; i < mono.body.size(); ++i)
    if (has_side_effect(mono.body[i].op)) {
      groups.emplace_back();
      groups.back().roots.push_back(i);
    }
  if (groups.empty())
    return;

  std::vector<std::vector<uint32_t>> cones(groups.size());
  for (uint32_t g = 0; g < groups.size(); ++g) {
    std::vector<bool> seen(mono.body.size(), false);
    std::vector<uint32_t> work;
    auto visit = [&](Reg r) {
      auto it = def.find(r);
      if (it != def.end() && !seen[it->second]) {
        seen[it->second] = true;
        work.push_back(it->second);
      }
    };
    for (const Binding& b : groups[g].owned)
      visit(b.next);
    for (uint32_t i : groups[g].roots) {
      seen[i] = true;
      work.push_back(i);
    }
    while (!work.empty()) {
      uint32_t i = work.back();
      work.pop_back();
      cones[g].push_back(i);
      const Instr& in = mono.body[i];
      for (unsigned k = 0; k < source_count(in.op); ++k)
        visit(in.rs[k]);
    }
    std::sort(cones[g].begin(), cones[g].end());
  }

  UnionFind uf(groups.size());
  std::map<uint32_t, uint32_t> region_group;
  uint32_t privileged_group = kUnset;
  for (uint32_t g = 0; g < groups.size(); ++g)
    for (uint32_t i : cones[g]) {
      const Instr& in = mono.body[i];
      if ((in.op == Op::Lld || in.op == Op::Lst) && in.aux != kNoRegion) {
        auto [it, inserted] = region_group.emplace(in.aux, g);
        uf.unite(it->second, g);
      }
      if (is_privileged(in.op)) {
        if (privileged_group == kUnset)
          privileged_group = g;
        uf.unite(privileged_group, g);
      }
    }

  std::map<uint32_t, std::vector<uint32_t>> members;
  for (uint32_t g = 0; g < groups.size(); ++g)
    members[uf.find(g)].push_back(g);
  p.processes.clear();
  for (const auto& [root, gs] : members) {
    Process proc;
    std::set<uint32_t> instrs;
    for (uint32_t g : gs) {
      instrs.insert(cones[g].begin(), cones[g].end());
      proc.owned.insert(proc.owned.end(), groups[g].owned.begin(), groups[g].owned.end());
    }
    for (uint32_t i : instrs)
      proc.body.push_back(mono.body[i]);
    std::sort(proc.owned.begin(), proc.owned.end(),
              [](const Binding& a, const Binding& b) { return a.state < b.state; });
    p.processes.push_back(std::move(proc));
  }
  renumber(p);
}

void merge_group(Program& p, const std::vector<std::vector<uint32_t>>& groups) {
  if (p.sends_materialized)
    throw CompileError("merge", "processes already communicate through SENDs");
  std::vector<Process> out;
  for (const auto& g : groups) {
    if (g.empty())
      continue;
    std::vector<const Process*> parts;
    for (uint32_t i : g)
      parts.push_back(&p.processes.at(i));
    out.push_back(g.size() == 1 ? p.processes[g[0]] : merge_bodies(parts));
  }
  p.processes = std::move(out);
  renumber(p);
}

namespace {

void merge_pair(Program& p, uint32_t a, uint32_t b) {
  const uint32_t lo = std::min(a, b), hi = std::max(a, b);
  std::vector<std::vector<uint32_t>> groups;
  for (uint32_t i = 0; i < p.processes.size(); ++i) {
    if (i == lo)
      groups.push_back({lo, hi});
    else if (i != hi)
      groups.push_back({i});
  }
  merge_group(p, groups);
}

} // namespace

void merge_balanced(Program& p, uint32_t max_cores, const MergeOptions& opt) {
  if (max_cores == 0)
    throw CompileError("merge", "no cores available");
  for (;;) {
    const uint32_t n = static_cast<uint32_t>(p.processes.size());
    if (n <= 1)
      return;
    Analysis a(p);
    uint32_t s = 0;
    for (uint32_t i = 1; i < n; ++i)
      if (a.cost(i) < a.cost(s))
        s = i;
    auto feasible = [&](uint32_t c) {
      return a.merged_local_words(s, c) <= opt.scratchpad_words &&
             a.merged_instructions(s, c) <= opt.max_instructions;
    };
    std::vector<uint32_t> cands;
    for (uint32_t c : a.neighbors(s))
      if (feasible(c))
        cands.push_back(c);
    if (cands.empty())
      for (uint32_t c = 0; c < n; ++c)
        if (c != s && feasible(c))
          cands.push_back(c);
    if (cands.empty()) {
      if (n > max_cores)
        throw CompileError("merge", "cannot fit " + std::to_string(n) + " processes into " +
                                        std::to_string(max_cores) + " cores without exceeding core capacity");
      return;
    }
    // Least added cost first, then the smallest merged process.
    uint32_t best = cands[0];
    std::pair<int64_t, uint64_t> best_key{INT64_MAX, UINT64_MAX};
    for (uint32_t c : cands) {
      const uint64_t merged = a.merged_cost(s, c);
      const std::pair<int64_t, uint64_t> key{
          static_cast<int64_t>(merged) - static_cast<int64_t>(std::max(a.cost(s), a.cost(c))), merged};
      if (key < best_key) {
        best_key = key;
        best = c;
      }
    }
    if (n > max_cores) {
      merge_pair(p, s, best);
      continue;
    }
    // Enough cores already: merge only while the straggler gets shorter.
    Program trial = p;
    merge_pair(trial, s, best);
    if (process_graph(trial).max_cost() < process_graph(p).max_cost())
      p = std::move(trial);
    else
      return;
  }
}

std::vector<std::vector<uint32_t>> lpt_bins(const std::vector<uint64_t>& costs, uint32_t bins) {
  std::vector<uint32_t> order(costs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return costs[a] > costs[b]; });
  std::vector<std::vector<uint32_t>> out(bins);
  std::vector<uint64_t> load(bins, 0);
  for (uint32_t i : order) {
    uint32_t b = static_cast<uint32_t>(std::min_element(load.begin(), load.end()) - load.begin());
    out[b].push_back(i);
    load[b] += costs[i];
  }
  for (auto& b : out)
    std::sort(b.begin(), b.end());
  return out;
}

void merge_lpt(Program& p, uint32_t max_cores) {
  if (max_cores == 0)
    throw CompileError("merge", "no cores available");
  if (p.processes.size() <= max_cores)
    return;
  auto g = process_graph(p);
  auto bins = lpt_bins(g.cost, max_cores);
  std::sort(bins.begin(), bins.end(), [](const auto& a, const auto& b) {
    if (a.empty() || b.empty())
      return !a.empty() && b.empty();
    return a.front() < b.front();
  });
  merge_group(p, bins);
}

void materialize_sends(Program& p) {
  if (p.sends_materialized)
    return;
  Analysis a(p);
  for (uint32_t i = 0; i < p.processes.size(); ++i) {
    Process& proc = p.processes[i];
    for (const Binding& b : std::vector<Binding>(proc.owned)) {
      for (uint32_t q : a.readers(b.state)) {
        if (q == i)
          continue;
        Instr s;
        s.op = Op::Send;
        s.rs[0] = b.next;
        s.aux = q;
        s.remote = p.states[b.state].current;
        s.origin = p.next_origin++;
        proc.body.push_back(s);
      }
    }
  }
  p.sends_materialized = true;
}

uint64_t total_sends(const Program& p) {
  if (!p.sends_materialized)
    return process_graph(p).total_words();
  uint64_t n = 0;
  for (const auto& proc : p.processes)
    for (const auto& in : proc.body)
      n += in.op == Op::Send;
  return n;
}

Placement place_random(const Program& p, GridDims grid, Coord privileged, uint64_t seed) {
  const uint32_t n = static_cast<uint32_t>(p.processes.size());
  if (n > grid.cores())
    throw CompileError("place", std::to_string(n) + " processes do not fit a " + std::to_string(grid.x) + "x" +
                                    std::to_string(grid.y) + " grid");
  if (privileged.x >= grid.x || privileged.y >= grid.y)
    throw CompileError("place", "privileged core lies outside the grid");
  const int pp = p.privileged_process();
  std::vector<uint32_t> free;
  for (uint32_t i = 0; i < grid.cores(); ++i)
    if (pp < 0 || i != grid.index(privileged))
      free.push_back(i);
  std::mt19937_64 rng(seed);
  for (size_t i = free.size(); i > 1; --i)
    std::swap(free[i - 1], free[rng() % i]);
  Placement pl;
  pl.coord.resize(n);
  size_t next = 0;
  for (uint32_t i = 0; i < n; ++i)
    pl.coord[i] = static_cast<int>(i) == pp ? privileged : grid.coord(free[next++]);
  return pl;
}

} // namespace mnt
