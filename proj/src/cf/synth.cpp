#include "cf/synth.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "opt/passes.hpp"
#include "support/error.hpp"

namespace mnt {

using namespace low;

namespace {

constexpr uint32_t kExit = UINT32_MAX;

/// Def-use facts over the logic subgraph of one process.
struct LogicGraph {
  std::unordered_map<Reg, uint32_t> def;        // reg -> defining body index
  std::unordered_map<Reg, uint16_t> constant;   // SET-defined regs
  std::vector<std::vector<uint32_t>> users;     // body index -> logic users
  std::vector<bool> external;                   // used outside the logic subgraph
  std::vector<bool> logic;

  explicit LogicGraph(const Process& p) {
    const size_t n = p.body.size();
    users.assign(n, {});
    external.assign(n, false);
    logic.assign(n, false);
    for (uint32_t i = 0; i < n; ++i) {
      const Instr& in = p.body[i];
      if (has_dest(in.op))
        def[in.rd] = i;
      if (in.op == Op::Set)
        constant[in.rd] = in.imm;
      logic[i] = is_logic(in.op);
    }
    for (uint32_t i = 0; i < n; ++i) {
      const Instr& in = p.body[i];
      std::set<uint32_t> seen;
      for (unsigned k = 0; k < source_count(in.op); ++k) {
        auto it = def.find(in.rs[k]);
        if (it == def.end() || !logic[it->second])
          continue;
        if (logic[i]) {
          if (seen.insert(it->second).second)
            users[it->second].push_back(i);
        } else {
          external[it->second] = true;
        }
      }
    }
    for (const Binding& b : p.owned) {
      auto it = def.find(b.next);
      if (it != def.end())
        external[it->second] = true;
    }
  }

  /// Logic instruction defining `r`, or -1.
  int64_t logic_def(Reg r) const {
    auto it = def.find(r);
    return it != def.end() && logic[it->second] ? static_cast<int64_t>(it->second) : -1;
  }
};

bool in_sorted(const std::vector<uint32_t>& v, uint32_t x) { return std::binary_search(v.begin(), v.end(), x); }

/// Leaves of a node set, in operand discovery order (root first, then ascending).
std::vector<Reg> leaves_of(const Process& p, const LogicGraph& g, const std::vector<uint32_t>& nodes, uint32_t root) {
  std::vector<Reg> leaves;
  auto visit = [&](uint32_t i) {
    const Instr& in = p.body[i];
    for (unsigned k = 0; k < 2; ++k) {
      Reg r = in.rs[k];
      int64_t d = g.logic_def(r);
      if (d >= 0 && in_sorted(nodes, static_cast<uint32_t>(d)))
        continue;
      if (g.constant.count(r))
        continue;
      if (std::find(leaves.begin(), leaves.end(), r) == leaves.end())
        leaves.push_back(r);
    }
  };
  visit(root);
  for (uint32_t i : nodes)
    if (i != root)
      visit(i);
  return leaves;
}

CustomFunction evaluate(const Process& p, const LogicGraph& g, const std::vector<uint32_t>& nodes, uint32_t root,
                        const std::vector<Reg>& leaves) {
  std::array<uint16_t, 16> out{};
  std::unordered_map<Reg, uint16_t> val;
  for (unsigned k = 0; k < 16; ++k) {
    val.clear();
    for (size_t j = 0; j < leaves.size(); ++j)
      val[leaves[j]] = (k >> j) & 1 ? 0xFFFF : 0;
    auto get = [&](Reg r) -> uint16_t {
      auto it = val.find(r);
      if (it != val.end())
        return it->second;
      return g.constant.at(r);
    };
    for (uint32_t i : nodes) {
      const Instr& in = p.body[i];
      uint16_t a = get(in.rs[0]), b = get(in.rs[1]);
      val[in.rd] = in.op == Op::And ? (a & b) : in.op == Op::Or ? (a | b) : (a ^ b);
    }
    out[k] = val.at(p.body[root].rd);
  }
  return table_of(out);
}

std::array<uint8_t, 4> identity_perm() { return {0, 1, 2, 3}; }

CustomFunction permute(const CustomFunction& f, const std::array<uint8_t, 4>& perm) {
  CustomFunction r;
  for (unsigned kn = 0; kn < 16; ++kn) {
    unsigned ko = 0;
    for (unsigned j = 0; j < 4; ++j)
      if ((kn >> j) & 1)
        ko |= 1u << perm[j];
    for (unsigned i = 0; i < 16; ++i)
      if ((f.table[i] >> ko) & 1)
        r.table[i] |= static_cast<uint16_t>(1u << kn);
  }
  return r;
}

/// Post-dominator forest of logic nodes; parent kExit for roots.
struct PdomForest {
  std::vector<uint32_t> parent;
  std::vector<uint32_t> depth;
  std::vector<std::vector<uint32_t>> children;
  std::vector<uint32_t> roots;

  PdomForest(const Process& p, const LogicGraph& g) {
    const size_t n = p.body.size();
    parent.assign(n, kExit);
    depth.assign(n, 0);
    children.assign(n, {});
    for (size_t ii = n; ii-- > 0;) {
      const uint32_t i = static_cast<uint32_t>(ii);
      if (!g.logic[i])
        continue;
      uint32_t d = kExit;
      if (!g.external[i] && !g.users[i].empty()) {
        d = g.users[i][0];
        for (size_t u = 1; u < g.users[i].size() && d != kExit; ++u)
          d = lca(d, g.users[i][u]);
      }
      parent[i] = d;
      depth[i] = d == kExit ? 1 : depth[d] + 1;
      if (d == kExit)
        roots.push_back(i);
      else
        children[d].push_back(i);
    }
  }

  uint32_t lca(uint32_t a, uint32_t b) const {
    while (a != b) {
      if (a == kExit || b == kExit)
        return kExit;
      if (depth[a] >= depth[b])
        a = parent[a];
      else
        b = parent[b];
    }
    return a;
  }
};

} // namespace

CustomFunction table_of(const std::array<uint16_t, 16>& outputs) {
  CustomFunction f;
  for (unsigned k = 0; k < 16; ++k)
    for (unsigned i = 0; i < 16; ++i)
      if ((outputs[k] >> i) & 1)
        f.table[i] |= static_cast<uint16_t>(1u << k);
  return f;
}

CustomFunction canonicalize(const CustomFunction& f, std::array<uint8_t, 4>* perm) {
  std::array<uint8_t, 4> p = identity_perm(), best_perm = p;
  CustomFunction best = f;
  do {
    CustomFunction c = permute(f, p);
    if (c < best) {
      best = c;
      best_perm = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  if (perm)
    *perm = best_perm;
  return best;
}

std::vector<Cone> extract_cones(const Process& p, const SynthOptions& opt) {
  LogicGraph g(p);
  std::vector<Cone> cones;
  for (uint32_t root = 0; root < p.body.size(); ++root) {
    if (!g.logic[root])
      continue;
    std::set<std::vector<uint32_t>> visited;
    std::vector<std::vector<uint32_t>> stack{{root}};
    visited.insert({root});
    while (!stack.empty()) {
      std::vector<uint32_t> nodes = std::move(stack.back());
      stack.pop_back();
      auto leaves = leaves_of(p, g, nodes, root);
      if (!leaves.empty() && leaves.size() <= 4) {
        Cone c;
        c.root = root;
        c.nodes = nodes;
        c.leaves = leaves;
        c.table = evaluate(p, g, nodes, root, leaves);
        std::array<uint8_t, 4> perm;
        c.canonical = canonicalize(c.table, &perm);
        for (unsigned j = 0; j < 4; ++j)
          c.slots[j] = perm[j] < leaves.size() ? leaves[perm[j]] : leaves[0];
        cones.push_back(std::move(c));
      }
      // Expand any operand whose every use lies inside the cone.
      for (uint32_t i : nodes) {
        const Instr& in = p.body[i];
        for (unsigned k = 0; k < 2; ++k) {
          int64_t d = g.logic_def(in.rs[k]);
          if (d < 0 || in_sorted(nodes, static_cast<uint32_t>(d)) || g.external[d])
            continue;
          const auto& us = g.users[d];
          if (!std::all_of(us.begin(), us.end(), [&](uint32_t u) { return in_sorted(nodes, u); }))
            continue;
          std::vector<uint32_t> next = nodes;
          next.insert(std::upper_bound(next.begin(), next.end(), static_cast<uint32_t>(d)), static_cast<uint32_t>(d));
          if (visited.size() >= opt.max_states_per_root || !visited.insert(next).second)
            continue;
          stack.push_back(std::move(next));
        }
      }
    }
  }
  return cones;
}

std::vector<uint32_t> group_equivalent(const std::vector<Cone>& cones, uint32_t* class_count) {
  std::map<CustomFunction, uint32_t> ids;
  std::vector<uint32_t> cls;
  for (const Cone& c : cones) {
    auto [it, inserted] = ids.emplace(c.canonical, static_cast<uint32_t>(ids.size()));
    cls.push_back(it->second);
  }
  if (class_count)
    *class_count = static_cast<uint32_t>(ids.size());
  return cls;
}

namespace {

/// Exact maximum-savings disjoint selection over the post-dominator forest
/// for a given set of allowed classes.
class Selector {
public:
  Selector(const Process& p, const std::vector<Cone>& cones, const std::vector<uint32_t>& classes)
      : g_(p), forest_(p, g_), cones_(cones), classes_(classes), by_root_(p.body.size()) {
    for (uint32_t c = 0; c < cones.size(); ++c)
      if (cones[c].savings() >= 1)
        by_root_[cones[c].root].push_back(c);
    // Children before parents: body order reversed gives users before definitions.
    for (size_t i = 0; i < p.body.size(); ++i)
      if (g_.logic[i])
        order_.push_back(static_cast<uint32_t>(i));
  }

  struct Result {
    uint64_t value = 0;
    std::vector<uint32_t> chosen;
  };

  Result solve(const std::vector<bool>& allowed) {
    const size_t n = forest_.parent.size();
    f_.assign(n, 0);
    pick_.assign(n, UINT32_MAX);
    // Ascending body order visits definitions before users; pdom children are
    // always defined before their parent.
    for (uint32_t v : order_) {
      uint64_t skip = 0;
      for (uint32_t c : forest_.children[v])
        skip += f_[c];
      uint64_t best = skip;
      uint32_t pick = UINT32_MAX;
      for (uint32_t ci : by_root_[v]) {
        if (!allowed[classes_[ci]])
          continue;
        const Cone& c = cones_[ci];
        uint64_t val = c.savings();
        for (uint32_t w : c.nodes)
          for (uint32_t ch : forest_.children[w])
            if (!in_sorted(c.nodes, ch))
              val += f_[ch];
        if (val > best) {
          best = val;
          pick = ci;
        }
      }
      f_[v] = best;
      pick_[v] = pick;
    }
    Result r;
    std::vector<uint32_t> work(forest_.roots.begin(), forest_.roots.end());
    for (uint32_t v : forest_.roots)
      r.value += f_[v];
    while (!work.empty()) {
      uint32_t v = work.back();
      work.pop_back();
      if (pick_[v] == UINT32_MAX) {
        for (uint32_t c : forest_.children[v])
          work.push_back(c);
        continue;
      }
      const Cone& c = cones_[pick_[v]];
      r.chosen.push_back(pick_[v]);
      for (uint32_t w : c.nodes)
        for (uint32_t ch : forest_.children[w])
          if (!in_sorted(c.nodes, ch))
            work.push_back(ch);
    }
    std::sort(r.chosen.begin(), r.chosen.end());
    return r;
  }

private:
  LogicGraph g_;
  PdomForest forest_;
  const std::vector<Cone>& cones_;
  const std::vector<uint32_t>& classes_;
  std::vector<std::vector<uint32_t>> by_root_;
  std::vector<uint32_t> order_;
  std::vector<uint64_t> f_;
  std::vector<uint32_t> pick_;
};

} // namespace

std::vector<uint32_t> select_cones(const Process& p, const std::vector<Cone>& cones,
                                   const std::vector<uint32_t>& classes, const SynthOptions& opt, bool* exact) {
  if (exact)
    *exact = true;
  if (cones.empty())
    return {};
  const uint32_t nclass = *std::max_element(classes.begin(), classes.end()) + 1;
  Selector sel(p, cones, classes);
  auto used = [&](const Selector::Result& r) {
    std::set<uint32_t> u;
    for (uint32_t c : r.chosen)
      u.insert(classes[c]);
    return u;
  };

  enum class State : uint8_t { Open, Committed, Excluded };
  Selector::Result incumbent;
  uint32_t explored = 0;
  bool capped = false;

  // Depth-first branch and bound: commit or exclude one over-budget class at a time.
  auto search = [&](auto& self, std::vector<State>& st, uint32_t committed) -> void {
    if (explored++ >= opt.max_search_nodes) {
      capped = true;
      return;
    }
    std::vector<bool> allowed(nclass);
    for (uint32_t c = 0; c < nclass; ++c)
      allowed[c] = st[c] != State::Excluded && (committed < opt.budget || st[c] == State::Committed);
    auto r = sel.solve(allowed);
    if (r.value <= incumbent.value && !incumbent.chosen.empty())
      return;
    auto u = used(r);
    if (u.size() <= opt.budget) {
      incumbent = std::move(r);
      return;
    }
    // Branch on the open class contributing the most savings.
    std::map<uint32_t, uint64_t> contrib;
    for (uint32_t ci : r.chosen)
      if (st[classes[ci]] == State::Open)
        contrib[classes[ci]] += cones[ci].savings();
    uint32_t pick = contrib.begin()->first;
    for (const auto& [c, v] : contrib)
      if (v > contrib[pick])
        pick = c;
    st[pick] = State::Committed;
    self(self, st, committed + 1);
    st[pick] = State::Excluded;
    self(self, st, committed);
    st[pick] = State::Open;
  };
  std::vector<State> st(nclass, State::Open);
  if (opt.budget > 0)
    search(search, st, 0);
  if (exact)
    *exact = !capped;
  return incumbent.chosen;
}

void rewrite(Process& p, const std::vector<Cone>& cones, const std::vector<uint32_t>& classes,
             const std::vector<uint32_t>& chosen) {
  std::vector<uint32_t> by_root(p.body.size(), UINT32_MAX);
  std::vector<bool> drop(p.body.size(), false);
  for (uint32_t ci : chosen) {
    by_root[cones[ci].root] = ci;
    for (uint32_t n : cones[ci].nodes)
      if (n != cones[ci].root)
        drop[n] = true;
  }
  std::map<uint32_t, uint32_t> fid_of_class;
  std::vector<Instr> out;
  for (uint32_t i = 0; i < p.body.size(); ++i) {
    if (drop[i])
      continue;
    if (by_root[i] == UINT32_MAX) {
      out.push_back(p.body[i]);
      continue;
    }
    const Cone& c = cones[by_root[i]];
    auto [it, inserted] = fid_of_class.emplace(classes[by_root[i]], static_cast<uint32_t>(p.functions.size()));
    if (inserted)
      p.functions.push_back(c.canonical);
    Instr in;
    in.op = Op::Cust;
    in.rd = p.body[i].rd;
    for (unsigned j = 0; j < 4; ++j)
      in.rs[j] = c.slots[j];
    in.aux = it->second;
    in.origin = p.body[i].origin;
    out.push_back(in);
  }
  if (p.functions.size() > kMaxFunctions)
    throw CompileError("cf_synth", "more than " + std::to_string(kMaxFunctions) + " custom functions");
  p.body = std::move(out);
}

SynthStats synthesize_functions(Process& p, const SynthOptions& opt) {
  SynthStats s;
  if (!p.functions.empty())
    throw CompileError("cf_synth", "process already has custom functions");
  auto cones = extract_cones(p, opt);
  uint32_t nclass = 0;
  auto classes = group_equivalent(cones, &nclass);
  bool exact = true;
  auto chosen = select_cones(p, cones, classes, opt, &exact);
  s.cones = cones.size();
  s.classes = nclass;
  s.selected = chosen.size();
  s.exact = exact;
  for (uint32_t c : chosen)
    s.saved += cones[c].savings();
  rewrite(p, cones, classes, chosen);
  s.functions = p.functions.size();
  // Constants absorbed into tables may now be dead.
  dead_code_elim(p);
  return s;
}

SynthStats synthesize_functions(Program& p, const SynthOptions& opt) {
  SynthStats total;
  for (Process& proc : p.processes) {
    auto s = synthesize_functions(proc, opt);
    total.cones += s.cones;
    total.classes += s.classes;
    total.selected += s.selected;
    total.functions += s.functions;
    total.saved += s.saved;
    total.exact = total.exact && s.exact;
  }
  return total;
}

} // namespace mnt
