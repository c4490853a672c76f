#include "opt/passes.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <unordered_set>

namespace mnt {

using namespace low;

namespace {

Reg resolve(const std::unordered_map<Reg, Reg>& map, Reg r) {
  for (auto it = map.find(r); it != map.end(); it = map.find(r))
    r = it->second;
  return r;
}

void rewrite_sources(Instr& in, const std::unordered_map<Reg, Reg>& map) {
  if (map.empty())
    return;
  for (unsigned k = 0; k < source_count(in.op); ++k)
    in.rs[k] = resolve(map, in.rs[k]);
}

std::unordered_set<Reg> carry_registers(const Process& p) {
  std::unordered_set<Reg> s;
  for (const Instr& in : p.body)
    if (in.op == Op::Addc)
      s.insert(in.rs[2]);
  return s;
}

bool is_pure_alu(Op op) {
  switch (op) {
  case Op::Add: case Op::Addc: case Op::Sub: case Op::And: case Op::Or: case Op::Xor:
  case Op::Sll: case Op::Srl: case Op::Sra: case Op::Seq: case Op::Sltu: case Op::Slts:
  case Op::Mux:
    return true;
  default:
    return false;
  }
}

Instr make_set(const Instr& in, uint16_t v) {
  Instr s;
  s.op = Op::Set;
  s.rd = in.rd;
  s.imm = v;
  s.origin = in.origin;
  return s;
}

} // namespace

void substitute(Process& p, const std::unordered_map<Reg, Reg>& map) {
  if (map.empty())
    return;
  for (Instr& in : p.body)
    rewrite_sources(in, map);
  for (Binding& b : p.owned)
    b.next = resolve(map, b.next);
}

namespace {

bool fold_once(Process& p) {
  const Process before = p;
  const auto carry = carry_registers(p);
  std::unordered_map<Reg, Word> known;
  std::unordered_map<Reg, Reg> alias;

  auto value = [&](Reg r) -> std::optional<Word> {
    auto it = known.find(r);
    if (it == known.end())
      return std::nullopt;
    return it->second;
  };

  for (Instr& in : p.body) {
    rewrite_sources(in, alias);
    if (in.op == Op::Set) {
      known[in.rd] = {in.imm, false};
      continue;
    }
    if (!is_pure_alu(in.op))
      continue;
    const unsigned n = source_count(in.op);
    std::array<std::optional<Word>, 3> v;
    bool all = true;
    for (unsigned k = 0; k < n; ++k) {
      v[k] = value(in.rs[k]);
      all = all && v[k].has_value();
    }
    const bool carry_use = carry.count(in.rd) != 0;
    if (all) {
      Word r = eval_alu(in.op, v[0].value_or(Word{}), v[1].value_or(Word{}), v[2].value_or(Word{}), in.imm);
      known[in.rd] = r;
      if (!r.overflow || !carry_use)
        in = make_set(in, r.value);
      continue;
    }

    // Partial simplification. Only ADD/ADDC write the overflow bit, so
    // replacing any other op with SET keeps the overflow bit intact.
    auto is = [&](unsigned k, uint16_t c) { return v[k] && v[k]->value == c; };
    const Reg a = in.rs[0], b = in.rs[1];
    std::optional<uint16_t> to_set;
    Reg same = kNoReg;
    switch (in.op) {
    case Op::And:
      if (is(0, 0) || is(1, 0)) to_set = 0;
      else if (is(1, 0xFFFF) || a == b) same = a;
      else if (is(0, 0xFFFF)) same = b;
      break;
    case Op::Or:
      if (is(0, 0xFFFF) || is(1, 0xFFFF)) to_set = 0xFFFF;
      else if (is(1, 0) || a == b) same = a;
      else if (is(0, 0)) same = b;
      break;
    case Op::Xor:
      if (a == b) to_set = 0;
      else if (is(1, 0)) same = a;
      else if (is(0, 0)) same = b;
      break;
    case Op::Add:
      if (is(1, 0)) same = a;
      else if (is(0, 0)) same = b;
      break;
    case Op::Sub:
      if (a == b) to_set = 0;
      else if (is(1, 0)) same = a;
      break;
    case Op::Sll:
    case Op::Srl:
      if (is(1, 0)) same = a;
      else if (v[1] && v[1]->value >= 16) to_set = 0;
      else if (is(0, 0)) to_set = 0;
      break;
    case Op::Sra:
      if (is(1, 0)) same = a;
      break;
    case Op::Seq:
      if (a == b) to_set = 1;
      break;
    case Op::Sltu:
    case Op::Slts:
      if (a == b) to_set = 0;
      break;
    case Op::Mux:
      if (v[0]) same = v[0]->value != 0 ? in.rs[1] : in.rs[2];
      else if (in.rs[1] == in.rs[2]) same = in.rs[1];
      break;
    default:
      break;
    }
    if (to_set) {
      known[in.rd] = {*to_set, false};
      in = make_set(in, *to_set);
    } else if (same != kNoReg && !carry_use) {
      alias[in.rd] = same;
      if (auto w = value(same))
        known[in.rd] = *w;
    }
  }
  substitute(p, alias);
  return !(p == before);
}

} // namespace

bool const_fold(Process& p) {
  // Folding an ADDC can release its carry producer, so repeat until stable.
  bool changed = false;
  while (fold_once(p))
    changed = true;
  return changed;
}

bool common_subexpr_elim(Process& p) {
  using Key = std::tuple<Op, std::array<Reg, 5>, uint16_t, uint32_t>;
  std::map<Key, Reg> table;
  std::unordered_map<Reg, Reg> alias;
  std::vector<Instr> out;
  out.reserve(p.body.size());
  bool changed = false;
  for (Instr in : p.body) {
    rewrite_sources(in, alias);
    const bool eligible = in.op == Op::Set || in.op == Op::Cust || is_pure_alu(in.op);
    if (!eligible) {
      out.push_back(in);
      continue;
    }
    std::array<Reg, 5> rs = in.rs;
    if (is_commutative(in.op) && rs[0] > rs[1])
      std::swap(rs[0], rs[1]);
    Key key{in.op, rs, in.op == Op::Set ? in.imm : uint16_t(0), in.op == Op::Cust ? in.aux : 0u};
    auto [it, inserted] = table.emplace(key, in.rd);
    if (inserted) {
      out.push_back(in);
    } else {
      alias[in.rd] = it->second;
      changed = true;
    }
  }
  p.body = std::move(out);
  substitute(p, alias);
  return changed;
}

bool dead_code_elim(Process& p) {
  std::unordered_set<Reg> live;
  for (const Binding& b : p.owned)
    live.insert(b.next);
  std::vector<bool> keep(p.body.size(), false);
  for (size_t i = p.body.size(); i-- > 0;) {
    const Instr& in = p.body[i];
    if (in.op == Op::Nop)
      continue;
    if (has_side_effect(in.op) || (has_dest(in.op) && live.count(in.rd))) {
      keep[i] = true;
      for (unsigned k = 0; k < source_count(in.op); ++k)
        live.insert(in.rs[k]);
    }
  }
  std::vector<Instr> out;
  for (size_t i = 0; i < p.body.size(); ++i)
    if (keep[i])
      out.push_back(p.body[i]);
  const bool changed = out.size() != p.body.size();
  p.body = std::move(out);
  return changed;
}

void optimize_process(Process& p, const OptimizerOptions& opt) {
  for (unsigned round = 0; round < opt.max_rounds; ++round) {
    bool changed = false;
    if (opt.const_fold)
      changed |= const_fold(p);
    if (opt.cse)
      changed |= common_subexpr_elim(p);
    if (opt.dce)
      changed |= dead_code_elim(p);
    if (!changed)
      break;
  }
}

void optimize(Program& p, const OptimizerOptions& opt) {
  for (Process& proc : p.processes)
    optimize_process(proc, opt);
}

} // namespace mnt
