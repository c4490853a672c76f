#include "ir/lower.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mnt::low {

namespace {

struct OpInfo {
  Op op;
  const char* name;
  unsigned sources;
  bool dest;
};

constexpr OpInfo kOps[] = {
    {Op::Nop, "nop", 0, false},     {Op::Add, "add", 2, true},       {Op::Addc, "addc", 3, true},
    {Op::Sub, "sub", 2, true},      {Op::And, "and", 2, true},       {Op::Or, "or", 2, true},
    {Op::Xor, "xor", 2, true},      {Op::Sll, "sll", 2, true},       {Op::Srl, "srl", 2, true},
    {Op::Sra, "sra", 2, true},      {Op::Seq, "seq", 2, true},       {Op::Sltu, "sltu", 2, true},
    {Op::Slts, "slts", 2, true},    {Op::Mux, "mux", 3, true},       {Op::Set, "set", 0, true},
    {Op::Cust, "cust", 4, true},    {Op::Lld, "lld", 1, true},       {Op::Lst, "lst", 3, false},
    {Op::Gld, "gld", 3, true},      {Op::Gst, "gst", 5, false},      {Op::Send, "send", 1, false},
    {Op::Expect, "expect", 2, false},
};

const OpInfo& info(Op op) { return kOps[static_cast<size_t>(op)]; }

} // namespace

std::string_view op_name(Op op) { return info(op).name; }

bool parse_op_name(std::string_view s, Op& op) {
  for (const auto& i : kOps)
    if (s == i.name) {
      op = i.op;
      return true;
    }
  return false;
}

unsigned source_count(Op op) { return info(op).sources; }
bool has_dest(Op op) { return info(op).dest; }
bool is_privileged(Op op) { return op == Op::Gld || op == Op::Gst || op == Op::Expect; }
bool has_side_effect(Op op) { return op == Op::Lst || op == Op::Gst || op == Op::Send || op == Op::Expect; }
bool is_commutative(Op op) {
  return op == Op::Add || op == Op::And || op == Op::Or || op == Op::Xor || op == Op::Seq;
}

uint16_t apply_custom(const CustomFunction& f, uint16_t a, uint16_t b, uint16_t c, uint16_t d) {
  uint16_t r = 0;
  for (unsigned i = 0; i < 16; ++i) {
    unsigned k = ((a >> i) & 1) | (((b >> i) & 1) << 1) | (((c >> i) & 1) << 2) | (((d >> i) & 1) << 3);
    r |= static_cast<uint16_t>(((f.table[i] >> k) & 1) << i);
  }
  return r;
}

Word eval_alu(Op op, Word a, Word b, Word c, uint16_t imm) {
  const uint32_t x = a.value, y = b.value;
  auto w = [](uint32_t v) { return Word{static_cast<uint16_t>(v & 0xFFFF), false}; };
  switch (op) {
  case Op::Add: {
    uint32_t s = x + y;
    return {static_cast<uint16_t>(s & 0xFFFF), (s >> 16) != 0};
  }
  case Op::Addc: {
    uint32_t s = x + y + (c.overflow ? 1 : 0);
    return {static_cast<uint16_t>(s & 0xFFFF), (s >> 16) != 0};
  }
  case Op::Sub: return w(x - y);
  case Op::And: return w(x & y);
  case Op::Or: return w(x | y);
  case Op::Xor: return w(x ^ y);
  case Op::Sll: return w(y >= 16 ? 0 : x << y);
  case Op::Srl: return w(y >= 16 ? 0 : x >> y);
  case Op::Sra: {
    int32_t s = static_cast<int16_t>(a.value);
    return w(static_cast<uint32_t>(s >> std::min<uint32_t>(y, 15)));
  }
  case Op::Seq: return w(x == y);
  case Op::Sltu: return w(x < y);
  case Op::Slts: return w(static_cast<int16_t>(a.value) < static_cast<int16_t>(b.value));
  case Op::Mux: return a.value != 0 ? Word{b.value, false} : Word{c.value, false};
  case Op::Set: return w(imm);
  default: return {};
  }
}

bool Process::privileged() const {
  return std::any_of(body.begin(), body.end(), [](const Instr& i) { return is_privileged(i.op); });
}

int Program::privileged_process() const {
  for (size_t i = 0; i < processes.size(); ++i)
    if (processes[i].privileged())
      return static_cast<int>(i);
  return -1;
}

std::vector<uint32_t> Program::state_of_current() const {
  std::vector<uint32_t> m(next_vreg, kNone);
  for (uint32_t s = 0; s < states.size(); ++s)
    if (states[s].current < m.size())
      m[states[s].current] = s;
  return m;
}

void validate_lower(const Program& p) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, m); };
  int privileged = 0;
  for (size_t pi = 0; pi < p.processes.size(); ++pi) {
    const Process& proc = p.processes[pi];
    if (proc.privileged())
      ++privileged;
    if (proc.functions.size() > kMaxFunctions)
      fail("process " + std::to_string(proc.id) + " declares more than 32 custom functions");
    for (const Instr& in : proc.body) {
      for (unsigned k = 0; k < source_count(in.op); ++k)
        if (in.rs[k] == kNoReg)
          fail("missing operand in " + print_instr(in));
      if (has_dest(in.op) && in.rd == kNoReg)
        fail("missing destination in " + print_instr(in));
      if (in.op == Op::Send && in.aux >= p.processes.size())
        fail("SEND targets unknown process " + std::to_string(in.aux));
      if (in.op == Op::Cust && in.aux >= proc.functions.size())
        fail("CUST references undeclared function " + std::to_string(in.aux));
      if ((in.op == Op::Lld || in.op == Op::Lst) && in.aux != kNoRegion &&
          (in.aux >= p.memories.size() || p.memories[in.aux].kind != MemKind::Local))
        fail("local memory access to invalid region in " + print_instr(in));
    }
  }
  if (privileged > 1)
    fail("privileged instructions appear in more than one process");
}

// ---------------------------------------------------------------------------
// Text form

namespace {

std::string reg_text(Reg r) { return r == kNoReg ? std::string("%-") : "%" + std::to_string(r); }

std::string hex(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

} // namespace

std::string print_instr(const Instr& in) {
  std::ostringstream os;
  if (has_dest(in.op))
    os << reg_text(in.rd) << " = ";
  os << op_name(in.op);
  auto regs = [&](unsigned from, unsigned to) {
    for (unsigned k = from; k < to; ++k)
      os << (k == from ? " " : ", ") << reg_text(in.rs[k]);
  };
  auto region = [&]() {
    if (in.aux != kNoRegion)
      os << "M" << in.aux;
  };
  switch (in.op) {
  case Op::Nop: break;
  case Op::Set: os << " " << hex(in.imm); break;
  case Op::Cust:
    os << " F" << in.aux;
    regs(0, 4);
    break;
  case Op::Lld:
    os << " ";
    region();
    os << "[" << reg_text(in.rs[0]) << " + " << hex(in.imm) << "]";
    break;
  case Op::Lst:
    os << " ";
    region();
    os << "[" << reg_text(in.rs[0]) << " + " << hex(in.imm) << "] = " << reg_text(in.rs[1]) << " if "
       << reg_text(in.rs[2]);
    break;
  case Op::Gld:
    os << " [" << reg_text(in.rs[0]) << ", " << reg_text(in.rs[1]) << ", " << reg_text(in.rs[2]) << "]";
    break;
  case Op::Gst:
    os << " [" << reg_text(in.rs[0]) << ", " << reg_text(in.rs[1]) << ", " << reg_text(in.rs[2])
       << "] = " << reg_text(in.rs[3]) << " if " << reg_text(in.rs[4]);
    break;
  case Op::Send: os << " P" << in.aux << "." << reg_text(in.remote) << " = " << reg_text(in.rs[0]); break;
  case Op::Expect:
    regs(0, 2);
    os << " E" << in.aux;
    break;
  default: regs(0, source_count(in.op)); break;
  }
  return os.str();
}

std::string print_lower(const Program& p) {
  std::ostringstream os;
  os << "program " << p.name << "\n";
  os << "vregs " << p.next_vreg << " origins " << p.next_origin << " global " << hex(p.global_words)
     << (p.sends_materialized ? " sends" : "") << "\n";
  for (const auto& r : p.registers)
    os << "register " << r.name << " " << r.width << " " << r.first_state << "\n";
  for (const auto& s : p.states)
    os << "state " << s.reg << " " << s.word << " " << hex(s.init) << " " << reg_text(s.current) << " "
       << reg_text(s.next) << "\n";
  for (const auto& m : p.memories) {
    os << "memory " << m.name << " " << m.width << " " << m.depth << " "
       << (m.kind == MemKind::Local ? "local" : "global") << " " << hex(m.global_base);
    if (!m.init.empty()) {
      os << " init";
      for (uint16_t v : m.init)
        os << " " << hex(v);
    }
    os << "\n";
  }
  for (const auto& e : p.exceptions)
    os << "exception " << e.eid << " " << (e.kind == ExceptionKind::Stop ? "stop" : "display") << " "
       << hex(e.slot) << " " << e.width << "\n";
  for (const auto& proc : p.processes) {
    os << "process " << proc.id << (proc.allocated ? " allocated" : "") << "\n";
    for (const auto& b : proc.owned)
      os << "  owns " << b.state << " " << reg_text(b.next) << "\n";
    for (const auto& f : proc.functions) {
      os << "  function";
      for (uint16_t t : f.table)
        os << " " << hex(t);
      os << "\n";
    }
    for (const auto& [r, v] : proc.reg_init)
      os << "  reginit " << reg_text(r) << " " << hex(v) << "\n";
    for (const auto& [a, v] : proc.scratch_init)
      os << "  scratch " << hex(a) << " " << hex(v) << "\n";
    for (const auto& [m, b] : proc.memory_base)
      os << "  membase " << m << " " << hex(b) << "\n";
    for (const auto& [s, r] : proc.state_regs)
      os << "  statereg " << s << " " << reg_text(r) << "\n";
    if (proc.spill_words)
      os << "  spill " << proc.spill_words << "\n";
    for (const auto& in : proc.body)
      os << "  @" << in.origin << " " << print_instr(in) << "\n";
    os << "end\n";
  }
  return os.str();
}

namespace {

class LineReader {
public:
  LineReader(std::string_view line, int lineno) : lineno_(lineno) {
    size_t i = 0;
    while (i < line.size()) {
      char c = line[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      size_t j = i;
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '%' || c == '@' || c == '-') {
        ++j;
        while (j < line.size() &&
               (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_' || line[j] == '-'))
          ++j;
      } else {
        ++j;
      }
      toks_.emplace_back(line.substr(i, j - i));
      cols_.push_back(static_cast<int>(i) + 1);
      i = j;
    }
  }

  bool done() const { return pos_ >= toks_.size(); }
  std::string_view peek() const { return done() ? std::string_view() : std::string_view(toks_[pos_]); }
  std::string next() {
    if (done())
      fail("unexpected end of line");
    return toks_[pos_++];
  }
  void expect(std::string_view t) {
    if (next() != t)
      fail("expected '" + std::string(t) + "'");
  }
  bool accept(std::string_view t) {
    if (!done() && toks_[pos_] == t) {
      ++pos_;
      return true;
    }
    return false;
  }
  uint64_t number() { return to_number(next()); }
  uint64_t to_number(const std::string& s) {
    try {
      size_t used = 0;
      uint64_t v = std::stoull(s, &used, 0);
      if (used != s.size())
        fail("malformed number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("malformed number '" + s + "'");
    }
  }
  Reg reg() {
    std::string t = next();
    if (t.size() < 2 || t[0] != '%')
      fail("expected register, got '" + t + "'");
    if (t == "%-")
      return kNoReg;
    return static_cast<Reg>(to_number(t.substr(1)));
  }
  uint32_t prefixed(char prefix) {
    std::string t = next();
    if (t.size() < 2 || t[0] != prefix)
      fail(std::string("expected ") + prefix + "<n>");
    return static_cast<uint32_t>(to_number(t.substr(1)));
  }
  [[noreturn]] void fail(const std::string& m) const {
    int col = pos_ < cols_.size() ? cols_[pos_] : 1;
    throw ParseError({lineno_, col}, m);
  }

private:
  std::vector<std::string> toks_;
  std::vector<int> cols_;
  size_t pos_ = 0;
  int lineno_;
};

Instr parse_instr(LineReader& r) {
  Instr in;
  if (r.peek().starts_with("@"))
    in.origin = r.prefixed('@');
  if (r.peek().starts_with("%")) {
    in.rd = r.reg();
    r.expect("=");
  }
  std::string name = r.next();
  if (!parse_op_name(name, in.op))
    r.fail("unknown instruction '" + name + "'");
  auto regs = [&](unsigned from, unsigned to) {
    for (unsigned k = from; k < to; ++k) {
      if (k != from)
        r.expect(",");
      in.rs[k] = r.reg();
    }
  };
  auto region = [&]() {
    in.aux = kNoRegion;
    if (r.peek().starts_with("M"))
      in.aux = r.prefixed('M');
    r.expect("[");
    in.rs[0] = r.reg();
    r.expect("+");
    in.imm = static_cast<uint16_t>(r.number());
    r.expect("]");
  };
  switch (in.op) {
  case Op::Nop: break;
  case Op::Set: in.imm = static_cast<uint16_t>(r.number()); break;
  case Op::Cust:
    in.aux = r.prefixed('F');
    regs(0, 4);
    break;
  case Op::Lld: region(); break;
  case Op::Lst:
    region();
    r.expect("=");
    in.rs[1] = r.reg();
    r.expect("if");
    in.rs[2] = r.reg();
    break;
  case Op::Gld:
    r.expect("[");
    regs(0, 3);
    r.expect("]");
    break;
  case Op::Gst:
    r.expect("[");
    regs(0, 3);
    r.expect("]");
    r.expect("=");
    in.rs[3] = r.reg();
    r.expect("if");
    in.rs[4] = r.reg();
    break;
  case Op::Send:
    in.aux = r.prefixed('P');
    r.expect(".");
    in.remote = r.reg();
    r.expect("=");
    in.rs[0] = r.reg();
    break;
  case Op::Expect:
    regs(0, 2);
    in.aux = r.prefixed('E');
    break;
  default: regs(0, source_count(in.op)); break;
  }
  if (!r.done())
    r.fail("unexpected trailing input");
  return in;
}

} // namespace

Program parse_lower(std::string_view text) {
  Program p;
  Process* cur = nullptr;
  int lineno = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos)
      line = line.substr(0, h);
    LineReader r(line, lineno);
    if (r.done())
      continue;
    if (cur) {
      std::string_view kw = r.peek();
      if (kw == "end") {
        r.next();
        cur = nullptr;
      } else if (kw == "owns") {
        r.next();
        Binding b;
        b.state = static_cast<uint32_t>(r.number());
        b.next = r.reg();
        cur->owned.push_back(b);
      } else if (kw == "function") {
        r.next();
        CustomFunction f;
        for (auto& t : f.table)
          t = static_cast<uint16_t>(r.number());
        cur->functions.push_back(f);
      } else if (kw == "reginit") {
        r.next();
        Reg reg = r.reg();
        cur->reg_init.emplace_back(reg, static_cast<uint16_t>(r.number()));
      } else if (kw == "scratch") {
        r.next();
        auto a = static_cast<uint16_t>(r.number());
        cur->scratch_init.emplace_back(a, static_cast<uint16_t>(r.number()));
      } else if (kw == "membase") {
        r.next();
        auto m = static_cast<uint32_t>(r.number());
        cur->memory_base.emplace_back(m, static_cast<uint16_t>(r.number()));
      } else if (kw == "statereg") {
        r.next();
        auto s = static_cast<uint32_t>(r.number());
        cur->state_regs.emplace_back(s, r.reg());
      } else if (kw == "spill") {
        r.next();
        cur->spill_words = static_cast<uint32_t>(r.number());
      } else {
        cur->body.push_back(parse_instr(r));
        continue;
      }
      if (!r.done())
        r.fail("unexpected trailing input");
      continue;
    }
    std::string kw = r.next();
    if (kw == "program") {
      p.name = r.next();
    } else if (kw == "vregs") {
      p.next_vreg = static_cast<Reg>(r.number());
      r.expect("origins");
      p.next_origin = static_cast<uint32_t>(r.number());
      r.expect("global");
      p.global_words = r.number();
      p.sends_materialized = r.accept("sends");
    } else if (kw == "register") {
      RtlRegister reg;
      reg.name = r.next();
      reg.width = static_cast<unsigned>(r.number());
      reg.first_state = static_cast<uint32_t>(r.number());
      p.registers.push_back(reg);
    } else if (kw == "state") {
      StateWord s;
      s.reg = static_cast<uint32_t>(r.number());
      s.word = static_cast<uint16_t>(r.number());
      s.init = static_cast<uint16_t>(r.number());
      s.current = r.reg();
      s.next = r.reg();
      p.states.push_back(s);
    } else if (kw == "memory") {
      Memory m;
      m.name = r.next();
      m.width = static_cast<unsigned>(r.number());
      m.depth = r.number();
      std::string k = r.next();
      if (k != "local" && k != "global")
        r.fail("memory kind must be local or global");
      m.kind = k == "local" ? MemKind::Local : MemKind::Global;
      m.global_base = r.number();
      if (r.accept("init"))
        while (!r.done())
          m.init.push_back(static_cast<uint16_t>(r.number()));
      p.memories.push_back(std::move(m));
    } else if (kw == "exception") {
      ExceptionInfo e;
      e.eid = static_cast<uint32_t>(r.number());
      std::string k = r.next();
      if (k != "stop" && k != "display")
        r.fail("exception kind must be stop or display");
      e.kind = k == "stop" ? ExceptionKind::Stop : ExceptionKind::Display;
      e.slot = r.number();
      e.width = static_cast<unsigned>(r.number());
      p.exceptions.push_back(e);
    } else if (kw == "process") {
      Process proc;
      proc.id = static_cast<uint32_t>(r.number());
      proc.allocated = r.accept("allocated");
      p.processes.push_back(std::move(proc));
      cur = &p.processes.back();
    } else {
      r.fail("unknown directive '" + kw + "'");
    }
    if (!r.done())
      r.fail("unexpected trailing input");
  }
  if (cur)
    throw ParseError({lineno, 1}, "missing 'end' after process");
  return p;
}

} // namespace mnt::low
