#include "ir/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

namespace mnt {

std::string_view nop_name(NOp op) {
  switch (op) {
  case NOp::And: return "and";
  case NOp::Or: return "or";
  case NOp::Xor: return "xor";
  case NOp::Not: return "not";
  case NOp::Add: return "add";
  case NOp::Sub: return "sub";
  case NOp::Shl: return "shl";
  case NOp::Shr: return "shr";
  case NOp::Sra: return "sra";
  case NOp::Eq: return "eq";
  case NOp::Ltu: return "ltu";
  case NOp::Lts: return "lts";
  case NOp::Mux: return "mux";
  case NOp::Concat: return "concat";
  case NOp::Slice: return "slice";
  case NOp::Load: return "load";
  case NOp::Next: return "next";
  case NOp::Store: return "store";
  case NOp::Expect: return "expect";
  case NOp::Display: return "display";
  }
  return "?";
}

unsigned MemoryRegion::address_width() const {
  unsigned aw = 0;
  while ((uint64_t(1) << aw) < depth)
    ++aw;
  return aw;
}

std::vector<uint32_t> NetlistProgram::topo_order() const {
  const size_t n = instructions.size();
  std::vector<std::vector<uint32_t>> users(n);
  std::vector<uint32_t> pending(n, 0);
  for (uint32_t i = 0; i < n; ++i) {
    for (const Operand& a : instructions[i].args) {
      if (a.kind != Operand::Kind::Wire)
        continue;
      uint32_t d = wires[a.index].def;
      users[d].push_back(i);
      ++pending[i];
    }
  }
  std::vector<uint32_t> order;
  order.reserve(n);
  for (uint32_t i = 0; i < n; ++i)
    if (pending[i] == 0)
      order.push_back(i);
  for (size_t head = 0; head < order.size(); ++head)
    for (uint32_t u : users[order[head]])
      if (--pending[u] == 0)
        order.push_back(u);
  return order;
}

std::vector<uint32_t> NetlistProgram::sinks() const {
  std::vector<uint32_t> s;
  for (uint32_t i = 0; i < instructions.size(); ++i)
    if (instructions[i].is_sink())
      s.push_back(i);
  return s;
}

std::vector<uint32_t> NetlistProgram::next_of() const {
  std::vector<uint32_t> n(registers.size(), kNone);
  for (uint32_t i = 0; i < instructions.size(); ++i)
    if (instructions[i].op == NOp::Next)
      n[instructions[i].target] = i;
  return n;
}

uint32_t NetlistProgram::exception_count() const {
  uint32_t c = 0;
  for (const auto& in : instructions)
    if (in.op == NOp::Expect || in.op == NOp::Display)
      ++c;
  return c;
}

bool NetlistProgram::operator==(const NetlistProgram& o) const {
  if (name != o.name || registers.size() != o.registers.size() || memories.size() != o.memories.size() ||
      wires.size() != o.wires.size() || instructions.size() != o.instructions.size())
    return false;
  for (size_t i = 0; i < registers.size(); ++i) {
    const auto &a = registers[i], &b = o.registers[i];
    if (a.name != b.name || a.width != b.width || a.init != b.init)
      return false;
  }
  for (size_t i = 0; i < memories.size(); ++i) {
    const auto &a = memories[i], &b = o.memories[i];
    if (a.name != b.name || a.width != b.width || a.depth != b.depth || a.kind != b.kind || a.init != b.init)
      return false;
  }
  for (size_t i = 0; i < wires.size(); ++i) {
    const auto &a = wires[i], &b = o.wires[i];
    if (a.name != b.name || a.width != b.width || a.def != b.def)
      return false;
  }
  for (size_t i = 0; i < instructions.size(); ++i) {
    const auto &a = instructions[i], &b = o.instructions[i];
    if (a.op != b.op || a.result != b.result || a.width != b.width || a.args != b.args || a.target != b.target ||
        a.lo != b.lo || a.eid != b.eid)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
  enum class Kind { Ident, Number, Const, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  SourceLoc loc;
  BigUint value = 0; // Number/Const
  unsigned width = 0; // Const
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '[' || c == ']';
}

BigUint parse_digits(std::string_view digits, unsigned base, SourceLoc loc) {
  if (digits.empty())
    throw ParseError(loc, "malformed number");
  BigUint v = 0;
  const BigUint limit = ~BigUint(0);
  for (char c : digits) {
    if (c == '_')
      continue;
    unsigned d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (c >= 'a' && c <= 'f')
      d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F')
      d = c - 'A' + 10;
    else
      throw ParseError(loc, std::string("invalid digit '") + c + "'");
    if (d >= base)
      throw ParseError(loc, std::string("invalid digit '") + c + "'");
    if (v > (limit - d) / base)
      throw ParseError(loc, "number exceeds 256 bits");
    v = v * base + d;
  }
  return v;
}

std::vector<Token> lex_line(std::string_view line, int lineno) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    SourceLoc loc{lineno, static_cast<int>(i) + 1};
    if (c == '#')
      break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.loc = loc;
    if (ident_start(c)) {
      size_t j = i;
      while (j < line.size() && ident_char(line[j]))
        ++j;
      t.kind = Token::Kind::Ident;
      t.text = std::string(line.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_' || line[j] == '\''))
        ++j;
      std::string_view tok = line.substr(i, j - i);
      t.text = std::string(tok);
      size_t q = tok.find('\'');
      if (q != std::string_view::npos) {
        t.kind = Token::Kind::Const;
        BigUint w = parse_digits(tok.substr(0, q), 10, loc);
        if (w == 0 || w > kMaxWidth)
          throw ParseError(loc, "constant width must be between 1 and 256");
        t.width = static_cast<unsigned>(w);
        if (q + 1 >= tok.size())
          throw ParseError(loc, "malformed constant");
        char b = static_cast<char>(std::tolower(static_cast<unsigned char>(tok[q + 1])));
        unsigned base = b == 'h' ? 16 : b == 'd' ? 10 : b == 'b' ? 2 : 0;
        if (base == 0)
          throw ParseError(loc, "constant base must be h, d or b");
        t.value = parse_digits(tok.substr(q + 2), base, loc);
        if (t.value > mask_of(t.width))
          throw ParseError(loc, "constant " + t.text + " does not fit in " + std::to_string(t.width) + " bits");
      } else {
        t.kind = Token::Kind::Number;
        if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X'))
          t.value = parse_digits(tok.substr(2), 16, loc);
        else
          t.value = parse_digits(tok, 10, loc);
      }
      i = j;
    } else if (c == ':' || c == '=' || c == ',') {
      t.kind = Token::Kind::Punct;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw ParseError(loc, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Token::Kind::End;
  end.loc = {lineno, static_cast<int>(line.size()) + 1};
  out.push_back(end);
  return out;
}

struct RawOperand {
  bool is_const = false;
  std::string name;
  BigUint value = 0;
  unsigned width = 0;
  SourceLoc loc;
};

struct RawInstr {
  NOp op;
  std::string result;
  unsigned width = 0;
  SourceLoc loc;
  std::string target; // register/memory name
  SourceLoc target_loc;
  std::vector<RawOperand> args;
  unsigned lo = 0;
};

class Cursor {
public:
  explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1)
      ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }

  const Token& expect_ident(const char* what) {
    const Token& t = next();
    if (t.kind != Token::Kind::Ident)
      throw ParseError(t.loc, std::string("expected ") + what);
    return t;
  }
  const Token& expect_number(const char* what) {
    const Token& t = next();
    if (t.kind != Token::Kind::Number)
      throw ParseError(t.loc, std::string("expected ") + what);
    return t;
  }
  void expect_punct(char c) {
    const Token& t = next();
    if (t.kind != Token::Kind::Punct || t.text[0] != c)
      throw ParseError(t.loc, std::string("expected '") + c + "'");
  }
  bool accept_punct(char c) {
    if (peek().kind == Token::Kind::Punct && peek().text[0] == c) {
      next();
      return true;
    }
    return false;
  }
  void expect_end() {
    if (!at_end())
      throw ParseError(peek().loc, "unexpected trailing input '" + peek().text + "'");
  }

  RawOperand operand() {
    const Token& t = next();
    RawOperand r;
    r.loc = t.loc;
    if (t.kind == Token::Kind::Const) {
      r.is_const = true;
      r.value = t.value;
      r.width = t.width;
    } else if (t.kind == Token::Kind::Ident) {
      r.name = t.text;
    } else if (t.kind == Token::Kind::Number) {
      throw ParseError(t.loc, "constant operands need an explicit width, e.g. 16'd" + t.text);
    } else {
      throw ParseError(t.loc, "expected operand");
    }
    return r;
  }

  std::vector<RawOperand> operand_list() {
    std::vector<RawOperand> v;
    v.push_back(operand());
    while (accept_punct(','))
      v.push_back(operand());
    return v;
  }

private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

unsigned parse_width(const Token& t) {
  if (t.value == 0 || t.value > kMaxWidth)
    throw ParseError(t.loc, "width must be between 1 and 256");
  return static_cast<unsigned>(t.value);
}

bool lookup_op(const std::string& s, NOp& op) {
  static const std::pair<const char*, NOp> table[] = {
      {"and", NOp::And}, {"or", NOp::Or},   {"xor", NOp::Xor}, {"not", NOp::Not},       {"add", NOp::Add},
      {"sub", NOp::Sub}, {"shl", NOp::Shl}, {"shr", NOp::Shr}, {"sra", NOp::Sra},       {"eq", NOp::Eq},
      {"ltu", NOp::Ltu}, {"lts", NOp::Lts}, {"mux", NOp::Mux}, {"concat", NOp::Concat}, {"slice", NOp::Slice},
      {"load", NOp::Load},
  };
  for (const auto& [name, o] : table)
    if (s == name) {
      op = o;
      return true;
    }
  return false;
}

} // namespace

// ---------------------------------------------------------------------------
// Parser

NetlistProgram parse_netlist(std::string_view text) {
  NetlistProgram p;
  std::vector<RawInstr> raw;
  std::vector<SourceLoc> reg_loc, mem_loc;
  bool have_design = false;

  int lineno = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    ++lineno;
    start = end + 1;

    Cursor c(lex_line(line, lineno));
    if (c.at_end())
      continue;
    const Token& head = c.peek();
    if (head.kind != Token::Kind::Ident)
      throw ParseError(head.loc, "expected declaration or instruction");

    const bool is_def = c.peek(1).kind == Token::Kind::Punct && c.peek(1).text == ":";
    if (is_def) {
      RawInstr r;
      r.result = c.next().text;
      r.loc = head.loc;
      c.expect_punct(':');
      r.width = parse_width(c.expect_number("result width"));
      c.expect_punct('=');
      const Token& opt = c.expect_ident("operation");
      if (!lookup_op(opt.text, r.op))
        throw ParseError(opt.loc, "unknown operation '" + opt.text + "'");
      if (r.op == NOp::Load) {
        const Token& m = c.expect_ident("memory name");
        r.target = m.text;
        r.target_loc = m.loc;
        c.expect_punct(',');
        r.args.push_back(c.operand());
      } else if (r.op == NOp::Slice) {
        r.args.push_back(c.operand());
        c.expect_punct(',');
        const Token& lo = c.expect_number("slice offset");
        if (lo.value >= kMaxWidth)
          throw ParseError(lo.loc, "slice offset out of range");
        r.lo = static_cast<unsigned>(lo.value);
      } else {
        r.args = c.operand_list();
      }
      c.expect_end();
      raw.push_back(std::move(r));
      continue;
    }

    const std::string kw = c.next().text;
    if (kw == "design") {
      if (have_design)
        throw ParseError(head.loc, "duplicate design declaration");
      p.name = c.expect_ident("design name").text;
      have_design = true;
      c.expect_end();
    } else if (kw == "reg") {
      StateRegister r;
      const Token& n = c.expect_ident("register name");
      r.name = n.text;
      r.width = parse_width(c.expect_number("register width"));
      if (c.accept_punct('=')) {
        const Token& v = c.next();
        if (v.kind != Token::Kind::Number && v.kind != Token::Kind::Const)
          throw ParseError(v.loc, "expected initial value");
        if (v.value > mask_of(r.width))
          throw ParseError(v.loc, "initial value does not fit in " + std::to_string(r.width) + " bits");
        r.init = v.value;
      }
      c.expect_end();
      p.registers.push_back(std::move(r));
      reg_loc.push_back(n.loc);
    } else if (kw == "mem") {
      MemoryRegion m;
      const Token& n = c.expect_ident("memory name");
      m.name = n.text;
      m.width = parse_width(c.expect_number("element width"));
      const Token& d = c.expect_number("memory depth");
      if (d.value < 2 || d.value > (BigUint(1) << 32) || (d.value & (d.value - 1)) != 0)
        throw ParseError(d.loc, "memory depth must be a power of two between 2 and 2^32");
      m.depth = static_cast<uint64_t>(d.value);
      const Token& k = c.expect_ident("memory kind (local or global)");
      if (k.text == "local")
        m.kind = MemKind::Local;
      else if (k.text == "global")
        m.kind = MemKind::Global;
      else
        throw ParseError(k.loc, "memory kind must be local or global");
      if (c.peek().kind == Token::Kind::Ident && c.peek().text == "init") {
        const Token& it = c.next();
        while (!c.at_end()) {
          const Token& v = c.next();
          if (v.kind != Token::Kind::Number && v.kind != Token::Kind::Const)
            throw ParseError(v.loc, "expected initial value");
          if (v.value > mask_of(m.width))
            throw ParseError(v.loc, "initial value does not fit in " + std::to_string(m.width) + " bits");
          m.init.push_back(v.value);
        }
        if (m.init.size() > m.depth)
          throw ParseError(it.loc, "more initial values than memory depth");
        m.init.resize(m.depth, 0);
      }
      c.expect_end();
      p.memories.push_back(std::move(m));
      mem_loc.push_back(n.loc);
    } else if (kw == "next") {
      RawInstr r;
      r.op = NOp::Next;
      r.loc = head.loc;
      const Token& t = c.expect_ident("register name");
      r.target = t.text;
      r.target_loc = t.loc;
      c.expect_punct('=');
      r.args.push_back(c.operand());
      c.expect_end();
      raw.push_back(std::move(r));
    } else if (kw == "store") {
      RawInstr r;
      r.op = NOp::Store;
      r.loc = head.loc;
      const Token& t = c.expect_ident("memory name");
      r.target = t.text;
      r.target_loc = t.loc;
      c.expect_punct(',');
      r.args = c.operand_list();
      c.expect_end();
      if (r.args.size() != 3)
        throw ParseError(head.loc, "store takes a memory, an address, data and a predicate");
      raw.push_back(std::move(r));
    } else if (kw == "expect" || kw == "display") {
      RawInstr r;
      r.op = kw == "expect" ? NOp::Expect : NOp::Display;
      r.loc = head.loc;
      r.args = c.operand_list();
      c.expect_end();
      if (r.args.size() != 2)
        throw ParseError(head.loc, kw + " takes two operands");
      raw.push_back(std::move(r));
    } else {
      throw ParseError(head.loc, "unknown statement '" + kw + "'");
    }
    if (end == text.size())
      break;
  }
  if (!have_design)
    throw ParseError({1, 1}, "missing design declaration");

  // Name resolution. Registers, memories and wires share one namespace.
  std::unordered_map<std::string, uint32_t> regs, mems, wires;
  auto taken = [&](const std::string& n) { return regs.count(n) || mems.count(n) || wires.count(n); };
  for (uint32_t i = 0; i < p.registers.size(); ++i) {
    if (taken(p.registers[i].name))
      throw ParseError(reg_loc[i], "duplicate definition of " + p.registers[i].name);
    regs[p.registers[i].name] = i;
  }
  for (uint32_t i = 0; i < p.memories.size(); ++i) {
    if (taken(p.memories[i].name))
      throw ParseError(mem_loc[i], "duplicate definition of " + p.memories[i].name);
    mems[p.memories[i].name] = i;
  }
  for (uint32_t i = 0; i < raw.size(); ++i) {
    const RawInstr& r = raw[i];
    if (r.result.empty())
      continue;
    if (taken(r.result))
      throw ParseError(r.loc, "duplicate definition of " + r.result);
    wires[r.result] = static_cast<uint32_t>(p.wires.size());
    p.wires.push_back({r.result, r.width, i});
  }

  auto resolve = [&](const RawOperand& o) -> Operand {
    if (o.is_const)
      return Operand::constant(o.value, o.width);
    if (auto it = wires.find(o.name); it != wires.end())
      return Operand::wire(it->second, p.wires[it->second].width);
    if (auto it = regs.find(o.name); it != regs.end())
      return Operand::reg(it->second, p.registers[it->second].width);
    if (mems.count(o.name))
      throw ParseError(o.loc, "memory " + o.name + " used as a value; use load");
    throw ParseError(o.loc, "undefined reference to " + o.name);
  };

  uint32_t eid = 0;
  std::vector<bool> has_next(p.registers.size(), false);
  for (const RawInstr& r : raw) {
    NetlistInstr in;
    in.op = r.op;
    in.width = r.width;
    in.loc = r.loc;
    in.lo = r.lo;
    if (!r.result.empty())
      in.result = wires.at(r.result);
    for (const RawOperand& o : r.args)
      in.args.push_back(resolve(o));
    if (r.op == NOp::Next) {
      auto it = regs.find(r.target);
      if (it == regs.end())
        throw ParseError(r.target_loc, taken(r.target) ? r.target + " is not a register"
                                                       : "undefined reference to " + r.target);
      if (has_next[it->second])
        throw ParseError(r.loc, "duplicate definition of next " + r.target);
      has_next[it->second] = true;
      in.target = it->second;
    } else if (r.op == NOp::Load || r.op == NOp::Store) {
      auto it = mems.find(r.target);
      if (it == mems.end())
        throw ParseError(r.target_loc, taken(r.target) ? r.target + " is not a memory"
                                                       : "undefined reference to " + r.target);
      in.target = it->second;
    } else if (r.op == NOp::Expect || r.op == NOp::Display) {
      in.eid = eid++;
    }
    p.instructions.push_back(std::move(in));
  }

  validate_netlist(p);
  return p;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void width_error(const NetlistInstr& in, const std::string& detail) {
  throw ParseError(in.loc, "width mismatch in " + std::string(nop_name(in.op)) + ": " + detail);
}

void require_width(const NetlistInstr& in, const Operand& a, unsigned w, const char* role) {
  if (a.width != w)
    width_error(in, std::string(role) + " has width " + std::to_string(a.width) + ", expected " + std::to_string(w));
}

void require_args(const NetlistInstr& in, size_t n) {
  if (in.args.size() != n)
    throw ParseError(in.loc, std::string(nop_name(in.op)) + " takes " + std::to_string(n) + " operand" +
                                 (n == 1 ? "" : "s") + ", got " + std::to_string(in.args.size()));
}

} // namespace

void validate_netlist(const NetlistProgram& p) {
  for (const auto& r : p.registers)
    if (r.width == 0 || r.width > kMaxWidth || r.init > mask_of(r.width))
      throw ParseError({}, "register " + r.name + " has an invalid width or initial value");
  for (const auto& m : p.memories) {
    if (m.width == 0 || m.width > kMaxWidth || m.depth < 2 || (m.depth & (m.depth - 1)) != 0)
      throw ParseError({}, "memory " + m.name + " has an invalid shape");
    if (!m.init.empty() && m.init.size() != m.depth)
      throw ParseError({}, "memory " + m.name + " has a partial initializer");
  }

  for (const NetlistInstr& in : p.instructions) {
    for (const Operand& a : in.args) {
      if (a.kind == Operand::Kind::Wire && a.index >= p.wires.size())
        throw ParseError(in.loc, "undefined reference to wire #" + std::to_string(a.index));
      if (a.kind == Operand::Kind::Reg && a.index >= p.registers.size())
        throw ParseError(in.loc, "undefined reference to register #" + std::to_string(a.index));
    }
    const unsigned w = in.width;
    switch (in.op) {
    case NOp::And:
    case NOp::Or:
    case NOp::Xor:
    case NOp::Add:
    case NOp::Sub:
      require_args(in, 2);
      require_width(in, in.args[0], w, "first operand");
      require_width(in, in.args[1], w, "second operand");
      break;
    case NOp::Not:
      require_args(in, 1);
      require_width(in, in.args[0], w, "operand");
      break;
    case NOp::Shl:
    case NOp::Shr:
    case NOp::Sra:
      require_args(in, 2);
      require_width(in, in.args[0], w, "shifted value");
      break;
    case NOp::Eq:
    case NOp::Ltu:
    case NOp::Lts:
      require_args(in, 2);
      if (w != 1)
        width_error(in, "result must be 1 bit");
      require_width(in, in.args[1], in.args[0].width, "second operand");
      break;
    case NOp::Mux:
      require_args(in, 3);
      require_width(in, in.args[0], 1, "select");
      require_width(in, in.args[1], w, "true operand");
      require_width(in, in.args[2], w, "false operand");
      break;
    case NOp::Concat: {
      if (in.args.empty())
        throw ParseError(in.loc, "concat needs at least one operand");
      unsigned sum = 0;
      for (const Operand& a : in.args)
        sum += a.width;
      if (sum != w)
        width_error(in, "operands sum to " + std::to_string(sum) + " bits, result is " + std::to_string(w));
      break;
    }
    case NOp::Slice:
      require_args(in, 1);
      if (in.lo + w > in.args[0].width)
        width_error(in, "bits [" + std::to_string(in.lo) + ", " + std::to_string(in.lo + w) +
                            ") exceed operand width " + std::to_string(in.args[0].width));
      break;
    case NOp::Load: {
      require_args(in, 1);
      if (in.target >= p.memories.size())
        throw ParseError(in.loc, "undefined memory");
      const MemoryRegion& m = p.memories[in.target];
      require_width(in, in.args[0], m.address_width(), "address");
      if (w != m.width)
        width_error(in, "result must match element width " + std::to_string(m.width));
      break;
    }
    case NOp::Next:
      require_args(in, 1);
      if (in.target >= p.registers.size())
        throw ParseError(in.loc, "undefined register");
      require_width(in, in.args[0], p.registers[in.target].width, "next value");
      break;
    case NOp::Store: {
      require_args(in, 3);
      if (in.target >= p.memories.size())
        throw ParseError(in.loc, "undefined memory");
      const MemoryRegion& m = p.memories[in.target];
      require_width(in, in.args[0], m.address_width(), "address");
      require_width(in, in.args[1], m.width, "data");
      require_width(in, in.args[2], 1, "predicate");
      break;
    }
    case NOp::Expect:
      require_args(in, 2);
      require_width(in, in.args[1], in.args[0].width, "second operand");
      break;
    case NOp::Display:
      require_args(in, 2);
      require_width(in, in.args[0], 1, "predicate");
      break;
    }
  }

  for (uint32_t i = 0; i < p.wires.size(); ++i) {
    const Wire& wr = p.wires[i];
    if (wr.def >= p.instructions.size() || p.instructions[wr.def].result != i)
      throw ParseError({}, "wire " + wr.name + " has no unique definition");
  }

  auto order = p.topo_order();
  if (order.size() != p.instructions.size()) {
    std::vector<bool> placed(p.instructions.size(), false);
    for (uint32_t i : order)
      placed[i] = true;
    for (uint32_t i = 0; i < p.instructions.size(); ++i)
      if (!placed[i]) {
        const auto& in = p.instructions[i];
        std::string what = in.result != kNone ? " through " + p.wires[in.result].name : "";
        throw ParseError(in.loc, "combinational cycle" + what);
      }
  }
}

// ---------------------------------------------------------------------------
// Printer

std::string format_constant(const BigUint& v, unsigned width) { return std::to_string(width) + "'h" + to_hex(v); }

namespace {

std::string operand_text(const NetlistProgram& p, const Operand& a) {
  switch (a.kind) {
  case Operand::Kind::Wire: return p.wires[a.index].name;
  case Operand::Kind::Reg: return p.registers[a.index].name;
  case Operand::Kind::Const: return format_constant(a.value, a.width);
  }
  return "?";
}

} // namespace

std::string print_netlist(const NetlistProgram& p) {
  std::ostringstream os;
  os << "design " << p.name << "\n";
  for (const auto& r : p.registers)
    os << "reg " << r.name << " " << r.width << " = 0x" << to_hex(r.init) << "\n";
  for (const auto& m : p.memories) {
    os << "mem " << m.name << " " << m.width << " " << m.depth << " " << (m.kind == MemKind::Local ? "local" : "global");
    if (!m.init.empty()) {
      os << " init";
      for (const auto& v : m.init)
        os << " 0x" << to_hex(v);
    }
    os << "\n";
  }
  for (const auto& in : p.instructions) {
    auto args = [&](size_t from) {
      for (size_t i = from; i < in.args.size(); ++i)
        os << (i == from ? "" : ", ") << operand_text(p, in.args[i]);
    };
    switch (in.op) {
    case NOp::Next:
      os << "next " << p.registers[in.target].name << " = ";
      args(0);
      break;
    case NOp::Store:
      os << "store " << p.memories[in.target].name << ", ";
      args(0);
      break;
    case NOp::Expect:
    case NOp::Display:
      os << nop_name(in.op) << " ";
      args(0);
      break;
    case NOp::Load:
      os << p.wires[in.result].name << ":" << in.width << " = load " << p.memories[in.target].name << ", ";
      args(0);
      break;
    case NOp::Slice:
      os << p.wires[in.result].name << ":" << in.width << " = slice ";
      args(0);
      os << ", " << in.lo;
      break;
    default:
      os << p.wires[in.result].name << ":" << in.width << " = " << nop_name(in.op) << " ";
      args(0);
      break;
    }
    os << "\n";
  }
  return os.str();
}

} // namespace mnt
