#include "sched/bootstream.hpp"

#include <cstring>
#include <string>

#include "support/error.hpp"

namespace mnt {

using namespace low;

namespace {

enum Opcode : uint64_t {
  kNop = 0,
  kAlu = 1,
  kSet = 2,
  kCust = 3,
  kLld = 4,
  kLst = 5,
  kGld = 6,
  kGst = 7,
  kSend = 8,
  kExpect = 9,
};

constexpr unsigned kRd = 4, kRs0 = 15, kRs1 = 26, kRs2 = 37, kRs3 = 48, kFunct = 59, kImm = 48, kSetImm = 15;
constexpr uint64_t kRegMask = 0x7FF;

uint64_t reg(Reg r, unsigned at) {
  if (r == kNoReg)
    return 0;
  if (r > kRegMask)
    throw Error(ErrorKind::Compile, "register " + std::to_string(r) + " does not fit an instruction field");
  return uint64_t(r) << at;
}

Reg field(uint64_t w, unsigned at) { return static_cast<Reg>((w >> at) & kRegMask); }

class Writer {
public:
  void u8(uint8_t v) { out.push_back(v); }
  void u16(uint16_t v) { le(v, 2); }
  void u32(uint32_t v) { le(v, 4); }
  void u64(uint64_t v) { le(v, 8); }
  void tag(const char* t) { out.insert(out.end(), t, t + 4); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  std::vector<uint8_t> out;

private:
  void le(uint64_t v, int n) {
    for (int i = 0; i < n; ++i)
      out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
};

class Reader {
public:
  explicit Reader(const std::vector<uint8_t>& b) : b_(b) {}
  uint8_t u8(const char* what) { return static_cast<uint8_t>(le(1, what)); }
  uint16_t u16(const char* what) { return static_cast<uint16_t>(le(2, what)); }
  uint32_t u32(const char* what) { return static_cast<uint32_t>(le(4, what)); }
  uint64_t u64(const char* what) { return le(8, what); }
  void tag(const char* t) {
    need(4, t);
    if (std::memcmp(b_.data() + pos_, t, 4) != 0)
      throw Error(ErrorKind::Load, std::string("malformed bootstream: expected ") + t);
    pos_ += 4;
  }
  std::string str(const char* what) {
    const uint32_t n = u32(what);
    need(n, what);
    std::string s(b_.begin() + pos_, b_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  /// Count of `size`-byte items that must still fit in the stream.
  uint32_t count(const char* what, size_t size) {
    const uint32_t n = u32(what);
    need(uint64_t(n) * size, what);
    return n;
  }
  bool done() const { return pos_ == b_.size(); }

private:
  void need(uint64_t n, const char* what) {
    if (b_.size() - pos_ < n)
      throw Error(ErrorKind::Load, std::string("truncated bootstream: missing ") + what);
  }
  uint64_t le(int n, const char* what) {
    need(n, what);
    uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= uint64_t(b_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  const std::vector<uint8_t>& b_;
  size_t pos_ = 0;
};

void write_segment(Writer& w, const CoreProgram& c) {
  w.u16(static_cast<uint16_t>(c.coord.x));
  w.u16(static_cast<uint16_t>(c.coord.y));
  w.u32(static_cast<uint32_t>(c.slots.size()));
  for (const Instr& in : c.slots)
    w.u64(encode_instr(in));
  w.u32(static_cast<uint32_t>(c.functions.size()));
  for (const CustomFunction& f : c.functions)
    for (uint16_t t : f.table)
      w.u16(t);
  w.u32(static_cast<uint32_t>(c.reg_init.size()));
  for (const auto& [r, v] : c.reg_init) {
    w.u16(r);
    w.u16(v);
  }
  w.u32(static_cast<uint32_t>(c.scratch_init.size()));
  for (const auto& [a, v] : c.scratch_init) {
    w.u16(a);
    w.u16(v);
  }
  w.u32(c.epilogue);
  w.u32(c.sleep);
  w.u32(c.countdown);
}

CoreProgram read_segment(Reader& r) {
  CoreProgram c;
  c.coord.x = r.u16("core x");
  c.coord.y = r.u16("core y");
  const uint32_t n = r.count("instruction count", 8);
  c.slots.reserve(n);
  for (uint32_t i = 0; i < n; ++i)
    c.slots.push_back(decode_instr(r.u64("instruction")));
  const uint32_t nf = r.count("function count", 32);
  if (nf > kMaxFunctions)
    throw Error(ErrorKind::Load, "malformed bootstream: more than 32 custom functions");
  c.functions.resize(nf);
  for (auto& f : c.functions)
    for (auto& t : f.table)
      t = r.u16("function table");
  const uint32_t nr = r.count("register init count", 4);
  for (uint32_t i = 0; i < nr; ++i) {
    const uint16_t a = r.u16("register init");
    c.reg_init.emplace_back(a, r.u16("register init"));
  }
  const uint32_t ns = r.count("scratchpad init count", 4);
  for (uint32_t i = 0; i < ns; ++i) {
    const uint16_t a = r.u16("scratchpad init");
    c.scratch_init.emplace_back(a, r.u16("scratchpad init"));
  }
  c.epilogue = r.u32("EPILOGUE_LENGTH");
  c.sleep = r.u32("SLEEP_LENGTH");
  c.countdown = r.u32("COUNT_DOWN");
  return c;
}

void write_meta(Writer& w, const ScheduleMeta& m) {
  w.tag("META");
  w.str(m.name);
  w.u64(m.global_words);
  w.u32(static_cast<uint32_t>(m.global_init.size()));
  for (const auto& [a, v] : m.global_init) {
    w.u64(a);
    w.u16(v);
  }
  w.u32(static_cast<uint32_t>(m.exceptions.size()));
  for (const ExceptionInfo& e : m.exceptions) {
    w.u32(e.eid);
    w.u8(static_cast<uint8_t>(e.kind));
    w.u64(e.slot);
    w.u32(e.width);
  }
  w.u32(static_cast<uint32_t>(m.registers.size()));
  for (const RegisterSymbol& r : m.registers) {
    w.str(r.name);
    w.u32(r.width);
    w.u32(static_cast<uint32_t>(r.words.size()));
    for (const StateLocation& l : r.words) {
      w.u8(l.constant);
      w.u16(l.value);
      w.u32(l.core);
      w.u16(l.reg);
    }
  }
  w.u32(static_cast<uint32_t>(m.memories.size()));
  for (const MemorySymbol& s : m.memories) {
    w.str(s.name);
    w.u32(s.width);
    w.u64(s.depth);
    w.u8(s.global);
    w.u32(s.core);
    w.u16(s.base);
    w.u64(s.global_base);
  }
  w.tag("MEND");
}

ScheduleMeta read_meta(Reader& r) {
  ScheduleMeta m;
  r.tag("META");
  m.name = r.str("design name");
  m.global_words = r.u64("global word count");
  const uint32_t ng = r.count("global init count", 10);
  for (uint32_t i = 0; i < ng; ++i) {
    const uint64_t a = r.u64("global init");
    m.global_init.emplace_back(a, r.u16("global init"));
  }
  const uint32_t ne = r.count("exception count", 17);
  for (uint32_t i = 0; i < ne; ++i) {
    ExceptionInfo e;
    e.eid = r.u32("exception id");
    const uint8_t kind = r.u8("exception kind");
    if (kind > 1)
      throw Error(ErrorKind::Load, "malformed bootstream: unknown exception kind");
    e.kind = static_cast<ExceptionKind>(kind);
    e.slot = r.u64("exception slot");
    e.width = r.u32("exception width");
    m.exceptions.push_back(e);
  }
  const uint32_t nr = r.count("register count", 12);
  for (uint32_t i = 0; i < nr; ++i) {
    RegisterSymbol s;
    s.name = r.str("register name");
    s.width = r.u32("register width");
    const uint32_t nw = r.count("register words", 9);
    for (uint32_t j = 0; j < nw; ++j) {
      StateLocation l;
      l.constant = r.u8("state location") != 0;
      l.value = r.u16("state location");
      l.core = r.u32("state location");
      l.reg = r.u16("state location");
      s.words.push_back(l);
    }
    m.registers.push_back(std::move(s));
  }
  const uint32_t nm = r.count("memory count", 31);
  for (uint32_t i = 0; i < nm; ++i) {
    MemorySymbol s;
    s.name = r.str("memory name");
    s.width = r.u32("memory width");
    s.depth = r.u64("memory depth");
    s.global = r.u8("memory kind") != 0;
    s.core = r.u32("memory core");
    s.base = r.u16("memory base");
    s.global_base = r.u64("memory global base");
    m.memories.push_back(std::move(s));
  }
  r.tag("MEND");
  return m;
}

void write_header(Writer& w, const Schedule& s) {
  w.tag("MNTB");
  w.u16(kBootstreamVersion);
  w.u16(static_cast<uint16_t>(s.grid.x));
  w.u16(static_cast<uint16_t>(s.grid.y));
  w.u16(static_cast<uint16_t>(s.privileged.x));
  w.u16(static_cast<uint16_t>(s.privileged.y));
  w.u32(s.def_use_latency);
  w.u32(s.hop_latency);
  w.u32(s.vcycle_length);
  w.u32(static_cast<uint32_t>(s.cores.size()));
}

} // namespace

uint64_t encode_instr(const Instr& in) {
  uint64_t w = 0;
  switch (in.op) {
  case Op::Nop: return 0;
  case Op::Set: return kSet | reg(in.rd, kRd) | (uint64_t(in.imm) << kSetImm);
  case Op::Cust:
    if (in.aux >= kMaxFunctions)
      throw Error(ErrorKind::Compile, "custom function index out of range");
    return kCust | reg(in.rd, kRd) | reg(in.rs[0], kRs0) | reg(in.rs[1], kRs1) | reg(in.rs[2], kRs2) |
           reg(in.rs[3], kRs3) | (uint64_t(in.aux) << kFunct);
  case Op::Lld: return kLld | reg(in.rd, kRd) | reg(in.rs[0], kRs0) | (uint64_t(in.imm) << kImm);
  case Op::Lst:
    return kLst | reg(in.rs[0], kRs0) | reg(in.rs[1], kRs1) | reg(in.rs[2], kRs2) | (uint64_t(in.imm) << kImm);
  case Op::Gld: return kGld | reg(in.rd, kRd) | reg(in.rs[0], kRs0) | reg(in.rs[1], kRs1) | reg(in.rs[2], kRs2);
  case Op::Gst:
    return kGst | reg(in.rs[4], kRd) | reg(in.rs[0], kRs0) | reg(in.rs[1], kRs1) | reg(in.rs[2], kRs2) |
           reg(in.rs[3], kRs3);
  case Op::Send:
    if (in.aux > 0xFFFF)
      throw Error(ErrorKind::Compile, "SEND target out of range");
    return kSend | reg(in.remote, kRd) | reg(in.rs[0], kRs0) | (uint64_t(in.aux) << kImm);
  case Op::Expect:
    if (in.aux > 0xFFFF)
      throw Error(ErrorKind::Compile, "exception id out of range");
    return kExpect | reg(in.rs[0], kRs0) | reg(in.rs[1], kRs1) | (uint64_t(in.aux) << kImm);
  default: break;
  }
  const unsigned funct = static_cast<unsigned>(in.op) - static_cast<unsigned>(Op::Add);
  w = kAlu | reg(in.rd, kRd) | (uint64_t(funct) << kFunct);
  const unsigned n = source_count(in.op);
  const unsigned at[3] = {kRs0, kRs1, kRs2};
  for (unsigned k = 0; k < n && k < 3; ++k)
    w |= reg(in.rs[k], at[k]);
  return w;
}

Instr decode_instr(uint64_t w) {
  Instr in;
  const uint64_t opcode = w & 0xF;
  const uint16_t imm = static_cast<uint16_t>(w >> kImm);
  switch (opcode) {
  case kNop:
    if (w != 0)
      throw Error(ErrorKind::Load, "malformed instruction word");
    return in;
  case kAlu: {
    const uint64_t funct = w >> kFunct;
    if (funct > static_cast<unsigned>(Op::Mux) - static_cast<unsigned>(Op::Add))
      throw Error(ErrorKind::Load, "unknown ALU function");
    in.op = static_cast<Op>(static_cast<unsigned>(Op::Add) + funct);
    in.rd = field(w, kRd);
    const unsigned at[3] = {kRs0, kRs1, kRs2};
    for (unsigned k = 0; k < source_count(in.op); ++k)
      in.rs[k] = field(w, at[k]);
    return in;
  }
  case kSet:
    in.op = Op::Set;
    in.rd = field(w, kRd);
    in.imm = static_cast<uint16_t>(w >> kSetImm);
    return in;
  case kCust:
    in.op = Op::Cust;
    in.rd = field(w, kRd);
    in.rs = {field(w, kRs0), field(w, kRs1), field(w, kRs2), field(w, kRs3), kNoReg};
    in.aux = static_cast<uint32_t>(w >> kFunct);
    return in;
  case kLld:
    in.op = Op::Lld;
    in.rd = field(w, kRd);
    in.rs[0] = field(w, kRs0);
    in.imm = imm;
    in.aux = kNoRegion;
    return in;
  case kLst:
    in.op = Op::Lst;
    in.rs[0] = field(w, kRs0);
    in.rs[1] = field(w, kRs1);
    in.rs[2] = field(w, kRs2);
    in.imm = imm;
    in.aux = kNoRegion;
    return in;
  case kGld:
    in.op = Op::Gld;
    in.rd = field(w, kRd);
    in.rs[0] = field(w, kRs0);
    in.rs[1] = field(w, kRs1);
    in.rs[2] = field(w, kRs2);
    return in;
  case kGst:
    in.op = Op::Gst;
    in.rs = {field(w, kRs0), field(w, kRs1), field(w, kRs2), field(w, kRs3), field(w, kRd)};
    return in;
  case kSend:
    in.op = Op::Send;
    in.remote = field(w, kRd);
    in.rs[0] = field(w, kRs0);
    in.aux = imm;
    return in;
  case kExpect:
    in.op = Op::Expect;
    in.rs[0] = field(w, kRs0);
    in.rs[1] = field(w, kRs1);
    in.aux = imm;
    return in;
  default: throw Error(ErrorKind::Load, "unknown opcode " + std::to_string(opcode));
  }
}

std::vector<uint64_t> segment_beats(const Schedule& s) {
  std::vector<uint64_t> beats;
  for (const CoreProgram& c : s.cores) {
    Writer w;
    write_segment(w, c);
    beats.push_back((w.out.size() + 7) / 8);
  }
  return beats;
}

std::vector<uint8_t> emit_bootstream(Schedule& s) {
  assign_countdowns(s, segment_beats(s));
  Writer w;
  write_header(w, s);
  for (const CoreProgram& c : s.cores)
    write_segment(w, c);
  write_meta(w, s.meta);
  return std::move(w.out);
}

Schedule parse_bootstream(const std::vector<uint8_t>& bytes) {
  Reader r(bytes);
  Schedule s;
  r.tag("MNTB");
  const uint16_t version = r.u16("version");
  if (version != kBootstreamVersion)
    throw Error(ErrorKind::Load, "unsupported bootstream version " + std::to_string(version));
  s.grid.x = r.u16("grid width");
  s.grid.y = r.u16("grid height");
  s.privileged.x = r.u16("privileged x");
  s.privileged.y = r.u16("privileged y");
  s.def_use_latency = r.u32("def-use latency");
  s.hop_latency = r.u32("hop latency");
  s.vcycle_length = r.u32("vcycle length");
  const uint32_t n = r.u32("segment count");
  if (s.grid.x == 0 || s.grid.y == 0 || s.privileged.x >= s.grid.x || s.privileged.y >= s.grid.y)
    throw Error(ErrorKind::Load, "malformed bootstream: bad grid header");
  if (n > s.grid.cores())
    throw Error(ErrorKind::Load, "malformed bootstream: more segments than cores");
  for (uint32_t k = 0; k < n; ++k) {
    s.cores.push_back(read_segment(r));
    const Coord c = s.cores.back().coord;
    if (c.x >= s.grid.x || c.y >= s.grid.y)
      throw Error(ErrorKind::Load, "malformed bootstream: core outside the grid");
  }
  s.meta = read_meta(r);
  if (!r.done())
    throw Error(ErrorKind::Load, "malformed bootstream: trailing bytes");
  return s;
}

} // namespace mnt
