#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ir/bits.hpp"
#include "support/error.hpp"

namespace mnt {

enum class NOp : uint8_t {
  And,
  Or,
  Xor,
  Not,
  Add,
  Sub,
  Shl,
  Shr,
  Sra,
  Eq,
  Ltu,
  Lts,
  Mux,
  Concat,
  Slice,
  Load,
  Next,
  Store,
  Expect,
  Display,
};

std::string_view nop_name(NOp op);

enum class MemKind : uint8_t { Local, Global };

struct StateRegister {
  std::string name;
  unsigned width = 1;
  BigUint init = 0;
};

struct MemoryRegion {
  std::string name;
  unsigned width = 1;
  uint64_t depth = 1;
  MemKind kind = MemKind::Local;
  std::vector<BigUint> init; // empty or exactly `depth` entries

  unsigned address_width() const;
};

struct Operand {
  enum class Kind : uint8_t { Wire, Reg, Const };
  Kind kind = Kind::Const;
  uint32_t index = 0; // wire or register index
  unsigned width = 1;
  BigUint value = 0; // constants only

  static Operand wire(uint32_t i, unsigned w) { return {Kind::Wire, i, w, 0}; }
  static Operand reg(uint32_t i, unsigned w) { return {Kind::Reg, i, w, 0}; }
  static Operand constant(BigUint v, unsigned w) { return {Kind::Const, 0, w, truncate(v, w)}; }

  bool operator==(const Operand&) const = default;
};

inline constexpr uint32_t kNone = UINT32_MAX;

struct NetlistInstr {
  NOp op = NOp::And;
  uint32_t result = kNone; // wire index for value-producing ops
  unsigned width = 0;      // result width (0 for sinks)
  std::vector<Operand> args;
  uint32_t target = kNone; // register (Next) or memory (Load/Store)
  unsigned lo = 0;         // Slice offset
  uint32_t eid = kNone;    // Expect/Display
  SourceLoc loc;

  bool is_sink() const { return op == NOp::Next || op == NOp::Store || op == NOp::Expect || op == NOp::Display; }
};

struct Wire {
  std::string name;
  unsigned width = 1;
  uint32_t def = kNone; // defining instruction
};

struct NetlistProgram {
  std::string name;
  std::vector<StateRegister> registers;
  std::vector<MemoryRegion> memories;
  std::vector<Wire> wires;
  std::vector<NetlistInstr> instructions;

  /// Instruction indices in a topological order of the combinational graph.
  std::vector<uint32_t> topo_order() const;
  std::vector<uint32_t> sinks() const;
  /// Next instruction per register, kNone if the register holds its value.
  std::vector<uint32_t> next_of() const;
  uint32_t exception_count() const;

  bool operator==(const NetlistProgram& o) const;
};

/// Parses `.mntl` text. Throws ParseError with line/column on any problem.
NetlistProgram parse_netlist(std::string_view text);

/// Checks width rules, SSA and acyclicity. Throws ParseError.
void validate_netlist(const NetlistProgram& p);

std::string print_netlist(const NetlistProgram& p);

std::string format_constant(const BigUint& v, unsigned width);

} // namespace mnt
