#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ir/netlist.hpp"

namespace mnt::low {

using Reg = uint32_t;
inline constexpr Reg kNoReg = UINT32_MAX;

enum class Op : uint8_t {
  Nop,
  Add,
  Addc,
  Sub,
  And,
  Or,
  Xor,
  Sll,
  Srl,
  Sra,
  Seq,
  Sltu,
  Slts,
  Mux,
  Set,
  Cust,
  Lld,
  Lst,
  Gld,
  Gst,
  Send,
  Expect,
};

std::string_view op_name(Op op);
bool parse_op_name(std::string_view s, Op& op);

/// Number of register source operands read by `op`.
unsigned source_count(Op op);
bool has_dest(Op op);
bool is_privileged(Op op);
bool has_side_effect(Op op);
bool is_commutative(Op op);
/// Bitwise logic eligible for custom-function synthesis.
inline bool is_logic(Op op) { return op == Op::And || op == Op::Or || op == Op::Xor; }

/// Operand conventions:
///   ALU       rd = rs0 op rs1; ADDC adds the overflow bit of rs2
///   MUX       rd = rs0 != 0 ? rs1 : rs2
///   SET       rd = imm
///   CUST      rd = F[aux](rs0, rs1, rs2, rs3)
///   LLD       rd = spad[rs0 + imm]           (aux = memory region until layout)
///   LST       spad[rs0 + imm] = rs1 if rs2   (aux = memory region until layout)
///   GLD       rd = gmem[rs2:rs1:rs0]
///   GST       gmem[rs2:rs1:rs0] = rs3 if rs4
///   SEND      remote register `remote` of process `aux` receives rs0
///   EXPECT    raise exception `aux` when rs0 != rs1
struct Instr {
  Op op = Op::Nop;
  Reg rd = kNoReg;
  std::array<Reg, 5> rs{kNoReg, kNoReg, kNoReg, kNoReg, kNoReg};
  uint16_t imm = 0;
  uint32_t aux = 0;
  Reg remote = kNoReg;
  uint32_t origin = 0;

  bool operator==(const Instr&) const = default;
};

inline constexpr uint32_t kNoRegion = UINT32_MAX;

/// A 16-bit register value with the overflow bit written by ADD/ADDC.
struct Word {
  uint16_t value = 0;
  bool overflow = false;
};

/// Per-bit truth tables: bit k of table[i] is the output at bit i for inputs
/// a_i + 2 b_i + 4 c_i + 8 d_i == k.
struct CustomFunction {
  std::array<uint16_t, 16> table{};
  bool operator==(const CustomFunction&) const = default;
  bool operator<(const CustomFunction& o) const { return table < o.table; }
};

inline constexpr unsigned kMaxFunctions = 32;

uint16_t apply_custom(const CustomFunction& f, uint16_t a, uint16_t b, uint16_t c, uint16_t d);

/// Semantics of every register-to-register operation (not memory, SEND, EXPECT, CUST).
Word eval_alu(Op op, Word a, Word b, Word c, uint16_t imm);

struct StateWord {
  uint32_t reg = 0;   // RTL register
  uint16_t word = 0;  // word index within the register
  uint16_t init = 0;
  Reg current = kNoReg;
  Reg next = kNoReg;  // equal to `current` for a register that never changes
  bool operator==(const StateWord&) const = default;
};

struct RtlRegister {
  std::string name;
  unsigned width = 1;
  uint32_t first_state = 0;
  unsigned words() const { return word_count(width); }
  bool operator==(const RtlRegister&) const = default;
};

struct Memory {
  std::string name;
  unsigned width = 1;
  uint64_t depth = 2;
  MemKind kind = MemKind::Local;
  std::vector<uint16_t> init; // plane-major: word j of element i at j * depth + i; empty means zero
  uint64_t global_base = 0;   // word address, global memories only

  unsigned words() const { return word_count(width); }
  uint64_t size_words() const { return depth * words(); }
  bool operator==(const Memory&) const = default;
};

enum class ExceptionKind : uint8_t { Stop, Display };

struct ExceptionInfo {
  uint32_t eid = 0;
  ExceptionKind kind = ExceptionKind::Stop;
  uint64_t slot = 0; // display value location in global memory
  unsigned width = 0;
  bool operator==(const ExceptionInfo&) const = default;
};

struct Binding {
  uint32_t state = 0;
  Reg next = kNoReg;
  bool operator==(const Binding&) const = default;
};

struct Process {
  uint32_t id = 0;
  std::vector<Instr> body;
  std::vector<Binding> owned; // states this process commits
  std::vector<CustomFunction> functions;

  // Set by register allocation; registers are machine registers afterwards.
  bool allocated = false;
  std::vector<std::pair<Reg, uint16_t>> reg_init;
  std::vector<std::pair<uint16_t, uint16_t>> scratch_init;
  std::vector<std::pair<uint32_t, uint16_t>> memory_base; // region -> scratchpad base
  std::vector<std::pair<uint32_t, Reg>> state_regs;       // state -> machine register holding its current value
  uint32_t spill_words = 0;

  bool privileged() const;
  bool operator==(const Process&) const = default;
};

struct Program {
  std::string name;
  std::vector<RtlRegister> registers;
  std::vector<StateWord> states;
  std::vector<Memory> memories;
  std::vector<ExceptionInfo> exceptions;
  std::vector<Process> processes;
  uint64_t global_words = 0;
  Reg next_vreg = 0;
  uint32_t next_origin = 0;
  bool sends_materialized = false;

  Reg fresh() { return next_vreg++; }
  /// Index of the process holding privileged instructions, or -1.
  int privileged_process() const;
  /// Map from current-value register to state index (virtual registers only).
  std::vector<uint32_t> state_of_current() const;

  bool operator==(const Program&) const = default;
};

/// Structural checks; throws Error(Validation).
void validate_lower(const Program& p);

std::string print_instr(const Instr& in);
std::string print_lower(const Program& p);
Program parse_lower(std::string_view text);

} // namespace mnt::low
