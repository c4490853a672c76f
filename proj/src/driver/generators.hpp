#pragma once

#include <cstdint>
#include <string>

namespace mnt {

struct RandomDagParams {
  uint64_t seed = 1;
  unsigned instructions = 200; // approximate netlist instruction count
  unsigned registers = 10;
  unsigned max_width = 64;
  bool memories = true;
  bool global_memory = false;
  bool expects = true;
  bool displays = true;
  bool logic_heavy = false; // 16-bit bitwise logic with constants
};

/// `.mntl` sources for the benchmark generators.
std::string gen_counters(unsigned count, unsigned width = 16);
std::string gen_fifo(uint64_t bytes);
std::string gen_ram(uint64_t bytes);
std::string gen_random_dag(const RandomDagParams& params);

/// The four-operand bitwise chain (a&0xF)|b|(c&0x3)|(d^0x1) over 16-bit registers.
std::string gen_logic_chain();

} // namespace mnt
