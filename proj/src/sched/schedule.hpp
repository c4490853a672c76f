#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ir/lower.hpp"
#include "par/partition.hpp"
#include "support/grid.hpp"

namespace mnt {

struct MachineModel {
  uint32_t def_use_latency = 9;
  uint32_t hop_latency = 1;
  GridDims grid;
  Coord privileged;
  uint32_t registers = 2048;
  uint32_t imem_capacity = 4096;
  uint32_t scratchpad_words = 16384;
};

/// Directed link leaving core `core` along x (dim 0) or y (dim 1).
struct Link {
  uint32_t core = 0;
  uint8_t dim = 0;
  uint32_t id() const { return core * 2 + dim; }
  bool operator==(const Link&) const = default;
};

struct MessageRoute {
  Coord source;
  Coord dest;
  uint64_t depart = 0;
  std::vector<Link> links; // in traversal order; hop i holds links[i] during [depart + i*h, depart + (i+1)*h)
  uint64_t arrival = 0;
};

uint32_t hop_count(GridDims grid, Coord src, Coord dst);
MessageRoute route(Coord src, Coord dst, uint64_t depart, const MachineModel& m);

/// Where the value of one state word lives at run time.
struct StateLocation {
  bool constant = false;
  uint16_t value = 0; // constant states only
  uint32_t core = 0;  // grid index
  uint16_t reg = 0;
  bool operator==(const StateLocation&) const = default;
};

struct RegisterSymbol {
  std::string name;
  uint32_t width = 0;
  std::vector<StateLocation> words;
  bool operator==(const RegisterSymbol&) const = default;
};

struct MemorySymbol {
  std::string name;
  uint32_t width = 0;
  uint64_t depth = 0;
  bool global = false;
  uint32_t core = 0;        // local memories
  uint16_t base = 0;        // scratchpad base, local memories
  uint64_t global_base = 0; // global memories
  bool operator==(const MemorySymbol&) const = default;
};

/// Everything the host needs besides the per-core programs.
struct ScheduleMeta {
  std::string name;
  uint64_t global_words = 0;
  std::vector<std::pair<uint64_t, uint16_t>> global_init;
  std::vector<low::ExceptionInfo> exceptions;
  std::vector<RegisterSymbol> registers;
  std::vector<MemorySymbol> memories;
  bool operator==(const ScheduleMeta&) const = default;
};

struct CoreProgram {
  Coord coord;
  std::vector<low::Instr> slots; // machine form, NOP padding included
  std::vector<low::CustomFunction> functions;
  std::vector<std::pair<uint16_t, uint16_t>> reg_init;
  std::vector<std::pair<uint16_t, uint16_t>> scratch_init;
  uint32_t epilogue = 0;
  uint32_t sleep = 0;
  uint32_t countdown = 0;
  bool operator==(const CoreProgram&) const = default;
};

struct Schedule {
  GridDims grid;
  Coord privileged;
  uint32_t def_use_latency = 9;
  uint32_t hop_latency = 1;
  uint32_t vcycle_length = 0;
  std::vector<CoreProgram> cores; // occupied cores, ascending grid index
  ScheduleMeta meta;
  bool operator==(const Schedule&) const = default;
};

/// Keeps only the fields a machine instruction encodes.
low::Instr machine_form(const low::Instr& in);

/// Timed per-core streams for an allocated program. SEND aux becomes the
/// target core's grid index.
Schedule schedule(const low::Program& p, const Placement& pl, const MachineModel& m);

struct CoreBreakdown {
  Coord coord;
  uint32_t compute = 0;
  uint32_t send = 0;
  uint32_t nop = 0;
  uint32_t epilogue = 0;
  uint32_t sleep = 0;
};

struct Vcpl {
  uint32_t length = 0;
  std::vector<CoreBreakdown> cores;
};

Vcpl vcpl(const Schedule& s);

/// Boot countdowns for the cores in bootstream order, given each segment's
/// size in 8-byte beats; every core starts on cycle max(T) + 1.
void assign_countdowns(Schedule& s, const std::vector<uint64_t>& segment_beats);

} // namespace mnt
