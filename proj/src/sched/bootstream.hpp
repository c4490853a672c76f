#pragma once

#include <cstdint>
#include <vector>

#include "sched/schedule.hpp"

namespace mnt {

inline constexpr uint16_t kBootstreamVersion = 1;

/// 64-bit machine word of one instruction in machine form.
uint64_t encode_instr(const low::Instr& in);
low::Instr decode_instr(uint64_t word);

/// Fills in COUNT_DOWN for every core and serializes the schedule.
std::vector<uint8_t> emit_bootstream(Schedule& s);

/// Inverse of emit_bootstream; throws Error(Load) on malformed input.
Schedule parse_bootstream(const std::vector<uint8_t>& bytes);

/// Size of each core segment in 8-byte beats, in stream order.
std::vector<uint64_t> segment_beats(const Schedule& s);

} // namespace mnt
