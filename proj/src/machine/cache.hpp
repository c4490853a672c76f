#pragma once

#include <cstdint>
#include <vector>

#include "support/paged_memory.hpp"

namespace mnt {

struct CacheStats {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t writebacks = 0;
};

/// Direct-mapped, write-allocate, write-back cache of 16-bit words in front of DRAM.
class Cache {
public:
  Cache(uint32_t bytes, uint32_t line_words, PagedMemory& dram);

  /// Returns true on a hit. Reads fill `data`; writes store it.
  bool access(uint64_t addr, bool write, uint16_t& data);
  /// Writes every dirty line back to DRAM; lines stay valid and clean.
  void flush();
  /// Coherent read without touching statistics or line state.
  uint16_t peek(uint64_t addr) const;

  const CacheStats& stats() const { return stats_; }
  uint32_t lines() const { return static_cast<uint32_t>(tags_.size()); }

private:
  uint64_t line_of(uint64_t addr) const { return addr / line_words_; }
  void write_back(uint32_t index);

  uint32_t line_words_;
  PagedMemory& dram_;
  std::vector<uint64_t> tags_;
  std::vector<uint8_t> valid_;
  std::vector<uint8_t> dirty_;
  std::vector<uint16_t> data_;
  std::vector<uint32_t> dirty_list_; // may hold lines already cleaned by eviction
  CacheStats stats_;
};

} // namespace mnt
