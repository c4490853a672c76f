#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace mnt {

/// Sparse 16-bit word memory over a 48-bit address space; unwritten words read as zero.
class PagedMemory {
public:
  uint16_t read(uint64_t a) const {
    auto it = pages_.find(a >> kPageBits);
    return it == pages_.end() ? 0 : it->second[a & kPageMask];
  }
  void write(uint64_t a, uint16_t v) {
    auto& page = pages_[a >> kPageBits];
    if (page.empty())
      page.assign(size_t(1) << kPageBits, 0);
    page[a & kPageMask] = v;
  }

private:
  static constexpr unsigned kPageBits = 12;
  static constexpr uint64_t kPageMask = (uint64_t(1) << kPageBits) - 1;
  std::unordered_map<uint64_t, std::vector<uint16_t>> pages_;
};

} // namespace mnt
