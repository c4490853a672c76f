#include "machine/cache.hpp"

#include "support/error.hpp"

namespace mnt {

Cache::Cache(uint32_t bytes, uint32_t line_words, PagedMemory& dram) : line_words_(line_words), dram_(dram) {
  if (line_words == 0 || bytes < 2 * line_words || bytes % (2 * line_words) != 0)
    throw Error(ErrorKind::Load, "cache size must be a positive multiple of the line size");
  const uint32_t n = bytes / 2 / line_words;
  tags_.assign(n, 0);
  valid_.assign(n, 0);
  dirty_.assign(n, 0);
  data_.assign(size_t(n) * line_words, 0);
}

void Cache::write_back(uint32_t index) {
  if (!valid_[index] || !dirty_[index])
    return;
  const uint64_t base = (tags_[index] * tags_.size() + index) * line_words_;
  for (uint32_t i = 0; i < line_words_; ++i)
    dram_.write(base + i, data_[size_t(index) * line_words_ + i]);
  dirty_[index] = 0;
  ++stats_.writebacks;
}

bool Cache::access(uint64_t addr, bool write, uint16_t& data) {
  const uint64_t line = line_of(addr);
  const uint32_t index = static_cast<uint32_t>(line % tags_.size());
  const uint64_t tag = line / tags_.size();
  const bool hit = valid_[index] && tags_[index] == tag;
  if (hit) {
    ++stats_.hits;
  } else {
    ++stats_.misses;
    write_back(index);
    const uint64_t base = line * line_words_;
    for (uint32_t i = 0; i < line_words_; ++i)
      data_[size_t(index) * line_words_ + i] = dram_.read(base + i);
    tags_[index] = tag;
    valid_[index] = 1;
    dirty_[index] = 0;
  }
  uint16_t& word = data_[size_t(index) * line_words_ + addr % line_words_];
  if (write) {
    word = data;
    if (!dirty_[index])
      dirty_list_.push_back(index);
    dirty_[index] = 1;
  } else {
    data = word;
  }
  return hit;
}

void Cache::flush() {
  for (uint32_t i : dirty_list_)
    write_back(i);
  dirty_list_.clear();
}

uint16_t Cache::peek(uint64_t addr) const {
  const uint64_t line = line_of(addr);
  const uint32_t index = static_cast<uint32_t>(line % tags_.size());
  if (valid_[index] && tags_[index] == line / tags_.size())
    return data_[size_t(index) * line_words_ + addr % line_words_];
  return dram_.read(addr);
}

} // namespace mnt
