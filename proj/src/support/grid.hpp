#pragma once

#include <cstdint>
#include <string>

namespace mnt {

struct Coord {
  uint32_t x = 0;
  uint32_t y = 0;
  bool operator==(const Coord&) const = default;
};

struct GridDims {
  uint32_t x = 1;
  uint32_t y = 1;
  uint32_t cores() const { return x * y; }
  uint32_t index(Coord c) const { return c.y * x + c.x; }
  Coord coord(uint32_t i) const { return {i % x, i / x}; }
  bool operator==(const GridDims&) const = default;
};

/// Parses "WxH"; returns false on malformed input.
inline bool parse_grid(const std::string& s, GridDims& g) {
  auto pos = s.find_first_of("xX");
  if (pos == std::string::npos || pos == 0 || pos + 1 >= s.size())
    return false;
  try {
    size_t used = 0;
    unsigned long w = std::stoul(s.substr(0, pos), &used);
    if (used != pos)
      return false;
    unsigned long h = std::stoul(s.substr(pos + 1), &used);
    if (used != s.size() - pos - 1 || w == 0 || h == 0 || w > 256 || h > 256)
      return false;
    g = {static_cast<uint32_t>(w), static_cast<uint32_t>(h)};
    return true;
  } catch (...) {
    return false;
  }
}

} // namespace mnt
