#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mnt {

/// Netlist values are at most 256 bits wide; arithmetic wraps modulo 2^256
/// and is truncated to the declared width afterwards.
using BigUint = boost::multiprecision::uint256_t;

inline constexpr unsigned kMaxWidth = 256;
inline constexpr unsigned kWordBits = 16;

inline unsigned word_count(unsigned width) { return (width + kWordBits - 1) / kWordBits; }

inline BigUint mask_of(unsigned width) {
  if (width >= kMaxWidth)
    return ~BigUint(0);
  return (BigUint(1) << width) - 1;
}

inline BigUint truncate(const BigUint& v, unsigned width) { return v & mask_of(width); }

inline uint16_t word_of(const BigUint& v, unsigned index) {
  if (index * kWordBits >= kMaxWidth)
    return 0;
  return static_cast<uint16_t>(static_cast<unsigned>((v >> (index * kWordBits)) & 0xFFFFu));
}

inline BigUint from_words(std::span<const uint16_t> words) {
  BigUint v = 0;
  for (size_t i = words.size(); i-- > 0;)
    v = (v << kWordBits) | BigUint(words[i]);
  return v;
}

inline std::vector<uint16_t> to_words(const BigUint& v, unsigned width) {
  std::vector<uint16_t> out(word_count(width));
  for (unsigned i = 0; i < out.size(); ++i)
    out[i] = word_of(v, i);
  return out;
}

/// Lowercase hex without prefix; "0" for zero.
inline std::string to_hex(const BigUint& v) {
  if (v == 0)
    return "0";
  static const char* digits = "0123456789abcdef";
  std::string s;
  BigUint x = v;
  while (x != 0) {
    s.push_back(digits[static_cast<unsigned>(x & 0xF)]);
    x >>= 4;
  }
  return {s.rbegin(), s.rend()};
}

/// Two's-complement reinterpretation test: bit (width-1) set.
inline bool sign_bit(const BigUint& v, unsigned width) { return bit_test(v, width - 1); }

} // namespace mnt
