#pragma once

#include <cstdint>
#include <string>

namespace testdesigns {

inline const char* kCounter4 = R"(design counter
reg r 4 = 0
n:4 = add r, 4'h1
next r = n
)";

inline const char* kXorshift = R"(design xorshift
reg x 32 = 123456789
reg y 32 = 362436069
reg z 32 = 521288629
reg w 32 = 88675123
xs:32 = shl x, 5'd11
t:32 = xor x, xs
t8:32 = shr t, 5'd8
tt:32 = xor t, t8
w19:32 = shr w, 5'd19
ww:32 = xor w, w19
nw:32 = xor ww, tt
next x = y
next y = z
next z = w
next w = nw
)";

/// Scalar reference generator, independent of any netlist machinery.
struct Xorshift128 {
  uint32_t x = 123456789, y = 362436069, z = 521288629, w = 88675123;
  uint32_t next() {
    uint32_t t = x ^ (x << 11);
    x = y;
    y = z;
    z = w;
    w = w ^ (w >> 19) ^ (t ^ (t >> 8));
    return w;
  }
};

} // namespace testdesigns
