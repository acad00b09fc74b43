#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace bvsmp::simd {

// Single-lane backend. Every member is one IEEE-754 basic operation (or a bit
// manipulation), so a kernel written against this interface produces the same
// bits as the same kernel instantiated on a wider backend.
struct ScalarBackend {
  static constexpr int width = 1;
  using F = double;
  using U = std::uint64_t;
  using Mask = bool;

  static F set1(double v) { return v; }
  static U set1u(std::uint64_t v) { return v; }
  static F load(const double* p) { return *p; }
  static void store(double* p, F v) { *p = v; }
  static U iota_u(std::uint64_t base) { return base; }

  static F add(F a, F b) { return a + b; }
  static F sub(F a, F b) { return a - b; }
  static F mul(F a, F b) { return a * b; }
  static F div(F a, F b) { return a / b; }
  static F sqrt(F a) { return std::sqrt(a); }
  static F min(F a, F b) { return b < a ? b : a; }
  static F max(F a, F b) { return a < b ? b : a; }
  static F round_nearest(F a) { return std::nearbyint(a); }
  static F floor(F a) { return std::floor(a); }

  static Mask lt(F a, F b) { return a < b; }
  static Mask le(F a, F b) { return a <= b; }
  static Mask gt(F a, F b) { return a > b; }
  static Mask ge(F a, F b) { return a >= b; }
  static Mask eq(F a, F b) { return a == b; }
  static Mask mand(Mask a, Mask b) { return a && b; }
  static Mask mor(Mask a, Mask b) { return a || b; }
  static Mask mandnot(Mask a, Mask b) { return !a && b; }
  static Mask mfalse() { return false; }
  static F select(Mask m, F a, F b) { return m ? a : b; }

  static U bxor(U a, U b) { return a ^ b; }
  static U band(U a, U b) { return a & b; }
  static U bor(U a, U b) { return a | b; }
  static U addu(U a, U b) { return a + b; }
  template <int N>
  static U shr(U a) {
    return a >> N;
  }
  template <int N>
  static U shl(U a) {
    return a << N;
  }
  // Full 64-bit product of the low 32 bits of each operand.
  static U mul32(U a, U b) { return (a & 0xffffffffULL) * (b & 0xffffffffULL); }

  static F as_double(U u) {
    F f;
    std::memcpy(&f, &u, sizeof f);
    return f;
  }
  static U as_bits(F f) {
    U u;
    std::memcpy(&u, &f, sizeof u);
    return u;
  }
};

}  // namespace bvsmp::simd
