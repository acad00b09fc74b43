#pragma once

#include <cstdint>

#include "bvsmp/simd/vmath.hpp"

namespace bvsmp::simd {

// Philox4x32-10 (Salmon et al.), each 32-bit word carried in a 64-bit lane.
template <class B>
struct Philox4x32 {
  using U = typename B::U;

  static constexpr std::uint64_t kMul0 = 0xD2511F53ULL;
  static constexpr std::uint64_t kMul1 = 0xCD9E8D57ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B9ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE85ULL;
  static constexpr std::uint64_t kLow32 = 0xFFFFFFFFULL;

  static void round(U& c0, U& c1, U& c2, U& c3, U k0, U k1) {
    const U low = B::set1u(kLow32);
    const U p0 = B::mul32(c0, B::set1u(kMul0));
    const U p1 = B::mul32(c2, B::set1u(kMul1));
    const U hi0 = B::template shr<32>(p0);
    const U lo0 = B::band(p0, low);
    const U hi1 = B::template shr<32>(p1);
    const U lo1 = B::band(p1, low);
    c0 = B::bxor(B::bxor(hi1, c1), k0);
    c1 = lo1;
    c2 = B::bxor(B::bxor(hi0, c3), k1);
    c3 = lo0;
  }

  // Ten rounds in place on the counter words.
  static void generate(U& c0, U& c1, U& c2, U& c3, U k0, U k1) {
    const U low = B::set1u(kLow32);
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k0 = B::band(B::addu(k0, B::set1u(kWeyl0)), low);
        k1 = B::band(B::addu(k1, B::set1u(kWeyl1)), low);
      }
      round(c0, c1, c2, c3, k0, k1);
    }
  }
};

// Uniform in (0, 1) from the top 52 bits of a 64-bit word: (m + 0.5) * 2^-52.
template <class B>
typename B::F uniform_open(typename B::U word) {
  using namespace vmath_detail;
  const auto m = B::template shr<12>(word);
  const auto as_float = B::sub(B::as_double(B::bor(m, B::set1u(kExpMagic))), B::set1(kTwo52));
  return B::mul(B::add(as_float, B::set1(0.5)), B::set1(1.0 / kTwo52));
}

// Two standard normals for counter (pair, path_lo, path_hi, stream) under a
// 64-bit seed. Box-Muller on two 52-bit uniforms.
template <class B>
void normal_pair(std::uint64_t seed, std::uint32_t stream, typename B::U pair,
                 typename B::U path, typename B::F& z0, typename B::F& z1) {
  using U = typename B::U;
  using F = typename B::F;
  const U low = B::set1u(0xFFFFFFFFULL);
  U c0 = B::band(pair, low);
  U c1 = B::band(path, low);
  U c2 = B::template shr<32>(path);
  U c3 = B::set1u(stream);
  Philox4x32<B>::generate(c0, c1, c2, c3, B::set1u(seed & 0xFFFFFFFFULL), B::set1u(seed >> 32));

  const U w01 = B::bor(B::template shl<32>(c0), c1);
  const U w23 = B::bor(B::template shl<32>(c2), c3);
  const F u1 = uniform_open<B>(w01);
  const F u2 = uniform_open<B>(w23);
  const F radius = B::sqrt(B::mul(B::set1(-2.0), log<B>(u1)));
  F s, c;
  sincos_2pi<B>(u2, s, c);
  z0 = B::mul(radius, c);
  z1 = B::mul(radius, s);
}

}  // namespace bvsmp::simd
