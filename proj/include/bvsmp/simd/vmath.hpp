#pragma once

// Elementary functions over the backend interface. Every backend runs the
// same sequence of correctly rounded operations.

#include <cstdint>

namespace bvsmp::simd {

namespace vmath_detail {

inline constexpr double kLog2e = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93145751953125e-1;
inline constexpr double kLn2Lo = 1.42860682030941723212e-6;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kTwoPi = 6.28318530717958647693;
inline constexpr double kTwo52 = 4503599627370496.0;
inline constexpr std::uint64_t kExpMagic = 0x4330000000000000ULL;
inline constexpr std::uint64_t kMantissaMask = 0x000FFFFFFFFFFFFFULL;
inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ULL;
inline constexpr std::uint64_t kSignBit = 0x8000000000000000ULL;

// 1/k! for k = 0..20
inline constexpr double kInvFact[21] = {
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
    1.0 / 6227020800.0,
    1.0 / 87178291200.0,
    1.0 / 1307674368000.0,
    1.0 / 20922789888000.0,
    1.0 / 355687428096000.0,
    1.0 / 6402373705728000.0,
    1.0 / 121645100408832000.0,
    1.0 / 2432902008176640000.0,
};

}  // namespace vmath_detail

template <class B>
typename B::F copysign(typename B::F magnitude, typename B::F sign_source) {
  using namespace vmath_detail;
  const auto sign = B::band(B::as_bits(sign_source), B::set1u(kSignBit));
  const auto mag = B::band(B::as_bits(magnitude), B::set1u(~kSignBit));
  return B::as_double(B::bor(mag, sign));
}

template <class B>
typename B::F abs(typename B::F x) {
  return B::as_double(B::band(B::as_bits(x), B::set1u(~vmath_detail::kSignBit)));
}

// e^x, inputs clamped to [-708, 709].
template <class B>
typename B::F exp(typename B::F x) {
  using namespace vmath_detail;
  using F = typename B::F;
  x = B::min(B::max(x, B::set1(-708.0)), B::set1(709.0));
  const F k = B::round_nearest(B::mul(x, B::set1(kLog2e)));
  const F r = B::sub(B::sub(x, B::mul(k, B::set1(kLn2Hi))), B::mul(k, B::set1(kLn2Lo)));

  F p = B::set1(kInvFact[13]);
  for (int i = 12; i >= 0; --i) p = B::add(B::mul(p, r), B::set1(kInvFact[i]));

  // 2^k assembled in the exponent field; k + 1023 is in [1, 2046].
  const F biased = B::add(k, B::set1(kTwo52 + 1023.0));
  const F scale = B::as_double(B::template shl<52>(B::as_bits(biased)));
  return B::mul(p, scale);
}

// Natural log for positive normal inputs.
template <class B>
typename B::F log(typename B::F x) {
  using namespace vmath_detail;
  using F = typename B::F;
  const auto bits = B::as_bits(x);
  F e = B::sub(B::as_double(B::bor(B::template shr<52>(bits), B::set1u(kExpMagic))),
               B::set1(kTwo52 + 1023.0));
  F m = B::as_double(B::bor(B::band(bits, B::set1u(kMantissaMask)), B::set1u(kOneBits)));
  const auto big = B::gt(m, B::set1(kSqrt2));
  m = B::select(big, B::mul(m, B::set1(0.5)), m);
  e = B::select(big, B::add(e, B::set1(1.0)), e);

  const F f = B::sub(m, B::set1(1.0));
  const F s = B::div(f, B::add(f, B::set1(2.0)));
  const F s2 = B::mul(s, s);
  // atanh series: sum_{j>=1} s^{2j} / (2j + 1), |s| <= 0.1716
  F poly = B::set1(1.0 / 25.0);
  for (int j = 11; j >= 1; --j) poly = B::add(B::mul(poly, s2), B::set1(1.0 / (2.0 * j + 1.0)));
  poly = B::mul(poly, s2);
  const F two_s = B::add(s, s);
  const F log_m_tail = B::add(B::mul(two_s, poly), B::mul(e, B::set1(kLn2Lo)));
  return B::add(B::mul(e, B::set1(kLn2Hi)), B::add(two_s, log_m_tail));
}

// sin(2 pi u) and cos(2 pi u) for u in [0, 1).
template <class B>
void sincos_2pi(typename B::F u, typename B::F& sin_out, typename B::F& cos_out) {
  using namespace vmath_detail;
  using F = typename B::F;
  const F q = B::round_nearest(B::mul(u, B::set1(4.0)));
  const F r = B::sub(u, B::mul(q, B::set1(0.25)));
  const F a = B::mul(r, B::set1(kTwoPi));
  const F a2 = B::mul(a, a);

  F ps = B::set1(-kInvFact[19]);
  F pc = B::set1(kInvFact[20]);
  for (int k = 17; k >= 1; k -= 2) {
    const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    ps = B::add(B::mul(ps, a2), B::set1(sign * kInvFact[k]));
  }
  for (int k = 18; k >= 0; k -= 2) {
    const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
    pc = B::add(B::mul(pc, a2), B::set1(sign * kInvFact[k]));
  }
  const F s = B::mul(ps, a);
  const F c = pc;
  const F ns = B::sub(B::set1(0.0), s);
  const F nc = B::sub(B::set1(0.0), c);

  const F quadrant = B::sub(q, B::mul(B::set1(4.0), B::floor(B::mul(q, B::set1(0.25)))));
  const auto q1 = B::eq(quadrant, B::set1(1.0));
  const auto q2 = B::eq(quadrant, B::set1(2.0));
  const auto q3 = B::eq(quadrant, B::set1(3.0));
  sin_out = B::select(q1, c, B::select(q2, ns, B::select(q3, nc, s)));
  cos_out = B::select(q1, ns, B::select(q2, nc, B::select(q3, s, c)));
}

template <class B>
typename B::F tanh(typename B::F x) {
  using F = typename B::F;
  const F ax = B::min(abs<B>(x), B::set1(20.0));
  const F e2 = exp<B>(B::add(ax, ax));
  const F t = B::sub(B::set1(1.0), B::div(B::set1(2.0), B::add(e2, B::set1(1.0))));
  return copysign<B>(t, x);
}

}  // namespace bvsmp::simd
