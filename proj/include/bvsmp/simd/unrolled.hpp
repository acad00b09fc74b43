#pragma once

#include <cstdint>

namespace bvsmp::simd {

// K registers of backend B per value, operated on elementwise.
template <class B, int K>
struct Unrolled {
  static constexpr int width = B::width * K;
  struct F {
    typename B::F v[K];
  };
  struct U {
    typename B::U v[K];
  };
  struct Mask {
    typename B::Mask v[K];
  };

  template <class R, class Op>
  static R map(Op op) {
    R r;
    for (int i = 0; i < K; ++i) r.v[i] = op(i);
    return r;
  }

  static F set1(double x) {
    return map<F>([&](int) { return B::set1(x); });
  }
  static U set1u(std::uint64_t x) {
    return map<U>([&](int) { return B::set1u(x); });
  }
  static F load(const double* p) {
    return map<F>([&](int i) { return B::load(p + i * B::width); });
  }
  static void store(double* p, F a) {
    for (int i = 0; i < K; ++i) B::store(p + i * B::width, a.v[i]);
  }
  static U iota_u(std::uint64_t base) {
    return map<U>([&](int i) { return B::iota_u(base + static_cast<std::uint64_t>(i) * B::width); });
  }

  static F add(F a, F b) {
    return map<F>([&](int i) { return B::add(a.v[i], b.v[i]); });
  }
  static F sub(F a, F b) {
    return map<F>([&](int i) { return B::sub(a.v[i], b.v[i]); });
  }
  static F mul(F a, F b) {
    return map<F>([&](int i) { return B::mul(a.v[i], b.v[i]); });
  }
  static F div(F a, F b) {
    return map<F>([&](int i) { return B::div(a.v[i], b.v[i]); });
  }
  static F sqrt(F a) {
    return map<F>([&](int i) { return B::sqrt(a.v[i]); });
  }
  static F min(F a, F b) {
    return map<F>([&](int i) { return B::min(a.v[i], b.v[i]); });
  }
  static F max(F a, F b) {
    return map<F>([&](int i) { return B::max(a.v[i], b.v[i]); });
  }
  static F round_nearest(F a) {
    return map<F>([&](int i) { return B::round_nearest(a.v[i]); });
  }
  static F floor(F a) {
    return map<F>([&](int i) { return B::floor(a.v[i]); });
  }

  static Mask lt(F a, F b) {
    return map<Mask>([&](int i) { return B::lt(a.v[i], b.v[i]); });
  }
  static Mask le(F a, F b) {
    return map<Mask>([&](int i) { return B::le(a.v[i], b.v[i]); });
  }
  static Mask gt(F a, F b) {
    return map<Mask>([&](int i) { return B::gt(a.v[i], b.v[i]); });
  }
  static Mask ge(F a, F b) {
    return map<Mask>([&](int i) { return B::ge(a.v[i], b.v[i]); });
  }
  static Mask eq(F a, F b) {
    return map<Mask>([&](int i) { return B::eq(a.v[i], b.v[i]); });
  }
  static Mask mand(Mask a, Mask b) {
    return map<Mask>([&](int i) { return B::mand(a.v[i], b.v[i]); });
  }
  static Mask mor(Mask a, Mask b) {
    return map<Mask>([&](int i) { return B::mor(a.v[i], b.v[i]); });
  }
  static Mask mandnot(Mask a, Mask b) {
    return map<Mask>([&](int i) { return B::mandnot(a.v[i], b.v[i]); });
  }
  static Mask mfalse() {
    return map<Mask>([&](int) { return B::mfalse(); });
  }
  static F select(Mask m, F a, F b) {
    return map<F>([&](int i) { return B::select(m.v[i], a.v[i], b.v[i]); });
  }

  static U bxor(U a, U b) {
    return map<U>([&](int i) { return B::bxor(a.v[i], b.v[i]); });
  }
  static U band(U a, U b) {
    return map<U>([&](int i) { return B::band(a.v[i], b.v[i]); });
  }
  static U bor(U a, U b) {
    return map<U>([&](int i) { return B::bor(a.v[i], b.v[i]); });
  }
  static U addu(U a, U b) {
    return map<U>([&](int i) { return B::addu(a.v[i], b.v[i]); });
  }
  template <int N>
  static U shr(U a) {
    return map<U>([&](int i) { return B::template shr<N>(a.v[i]); });
  }
  template <int N>
  static U shl(U a) {
    return map<U>([&](int i) { return B::template shl<N>(a.v[i]); });
  }
  static U mul32(U a, U b) {
    return map<U>([&](int i) { return B::mul32(a.v[i], b.v[i]); });
  }

  static F as_double(U u) {
    return map<F>([&](int i) { return B::as_double(u.v[i]); });
  }
  static U as_bits(F f) {
    return map<U>([&](int i) { return B::as_bits(f.v[i]); });
  }
};

}  // namespace bvsmp::simd
