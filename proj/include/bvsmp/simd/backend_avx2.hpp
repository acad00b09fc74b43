#pragma once

// Only include from translation units compiled with -mavx2.
#if !defined(__AVX2__)
#error "backend_avx2.hpp requires AVX2 code generation"
#endif

#include <immintrin.h>

#include <cstdint>

namespace bvsmp::simd {

// Four double lanes. Mirrors ScalarBackend operation for operation.
struct Avx2Backend {
  static constexpr int width = 4;
  using F = __m256d;
  using U = __m256i;
  using Mask = __m256d;

  static F set1(double v) { return _mm256_set1_pd(v); }
  static U set1u(std::uint64_t v) { return _mm256_set1_epi64x(static_cast<long long>(v)); }
  static F load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, F v) { _mm256_storeu_pd(p, v); }
  static U iota_u(std::uint64_t base) {
    return _mm256_add_epi64(set1u(base), _mm256_set_epi64x(3, 2, 1, 0));
  }

  static F add(F a, F b) { return _mm256_add_pd(a, b); }
  static F sub(F a, F b) { return _mm256_sub_pd(a, b); }
  static F mul(F a, F b) { return _mm256_mul_pd(a, b); }
  static F div(F a, F b) { return _mm256_div_pd(a, b); }
  static F sqrt(F a) { return _mm256_sqrt_pd(a); }
  // Operand order matches ScalarBackend: min returns b only when b < a.
  static F min(F a, F b) { return _mm256_blendv_pd(a, b, _mm256_cmp_pd(b, a, _CMP_LT_OQ)); }
  static F max(F a, F b) { return _mm256_blendv_pd(a, b, _mm256_cmp_pd(a, b, _CMP_LT_OQ)); }
  static F round_nearest(F a) {
    return _mm256_round_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  }
  static F floor(F a) { return _mm256_floor_pd(a); }

  static Mask lt(F a, F b) { return _mm256_cmp_pd(a, b, _CMP_LT_OQ); }
  static Mask le(F a, F b) { return _mm256_cmp_pd(a, b, _CMP_LE_OQ); }
  static Mask gt(F a, F b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
  static Mask ge(F a, F b) { return _mm256_cmp_pd(a, b, _CMP_GE_OQ); }
  static Mask eq(F a, F b) { return _mm256_cmp_pd(a, b, _CMP_EQ_OQ); }
  static Mask mand(Mask a, Mask b) { return _mm256_and_pd(a, b); }
  static Mask mor(Mask a, Mask b) { return _mm256_or_pd(a, b); }
  static Mask mandnot(Mask a, Mask b) { return _mm256_andnot_pd(a, b); }
  static Mask mfalse() { return _mm256_setzero_pd(); }
  static F select(Mask m, F a, F b) { return _mm256_blendv_pd(b, a, m); }

  static U bxor(U a, U b) { return _mm256_xor_si256(a, b); }
  static U band(U a, U b) { return _mm256_and_si256(a, b); }
  static U bor(U a, U b) { return _mm256_or_si256(a, b); }
  static U addu(U a, U b) { return _mm256_add_epi64(a, b); }
  template <int N>
  static U shr(U a) {
    return _mm256_srli_epi64(a, N);
  }
  template <int N>
  static U shl(U a) {
    return _mm256_slli_epi64(a, N);
  }
  static U mul32(U a, U b) { return _mm256_mul_epu32(a, b); }

  static F as_double(U u) { return _mm256_castsi256_pd(u); }
  static U as_bits(F f) { return _mm256_castpd_si256(f); }
};

}  // namespace bvsmp::simd
