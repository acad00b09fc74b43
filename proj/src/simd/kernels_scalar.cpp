#include "simd/kernel_impl.hpp"
#include "simd/kernels.hpp"
#include "bvsmp/simd/backend_scalar.hpp"
#include "bvsmp/simd/unrolled.hpp"

namespace bvsmp::simd::scalar {

void fill_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step, double* out,
                  std::size_t n) {
  impl::fill_normals<Unrolled<ScalarBackend, 2>>(key, path, first_step, out, n);
}

void corridor_paths(const CorridorKernelArgs& args, std::size_t begin, std::size_t end,
                    CorridorKernelOutput& out) {
  impl::corridor_paths<Unrolled<ScalarBackend, 4>>(args, begin, end, out);
}

PhiloxBlock philox_block(const std::uint32_t counter[4], const std::uint32_t key[2]) {
  std::uint64_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
  Philox4x32<ScalarBackend>::generate(c0, c1, c2, c3, key[0], key[1]);
  return PhiloxBlock{{static_cast<std::uint32_t>(c0), static_cast<std::uint32_t>(c1),
                      static_cast<std::uint32_t>(c2), static_cast<std::uint32_t>(c3)}};
}

}  // namespace bvsmp::simd::scalar
