#include "simd/kernels.hpp"

#if defined(__AVX2__)

#include "simd/kernel_impl.hpp"
#include "bvsmp/simd/backend_avx2.hpp"
#include "bvsmp/simd/unrolled.hpp"

namespace bvsmp::simd::avx2 {

bool available() { return true; }

void fill_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step, double* out,
                  std::size_t n) {
  impl::fill_normals<Unrolled<Avx2Backend, 2>>(key, path, first_step, out, n);
}

void corridor_paths(const CorridorKernelArgs& args, std::size_t begin, std::size_t end,
                    CorridorKernelOutput& out) {
  impl::corridor_paths<Unrolled<Avx2Backend, 4>>(args, begin, end, out);
}

}  // namespace bvsmp::simd::avx2

#else

#include <stdexcept>

namespace bvsmp::simd::avx2 {

bool available() { return false; }

void fill_normals(NoiseKey, std::uint64_t, std::uint64_t, double*, std::size_t) {
  throw std::logic_error("AVX2 kernels not built");
}

void corridor_paths(const CorridorKernelArgs&, std::size_t, std::size_t, CorridorKernelOutput&) {
  throw std::logic_error("AVX2 kernels not built");
}

}  // namespace bvsmp::simd::avx2

#endif
