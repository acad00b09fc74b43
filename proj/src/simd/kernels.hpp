#pragma once

#include <cstddef>
#include <cstdint>

#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/rng.hpp"

namespace bvsmp::simd {

namespace scalar {
void fill_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step, double* out,
                  std::size_t n);
void corridor_paths(const CorridorKernelArgs& args, std::size_t begin, std::size_t end,
                    CorridorKernelOutput& out);
PhiloxBlock philox_block(const std::uint32_t counter[4], const std::uint32_t key[2]);
}  // namespace scalar

namespace avx2 {
bool available();
void fill_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step, double* out,
                  std::size_t n);
void corridor_paths(const CorridorKernelArgs& args, std::size_t begin, std::size_t end,
                    CorridorKernelOutput& out);
}  // namespace avx2

}  // namespace bvsmp::simd
