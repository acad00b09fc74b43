#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace bvsmp {

/// Instruction set used by the data-parallel kernels.
enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA supported by both this build and the running CPU.
Isa detected_isa();

/// ISA the kernels dispatch to: the override if set, else `BVSMP_ISA`
/// (`scalar` or `avx2`) from the environment, else `detected_isa()`.
/// Requesting an ISA the CPU lacks falls back to scalar.
Isa active_isa();

void set_isa_override(std::optional<Isa> isa);

/// Addresses one independent normal stream. Every standard normal is a pure
/// function of (seed, stream, path, step), so paths can be generated in any
/// order, on any thread, and regenerated later for replay.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
};

/// Path identifier for the sub-simulations launched from an outer path.
constexpr std::uint64_t inner_path_id(std::uint64_t outer, std::uint32_t inner) {
  return (outer << 32) | inner;
}

/// Stream tag for nested simulations launched at grid node `node`.
constexpr std::uint32_t nested_stream(std::uint32_t node) { return 0x80000000U | node; }

/// Scalar reference for a single draw.
double standard_normal(NoiseKey key, std::uint64_t path, std::uint64_t step);

/// Draws for steps first_step .. first_step + out.size() - 1 of one path.
void fill_standard_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step,
                           std::span<double> out);

/// Same, forcing a particular ISA (equivalence tests).
void fill_standard_normals(Isa isa, NoiseKey key, std::uint64_t path, std::uint64_t first_step,
                           std::span<double> out);

/// Raw Philox4x32-10 block, for known-answer tests.
struct PhiloxBlock {
  std::uint32_t w[4];
};
PhiloxBlock philox4x32_10(const std::uint32_t counter[4], const std::uint32_t key[2]);

}  // namespace bvsmp
