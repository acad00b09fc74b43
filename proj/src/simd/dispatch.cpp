#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>

#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/parallel.hpp"
#include "bvsmp/rng.hpp"
#include "simd/kernels.hpp"

namespace bvsmp {

namespace {

std::mutex g_override_mutex;
std::optional<Isa> g_override;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa usable(Isa requested) {
  if (requested == Isa::avx2 && detected_isa() != Isa::avx2) return Isa::scalar;
  return requested;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = (simd::avx2::available() && cpu_has_avx2()) ? Isa::avx2 : Isa::scalar;
  return isa;
}

Isa active_isa() {
  {
    std::lock_guard<std::mutex> lock(g_override_mutex);
    if (g_override) return usable(*g_override);
  }
  if (const char* env = std::getenv("BVSMP_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2") return usable(Isa::avx2);
  }
  return detected_isa();
}

void set_isa_override(std::optional<Isa> isa) {
  std::lock_guard<std::mutex> lock(g_override_mutex);
  g_override = isa;
}

double standard_normal(NoiseKey key, std::uint64_t path, std::uint64_t step) {
  double z[2];
  simd::scalar::fill_normals(key, path, step & ~std::uint64_t{1}, z, 2);
  return z[step & 1];
}

void fill_standard_normals(Isa isa, NoiseKey key, std::uint64_t path, std::uint64_t first_step,
                           std::span<double> out) {
  if (usable(isa) == Isa::avx2) {
    simd::avx2::fill_normals(key, path, first_step, out.data(), out.size());
  } else {
    simd::scalar::fill_normals(key, path, first_step, out.data(), out.size());
  }
}

void fill_standard_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step,
                           std::span<double> out) {
  fill_standard_normals(active_isa(), key, path, first_step, out);
}

PhiloxBlock philox4x32_10(const std::uint32_t counter[4], const std::uint32_t key[2]) {
  return simd::scalar::philox_block(counter, key);
}

CorridorKernelOutput run_corridor_kernel(Isa isa, const CorridorKernelArgs& args,
                                         std::size_t n_paths, int threads) {
  if (args.start_step < 0 || args.end_step < args.start_step) {
    throw std::invalid_argument("corridor kernel: invalid step range");
  }
  for (std::size_t i = 0; i < args.checkpoints.size(); ++i) {
    const int c = args.checkpoints[i];
    if (c < args.start_step || c > args.end_step || (i > 0 && c < args.checkpoints[i - 1])) {
      throw std::invalid_argument("corridor kernel: checkpoints must be sorted and in range");
    }
  }
  CorridorKernelOutput out;
  out.n_paths = n_paths;
  out.x.assign(args.checkpoints.size() * n_paths, 0.0);
  if (args.track_phi) out.log_phi.assign(args.checkpoints.size() * n_paths, 0.0);
  if (args.track_crossing) {
    out.crossing_step.assign(n_paths, -1);
    out.crossing_x.assign(n_paths, 0.0);
    out.crossing_log_phi.assign(n_paths, 0.0);
  }
  const bool vector = usable(isa) == Isa::avx2;
  parallel_for_blocks(n_paths, 256, threads, [&](std::size_t begin, std::size_t end) {
    if (vector) {
      simd::avx2::corridor_paths(args, begin, end, out);
    } else {
      simd::scalar::corridor_paths(args, begin, end, out);
    }
  });
  return out;
}

CorridorKernelOutput run_corridor_kernel(const CorridorKernelArgs& args, std::size_t n_paths,
                                         int threads) {
  return run_corridor_kernel(active_isa(), args, n_paths, threads);
}

}  // namespace bvsmp
