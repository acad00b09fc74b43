#include <cmath>
#include <cstring>
#include <vector>

#include "bvsmp/corridor_app.hpp"
#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/rng.hpp"
#include "bvsmp/sde_engine.hpp"
#include "bvsmp/simd/backend_scalar.hpp"
#include "bvsmp/simd/vmath.hpp"
#include "doctest.h"

using namespace bvsmp;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

void require_identical(const CorridorKernelOutput& a, const CorridorKernelOutput& b) {
  REQUIRE(a.n_paths == b.n_paths);
  CHECK(same_bits(a.x, b.x));
  CHECK(same_bits(a.log_phi, b.log_phi));
  CHECK(a.crossing_step == b.crossing_step);
  CHECK(same_bits(a.crossing_x, b.crossing_x));
  CHECK(same_bits(a.crossing_log_phi, b.crossing_log_phi));
}

}  // namespace

TEST_CASE("philox4x32-10 known answers") {
  struct Kat {
    std::uint32_t ctr[4], key[2], out[4];
  };
  const Kat kats[] = {
      {{0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
      {{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
       {0xffffffff, 0xffffffff},
       {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
      {{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
       {0xa4093822, 0x299f31d0},
       {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
  };
  for (const auto& k : kats) {
    const auto b = philox4x32_10(k.ctr, k.key);
    for (int i = 0; i < 4; ++i) CHECK(b.w[i] == k.out[i]);
  }
}

TEST_CASE("vectorised elementary functions track libm") {
  using B = simd::ScalarBackend;
  double worst_exp = 0, worst_log = 0, worst_tanh = 0, worst_sc = 0;
  for (int i = -4000; i <= 4000; ++i) {
    const double x = i * 0.01;
    worst_exp = std::max(worst_exp, std::abs(simd::exp<B>(x) / std::exp(x) - 1.0));
    worst_tanh = std::max(worst_tanh, std::abs(simd::tanh<B>(x) - std::tanh(x)));
    if (i > 0) {
      const double y = i * 1e-3;
      worst_log = std::max(worst_log, std::abs(simd::log<B>(y) - std::log(y)));
    }
    const double u = (i + 4000) / 8001.0;
    double s = 0, c = 0;
    simd::sincos_2pi<B>(u, s, c);
    worst_sc = std::max(worst_sc, std::abs(s - std::sin(6.283185307179586 * u)));
    worst_sc = std::max(worst_sc, std::abs(c - std::cos(6.283185307179586 * u)));
  }
  CHECK(worst_exp < 1e-14);
  CHECK(worst_log < 1e-14);
  CHECK(worst_tanh < 1e-14);
  CHECK(worst_sc < 1e-14);
}

TEST_CASE("normals are a pure function of the address") {
  const NoiseKey key{7, 3};
  std::vector<double> a(37), b(37), c(20);
  fill_standard_normals(Isa::scalar, key, 11, 5, a);
  fill_standard_normals(Isa::avx2, key, 11, 5, b);
  fill_standard_normals(Isa::avx2, key, 11, 22, c);
  CHECK(same_bits(a, b));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == standard_normal(key, 11, 5 + i));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == a[17 + i]);

  std::vector<double> other(37);
  fill_standard_normals(NoiseKey{7, 4}, 11, 5, other);
  CHECK_FALSE(same_bits(a, other));
}

TEST_CASE("normal moments") {
  const std::size_t n = 200000;
  std::vector<double> z(n);
  fill_standard_normals(NoiseKey{1, 0}, 0, 0, z);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double v : z) {
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("corridor kernel is identical on every ISA and thread count") {
  CorridorParams params;
  params.T = 1.0;
  params.dt = 0.01;
  for (const auto& policy : policy_catalog(params.rho)) {
    CAPTURE(policy.id);
    auto args = params.kernel_args(policy);
    args.end_step = params.grid().steps;
    args.checkpoints = {0, 13, 50, 100};
    args.track_crossing = true;
    args.track_phi = policy.kind == PolicyKind::corridor;
    args.x_start = 2.5;
    const auto s1 = run_corridor_kernel(Isa::scalar, args, 203, 1);
    const auto v1 = run_corridor_kernel(Isa::avx2, args, 203, 1);
    const auto v3 = run_corridor_kernel(Isa::avx2, args, 203, 3);
    require_identical(s1, v1);
    require_identical(v1, v3);
  }
}

TEST_CASE("corridor kernel agrees with the generic engine") {
  CorridorParams params;
  params.T = 1.0;
  params.dt = 0.01;
  params.x0 = 1.5;
  const auto grid = params.grid();
  const auto spec = params.spec();
  for (const auto& policy : policy_catalog(params.rho)) {
    CAPTURE(policy.id);
    auto args = params.kernel_args(policy);
    args.x_start = params.x0;
    args.end_step = grid.steps;
    args.checkpoints = {grid.steps};
    const auto out = run_corridor_kernel(args, 64);
    SimulationOptions opts;
    opts.x0 = params.x0;
    const auto ens = simulate(spec, policy, grid, 64, params.seed, opts);
    double worst = 0;
    for (std::size_t p = 0; p < 64; ++p)
      worst = std::max(worst, std::abs(out.x_at(0, p) - ens.state(p, grid.steps)));
    CHECK(worst < 1e-9);
  }
}
