#pragma once

// Kernel bodies shared by the per-ISA translation units, one backend each.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/simd/philox.hpp"
#include "bvsmp/simd/vmath.hpp"

namespace bvsmp::simd::impl {

template <class B>
[[gnu::flatten]] void fill_normals(NoiseKey key, std::uint64_t path, std::uint64_t first_step, double* out,
                  std::size_t n) {
  constexpr int W = B::width;
  if (n == 0) return;
  const std::uint64_t last_step = first_step + n - 1;
  const std::uint64_t pair_first = first_step >> 1;
  const std::uint64_t pair_last = last_step >> 1;
  alignas(32) double z0s[W];
  alignas(32) double z1s[W];
  for (std::uint64_t p = pair_first; p <= pair_last; p += W) {
    typename B::F z0, z1;
    normal_pair<B>(key.seed, key.stream, B::iota_u(p), B::set1u(path), z0, z1);
    B::store(z0s, z0);
    B::store(z1s, z1);
    for (int l = 0; l < W && p + l <= pair_last; ++l) {
      const std::uint64_t s0 = 2 * (p + l);
      if (s0 >= first_step && s0 <= last_step) out[s0 - first_step] = z0s[l];
      if (s0 + 1 >= first_step && s0 + 1 <= last_step) out[s0 + 1 - first_step] = z1s[l];
    }
  }
}

template <class B>
typename B::F policy_value(const CorridorKernelArgs& a, typename B::F x, typename B::F integral) {
  using F = typename B::F;
  const F one = B::set1(1.0);
  const F zero = B::set1(0.0);
  switch (a.policy) {
    case KernelPolicy::constant:
      return B::set1(a.policy_value);
    case KernelPolicy::corridor:
      return B::select(B::gt(abs<B>(x), B::set1(a.policy_rho)), one, zero);
    case KernelPolicy::neg_corridor:
      return B::select(B::gt(abs<B>(x), B::set1(a.policy_rho)), B::set1(-1.0), zero);
    case KernelPolicy::rational_x:
      return B::div(x, B::add(one, B::mul(x, x)));
    case KernelPolicy::rational_1:
      return B::div(one, B::add(one, B::mul(x, x)));
    case KernelPolicy::sign_pos:
      return B::select(B::gt(x, zero), one, B::select(B::lt(x, zero), B::set1(-1.0), zero));
    case KernelPolicy::sign_neg:
      return B::select(B::gt(x, zero), B::set1(-1.0), B::select(B::lt(x, zero), one, zero));
    case KernelPolicy::bm_functional:
      return integral;
  }
  return zero;
}

template <class B>
typename B::F b2_primitive(typename B::F x, typename B::F rho) {
  const auto excess = B::sub(abs<B>(x), rho);
  return B::select(B::gt(excess, B::set1(0.0)), B::sub(B::set1(0.0), excess), B::set1(0.0));
}

template <class B>
[[gnu::flatten]] void corridor_chunk(const CorridorKernelArgs& a, std::size_t p0, std::size_t lanes,
                    CorridorKernelOutput& out) {
  using F = typename B::F;
  using Mask = typename B::Mask;
  constexpr int W = B::width;

  const F mu = B::set1(a.mu);
  const F M = B::set1(a.M);
  const F rho = B::set1(a.rho);
  const F neg_rho = B::set1(-a.rho);
  const F sigma = B::set1(a.sigma);
  const F dt = B::set1(a.dt);
  const F sqrt_dt = B::set1(std::sqrt(a.dt));
  const F noise_sign = B::set1(a.noise_sign);
  const F mu_over_M = B::set1(a.mu / a.M);
  const F two_over_s2 = B::set1(2.0 / (a.sigma * a.sigma));
  const F one = B::set1(1.0);
  const F zero = B::set1(0.0);
  const F minus_one = B::set1(-1.0);

  const auto path = B::iota_u(a.path_base + p0);
  F x = B::set1(a.x_start);
  F brownian = B::set1(a.brownian_start);
  F integral = B::set1(a.control_start);
  const F b2bar_start = b2_primitive<B>(x, rho);
  F i_b1 = zero, i_tanh = zero, i_occ = zero, i_db = zero;

  auto log_phi = [&]() {
    const F bracket =
        B::add(B::sub(B::add(B::sub(b2_primitive<B>(x, rho), b2bar_start), i_tanh), i_occ), i_db);
    return B::add(i_b1, B::mul(two_over_s2, bracket));
  };

  const bool start_positive = a.x_start > 0;
  const bool start_zero = a.x_start == 0;
  Mask crossed = B::gt(B::set1(start_zero ? 1.0 : 0.0), zero);
  F cross_step = B::set1(start_zero ? static_cast<double>(a.start_step) : -1.0);
  F cross_x = B::set1(start_zero ? a.x_start : 0.0);
  F cross_lphi = zero;

  alignas(64) double buf_x[W];
  alignas(64) double buf_l[W];
  const std::size_t n = out.n_paths;
  std::size_t ci = 0;
  auto record = [&](int node) {
    while (ci < a.checkpoints.size() && a.checkpoints[ci] == node) {
      B::store(buf_x, x);
      if (a.track_phi) B::store(buf_l, log_phi());
      for (std::size_t l = 0; l < lanes; ++l) {
        out.x[ci * n + p0 + l] = buf_x[l];
        if (a.track_phi) out.log_phi[ci * n + p0 + l] = buf_l[l];
      }
      ++ci;
    }
  };
  record(a.start_step);

  F z_odd = zero;
  for (int k = a.start_step; k < a.end_step; ++k) {
    F z;
    if ((k & 1) == 0 || k == a.start_step) {
      F z0, z1;
      normal_pair<B>(a.noise.seed, a.noise.stream, B::set1u(static_cast<std::uint64_t>(k) >> 1),
                     path, z0, z1);
      z = (k & 1) == 0 ? z0 : z1;
      z_odd = z1;
    } else {
      z = z_odd;
    }
    const F db = B::mul(B::mul(sqrt_dt, z), noise_sign);
    const F alpha = policy_value<B>(a, x, integral);
    const F th = tanh<B>(B::div(x, M));
    const F b2 = B::select(B::ge(x, rho), minus_one, B::select(B::lt(x, neg_rho), one, zero));
    const F drift = B::add(B::mul(mu, th), B::mul(b2, alpha));

    if (a.track_phi) {
      const F c = B::sub(zero, b2);
      i_b1 = B::add(i_b1, B::mul(B::mul(mu_over_M, B::sub(one, B::mul(th, th))), dt));
      i_tanh = B::add(i_tanh, B::mul(B::mul(B::mul(c, mu), th), dt));
      i_occ = B::add(i_occ, B::mul(B::mul(c, c), dt));
      i_db = B::add(i_db, B::mul(B::mul(c, sigma), db));
    }
    if (a.policy == KernelPolicy::bm_functional) {
      const F weight = B::set1(std::exp(-static_cast<double>(k) * a.dt));
      const F density = B::div(weight, B::add(one, B::mul(brownian, brownian)));
      integral = B::add(integral, B::mul(density, dt));
      brownian = B::add(brownian, db);
    }
    x = B::add(B::add(x, B::mul(drift, dt)), B::mul(sigma, db));

    const int node = k + 1;
    if (a.track_crossing) {
      const Mask flipped = start_positive ? B::lt(x, zero) : B::gt(x, zero);
      const Mask hit = B::mandnot(crossed, B::mor(B::eq(x, zero), flipped));
      cross_step = B::select(hit, B::set1(static_cast<double>(node)), cross_step);
      cross_x = B::select(hit, x, cross_x);
      if (a.track_phi) cross_lphi = B::select(hit, log_phi(), cross_lphi);
      crossed = B::mor(crossed, hit);
    }
    record(node);
  }

  if (a.track_crossing) {
    alignas(32) double s[W], cx[W], cl[W];
    B::store(s, cross_step);
    B::store(cx, cross_x);
    B::store(cl, cross_lphi);
    for (std::size_t l = 0; l < lanes; ++l) {
      out.crossing_step[p0 + l] = static_cast<int>(s[l]);
      out.crossing_x[p0 + l] = cx[l];
      out.crossing_log_phi[p0 + l] = cl[l];
    }
  }
}

template <class B>
void corridor_paths(const CorridorKernelArgs& a, std::size_t begin, std::size_t end,
                    CorridorKernelOutput& out) {
  constexpr std::size_t W = B::width;
  for (std::size_t p = begin; p < end; p += W) {
    corridor_chunk<B>(a, p, std::min(W, end - p), out);
  }
}

}  // namespace bvsmp::simd::impl
