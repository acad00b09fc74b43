#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bvsmp/rng.hpp"

namespace bvsmp {

/// Control laws the streaming corridor kernel understands. They mirror the
/// built-in `ControlPolicy` kinds of the generic engine.
enum class KernelPolicy : int {
  constant = 0,
  corridor,      // 1_{|x| > rho_policy}
  neg_corridor,  // -1_{|x| > rho_policy}
  rational_x,    // x / (1 + x^2)
  rational_1,    // 1 / (1 + x^2)
  sign_pos,      // sgn(x)
  sign_neg,      // -sgn(x)
  bm_functional  // int_0^t e^{-s} / (1 + B_s^2) ds
};

/// Streaming Euler-Maruyama for
///   dX = (mu tanh(X/M) + b2(X) alpha) dt + sigma dB,  b2(x) = -sgn(x) 1_{|x|>rho}
/// (b2 right-continuous at +rho), without materialising the paths.
struct CorridorKernelArgs {
  double mu = 0.5;
  double M = 4.0;
  double rho = 2.0;
  double sigma = 1.0;
  double dt = 0.005;

  KernelPolicy policy = KernelPolicy::corridor;
  double policy_value = 0.0;  // constant level
  double policy_rho = 2.0;    // corridor half-width used by the control

  NoiseKey noise;
  std::uint64_t path_base = 0;  // lane p uses path id path_base + p
  double noise_sign = 1.0;      // -1 mirrors the driving noise

  int start_step = 0;
  int end_step = 0;
  double x_start = 0.0;
  double brownian_start = 0.0;  // B at start_step (bm_functional state)
  double control_start = 0.0;   // bm_functional integral at start_step

  /// Nodes (absolute, sorted, within [start_step, end_step]) at which X and
  /// log Phi_{start,node} are recorded.
  std::vector<int> checkpoints;
  /// Accumulate the closed-form first variation (valid when alpha = 1
  /// wherever |X| > rho).
  bool track_phi = false;
  /// Record the first node after start at which X changes sign or hits 0.
  bool track_crossing = false;
};

struct CorridorKernelOutput {
  std::size_t n_paths = 0;
  std::vector<double> x;        // [checkpoint * n_paths + path]
  std::vector<double> log_phi;  // same layout, when track_phi
  std::vector<int> crossing_step;  // -1 when no crossing
  std::vector<double> crossing_x;
  std::vector<double> crossing_log_phi;

  double x_at(std::size_t checkpoint, std::size_t path) const { return x[checkpoint * n_paths + path]; }
  double log_phi_at(std::size_t checkpoint, std::size_t path) const {
    return log_phi[checkpoint * n_paths + path];
  }
};

/// Runs paths [0, n_paths) (ids path_base + p) on the active ISA, split over
/// `threads` workers. Output is independent of ISA and thread count.
CorridorKernelOutput run_corridor_kernel(const CorridorKernelArgs& args, std::size_t n_paths,
                                         int threads = 1);

CorridorKernelOutput run_corridor_kernel(Isa isa, const CorridorKernelArgs& args,
                                         std::size_t n_paths, int threads = 1);

/// b2bar(x) = int_0^x b2 = -max(|x| - rho, 0).
inline double corridor_b2_primitive(double x, double rho) {
  const double excess = (x < 0 ? -x : x) - rho;
  return excess > 0 ? -excess : 0.0;
}

}  // namespace bvsmp
