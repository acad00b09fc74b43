#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/drift_model.hpp"
#include "bvsmp/rng.hpp"

namespace bvsmp {

/// Uniform grid t_k = k dt on [0, T].
struct TimeGrid {
  double T = 5.0;
  int steps = 1000;

  TimeGrid() = default;
  TimeGrid(double horizon, int n_steps);
  /// Grid with step as close as possible to `dt` (T / round(T / dt)).
  static TimeGrid from_dt(double horizon, double dt);

  double dt() const { return T / steps; }
  double t(int k) const { return k * dt(); }
  int nodes() const { return steps + 1; }
  /// Nearest node index to time t.
  int node_of(double time) const;
};

enum class PolicyKind {
  constant,
  corridor,
  neg_corridor,
  rational_x,
  rational_1,
  sign_pos,
  sign_neg,
  bm_functional,
  feedback
};

/// State carried by path-functional policies: the driving Brownian motion
/// and the running integral of the bm_functional control.
struct AuxState {
  double brownian = 0.0;
  double integral = 0.0;
};

/// alpha_t with values in A = [-1, 1].
struct ControlPolicy {
  PolicyKind kind = PolicyKind::constant;
  std::string id;
  double value = 0.0;  // constant level
  double rho = 2.0;    // corridor half-width
  std::function<double(double, double)> law;  // feedback kind; projected onto [-1, 1]

  double eval(double t, double x, const AuxState& aux) const;
  /// Left-point update of the auxiliary state over one step.
  void advance(AuxState& aux, double t, double dB, double dt) const;
  /// Control depends on (t, X_t) only.
  bool is_markov() const { return kind != PolicyKind::bm_functional; }
  std::optional<KernelPolicy> kernel_policy() const;

  static ControlPolicy constant(double a, std::string id = "");
  static ControlPolicy corridor(double rho, std::string id = "opt_corridor");
  static ControlPolicy neg_corridor(double rho, std::string id = "neg_corridor");
  static ControlPolicy rational_x();
  static ControlPolicy rational_1();
  static ControlPolicy sign_pos();
  static ControlPolicy sign_neg();
  static ControlPolicy bm_functional();
  static ControlPolicy feedback(std::function<double(double, double)> law, std::string id);
};

/// Where the noise of an ensemble comes from and where paths start.
struct SimulationOptions {
  double x0 = 0.0;
  std::uint32_t stream = 0;
  std::uint64_t first_path = 0;
  double noise_sign = 1.0;  // -1 drives the ensemble with -B
  int threads = 1;
};

/// N paths on a grid: states [path x node], increments dB [path x step],
/// controls [path x node] (the control used on [t_k, t_{k+1}); the last column
/// is the policy evaluated at T).
struct PathEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  SimulationOptions options;
  std::string policy_id;
  std::vector<double> states;
  std::vector<double> increments;
  std::vector<double> controls;

  double x0() const { return options.x0; }
  double state(std::size_t p, int k) const { return states[p * grid.nodes() + k]; }
  double increment(std::size_t p, int k) const { return increments[p * grid.steps + k]; }
  double control(std::size_t p, int k) const { return controls[p * grid.nodes() + k]; }
  std::span<const double> path(std::size_t p) const {
    return {states.data() + p * grid.nodes(), static_cast<std::size_t>(grid.nodes())};
  }
  std::span<const double> path_increments(std::size_t p) const {
    return {increments.data() + p * grid.steps, static_cast<std::size_t>(grid.steps)};
  }
  std::span<const double> path_controls(std::size_t p) const {
    return {controls.data() + p * grid.nodes(), static_cast<std::size_t>(grid.nodes())};
  }
};

/// One path from (start_step, x_start) to the end of the grid. Buffers hold
/// nodes start_step..steps (states, controls) and steps start_step..steps-1
/// (increments). Noise for step k is standard_normal(key, path_id, k).
void simulate_path(const DriftSpec& spec, const ControlPolicy& policy, const TimeGrid& grid,
                   NoiseKey key, std::uint64_t path_id, int start_step, double x_start,
                   AuxState aux, double noise_sign, std::span<double> states,
                   std::span<double> increments, std::span<double> controls);

PathEnsemble simulate(const DriftSpec& spec, const ControlPolicy& policy, const TimeGrid& grid,
                      std::size_t n_paths, std::uint64_t seed, const SimulationOptions& opts = {});

/// Replays the Euler recursion from the stored increments and controls.
std::vector<double> reconstruct_states(const DriftSpec& spec, const PathEnsemble& ensemble);

std::vector<PathEnsemble> simulate_paired(const DriftSpec& spec,
                                          const std::vector<ControlPolicy>& policies,
                                          const TimeGrid& grid, std::size_t n_paths,
                                          std::uint64_t seed, const SimulationOptions& opts = {});

using RunningCost = std::function<double(double t, double x, double a)>;
using TerminalCost = std::function<double(double x)>;

struct CostReport {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::string policy_id;
  std::uint64_t seed = 0;
  std::vector<double> per_path;
};

/// int_0^T f dt by the trapezoid rule (control held over each step) plus g(X_T).
CostReport evaluate_cost(const PathEnsemble& ensemble, const RunningCost& f, const TerminalCost& g);

/// Mean and standard error of a sample.
struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  double std_dev = 0.0;
  std::size_t n = 0;
};
SampleStats sample_stats(std::span<const double> values);

/// Statistics of a - b, pathwise.
SampleStats paired_difference(std::span<const double> a, std::span<const double> b);

struct FlowDifference {
  std::array<double, 3> powers{1.0, 2.0, 4.0};
  std::array<double, 3> mean{};  // E[sup_t |X^{x1} - X^{x2}|^p]
  std::array<double, 3> std_error{};
  std::size_t n_paths = 0;
};

/// Two initial points driven by the same noise.
FlowDifference flow_difference(const DriftSpec& spec, const ControlPolicy& policy,
                               const TimeGrid& grid, double x1, double x2, std::size_t n_paths,
                               std::uint64_t seed, int threads = 1);

/// CSV with header path_id,t,X,alpha.
void write_ensemble_csv(const PathEnsemble& ensemble, std::ostream& os);
void write_ensemble_binary(const PathEnsemble& ensemble, std::ostream& os);
PathEnsemble read_ensemble_binary(std::istream& is);

}  // namespace bvsmp
