#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/drift_model.hpp"
#include "bvsmp/regression.hpp"
#include "bvsmp/sde_engine.hpp"
#include "bvsmp/variation.hpp"

namespace bvsmp {

/// Costs f(t, x, a), g(x) with the partials the adjoint and the Hamiltonian need.
struct Hamiltonian {
  std::function<double(double, double, double)> f, f_x, f_a;
  std::function<double(double)> g, g_x;
  DriftSpec drift;
  bool zero_running_cost = false;

  /// f = 0, g(x) = x^2.
  static Hamiltonian terminal_quadratic(DriftSpec drift);
};

struct HamiltonianValue {
  double value = 0.0;
  double partial_a = 0.0;
};

/// H = f + b y and d_a H = d_a f + b2(x) d_a b3(t, a) y.
HamiltonianValue hamiltonian_eval(const Hamiltonian& H, double t, double x, double y, double a);

/// max over a sample grid of (|f| + |f_x| + |f_a|) / (1 + x^2 + a^2).
double quadratic_growth_constant(const Hamiltonian& H, double T);

/// Per-path quantities at a set of nodes from which the pathwise adjoint payoff
///   Phi_{t,T} g_x(X_T) + int_t^T Phi_{t,s} f_x ds
/// follows for every recorded t. Arrays are [checkpoint * n_paths + path];
/// `running` holds int_0^t Phi_{0,s} f_x ds.
struct CheckpointSample {
  TimeGrid grid;
  std::vector<int> nodes;  // sorted, last one is grid.steps
  std::size_t n_paths = 0;
  std::vector<double> x, log_phi, running;

  std::size_t index(std::size_t c, std::size_t p) const { return c * n_paths + p; }
  double payoff(const Hamiltonian& H, std::size_t c, std::size_t p) const;
};

struct SamplerOptions {
  VariationMethod method = VariationMethod::localtime;
  double bandwidth = 0.0;  // localtime; 0 selects default_bandwidth
  std::optional<double> frozen_control;
  SimulationOptions sim;
};

/// Simulates with the generic engine, keeping only the checkpoint data.
CheckpointSample sample_checkpoints(const Hamiltonian& H, const ControlPolicy& policy,
                                    const TimeGrid& grid, std::vector<int> nodes,
                                    std::size_t n_paths, std::uint64_t seed,
                                    const SamplerOptions& opts);

/// From a stored ensemble and its first variation (log Phi_{0,k} per node).
CheckpointSample sample_checkpoints(const Hamiltonian& H, const PathEnsemble& ensemble,
                                    const VariationRecord& phi, std::vector<int> nodes);

/// From a corridor kernel run with track_phi; the running cost must be zero.
CheckpointSample sample_checkpoints(const TimeGrid& grid, const CorridorKernelArgs& args,
                                    const CorridorKernelOutput& out);

enum class AdjointMethod { nested, regression };

struct AdjointPoint {
  int node = 0;
  std::size_t path = 0;
  double x = 0.0;
  double y = 0.0;
  double se = 0.0;
};

struct AdjointEstimate {
  AdjointMethod method = AdjointMethod::regression;
  TimeGrid grid;
  std::size_t inner_paths = 0;
  std::vector<std::string> basis;  // per regression node
  std::vector<AdjointPoint> points;
  std::vector<std::string> warnings;
};

/// Y at every (node, path) of the sample: a regression of the payoff on X_t
/// per node. At T the estimate is g_x(X_T) with zero error.
struct AdjointRegression {
  AdjointEstimate estimate;
  std::vector<ConditionalFit> fits;  // per node (unused at T)
  std::vector<int> nodes;
};
AdjointRegression estimate_adjoint_regression(const Hamiltonian& H, const CheckpointSample& sample,
                                              const BasisConfig& basis = {});

/// State at which a nested estimate is wanted; `outer_id` keys the inner noise.
struct OuterState {
  int node = 0;
  double x = 0.0;
  std::uint64_t outer_id = 0;
};

struct NestedOptions {
  std::size_t inner_paths = 1000;
  std::uint64_t seed = 0;
  VariationMethod method = VariationMethod::localtime;
  double bandwidth = 0.0;
  std::optional<double> frozen_control;
  int threads = 1;
};

/// Inner Monte Carlo from each (t, X_t) for a Markov policy. Inner path j of
/// outer state i uses path id inner_path_id(outer_id, j) on stream
/// nested_stream(node). Corridor specs with the corridor (or alpha = 1)
/// policy, zero running cost and the closed-form method use the streaming
/// kernel.
AdjointEstimate estimate_adjoint_nested(const Hamiltonian& H, const ControlPolicy& policy,
                                        const TimeGrid& grid, std::span<const OuterState> states,
                                        const NestedOptions& opts);

struct NecessaryConditionResult {
  double min_residual = 0.0;
  double min_residual_plus_3se = 0.0;
  double violation_fraction = 0.0;      // residual < -3 SE
  double sign_relation_fraction = 0.0;  // sgn(Y) = sgn(X) where b2 != 0
  std::size_t n_samples = 0;
  std::size_t n_sign_samples = 0;
};

/// min over (t, path, beta) of d_a H (t, X, Y, alpha_hat) (beta - alpha_hat).
/// The residual SE is |b2 d_a b3 (beta - alpha_hat)| SE_Y.
NecessaryConditionResult necessary_condition_check(const Hamiltonian& H,
                                                   const AdjointEstimate& adjoint,
                                                   const ControlPolicy& policy,
                                                   std::span<const double> beta_grid);

/// 21 points -1, -0.9, ..., 1.
std::vector<double> default_beta_grid();

struct SymmetryOptions {
  std::size_t outer_paths = 10000;
  std::size_t inner_paths = 1000;
  std::uint64_t seed = 0;
  double noise_sign = 1.0;
  int threads = 1;
};

struct SymmetryStatistic {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t outer_paths = 0;
  std::size_t inner_paths = 0;
  std::size_t hits = 0;  // outer paths with tau <= T
};

/// I1 = E[Phi_{tau,T} X_T 1{tau <= T}], tau the first node at which X changes
/// sign or equals 0 (tau = 0 when x0 = 0). Outer paths run to tau; the
/// conditional expectation given (tau, X_tau) uses inner paths. 95% CI.
SymmetryStatistic symmetry_statistic(const CorridorKernelArgs& base, int steps,
                                     const SymmetryOptions& opts);

struct SMPReport {
  NecessaryConditionResult condition;
  SymmetryStatistic i1;
  // nested vs regression comparison
  std::size_t n_compared = 0;
  double max_abs_z = 0.0;
  std::size_t n_beyond_3se = 0;
  double z_std = 0.0;
  std::vector<std::string> warnings;
};

void write_smp_report_json(const SMPReport& report, std::ostream& os);
/// CSV with header t,x,y,se,method.
void write_adjoint_csv(std::span<const AdjointEstimate> estimates, std::ostream& os);
void write_adjoint_csv(const AdjointEstimate& estimate, std::ostream& os);

}  // namespace bvsmp
