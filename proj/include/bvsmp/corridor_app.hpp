#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bvsmp/adjoint_smp.hpp"
#include "bvsmp/corridor_kernel.hpp"
#include "bvsmp/drift_model.hpp"
#include "bvsmp/sde_engine.hpp"

namespace bvsmp {

/// dX = (mu tanh(X/M) - sgn(X) 1_{|X|>rho} alpha) dt + sigma dB, cost E[X_T^2].
struct CorridorParams {
  double mu = 0.5;
  double M = 4.0;
  double rho = 2.0;
  double sigma = 1.0;
  double x0 = 0.0;
  double T = 5.0;
  double dt = 0.005;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 20240601;
  int threads = 1;

  /// One message per violated constraint, naming the field.
  std::vector<std::string> validate() const;
  TimeGrid grid() const;
  DriftSpec spec() const;
  /// Kernel arguments for a policy, without checkpoints.
  CorridorKernelArgs kernel_args(const ControlPolicy& policy) const;
};

/// The seven candidate controls: opt_corridor, rational_x, rational_1,
/// sign_pos, sign_neg, neg_corridor, bm_functional.
std::vector<ControlPolicy> policy_catalog(double rho);
/// Catalog entry by id, plus "zero" (alpha = 0) and "full" (alpha = 1).
std::optional<ControlPolicy> find_policy(const std::string& id, double rho);

struct FigureRow {
  std::string policy_id;
  double rho = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;  // 95%
  double ci_high = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

struct FigureTable {
  std::vector<FigureRow> rows;
  std::vector<std::vector<double>> costs;  // per row, per path X_T^2
};

/// Terminal cost of each policy on common random numbers.
FigureTable run_figure1(const CorridorParams& params, const std::vector<ControlPolicy>& policies);
FigureTable run_figure1(const CorridorParams& params);

/// Terminal cost of the corridor policy with exit corridor rho (drift and
/// control) for each rho of the grid, same noise for all rows.
FigureTable run_figure2(const CorridorParams& params, const std::vector<double>& rho_grid);

std::vector<double> default_rho_grid();

struct PairedComparison {
  std::string a, b;
  double mean_diff = 0.0;  // cost(a) - cost(b)
  double std_error = 0.0;
};

/// cost(row `ref`) - cost(row i) for every other row.
std::vector<PairedComparison> compare_to_row(const FigureTable& table, std::size_t ref);
/// cost(row i+1) - cost(row i).
std::vector<PairedComparison> adjacent_differences(const FigureTable& table);

void write_figure1_csv(const FigureTable& table, std::ostream& os);
void write_figure2_csv(const FigureTable& table, std::ostream& os);

struct SmpOptions {
  std::size_t outer_paths = 10000;
  std::size_t inner_paths = 1000;
  int n_nodes = 11;                  // uniform adjoint nodes including 0 and T
  std::size_t states_per_node = 20;  // nested checks per node
  std::size_t i1_outer = 10000;
  std::size_t i1_inner = 1000;
  int knots = 24;
  std::size_t cost_paths = 100000;
  bool run_i1 = true;
  bool run_costs = true;
};

struct SmpVerification {
  SMPReport report;
  AdjointEstimate regression;
  AdjointEstimate nested;
  AdjointEstimate regression_at_states;  // regression fit at the nested states
  std::vector<double> nested_regression_z;  // one per nested state
  std::vector<PairedComparison> cost_ordering;  // opt_corridor minus each policy
  std::vector<int> nodes;
};

/// Simulates under 1_{|X|>rho} with the closed-form first variation, fits the
/// adjoint by regression at uniform nodes, checks it against nested estimates
/// at states spread over the quantiles, runs the necessary-condition check on
/// a 21-point beta grid, estimates I1 and the paired cost ordering.
SmpVerification verify_optimal_control(const CorridorParams& params, const SmpOptions& opts = {});

struct MollificationRow {
  int n = 0;
  double mean_sup_abs = 0.0;
  double se_sup_abs = 0.0;
  double mean_sup_sq = 0.0;
  double se_sup_sq = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// E sup_t |X^n - X| and E sup_t |X^n - X|^2 under alpha = 1 and common
/// noise. With drop_b2 both dynamics use b2 = 0.
std::vector<MollificationRow> mollification_convergence(const CorridorParams& params,
                                                        const std::vector<int>& levels,
                                                        bool drop_b2 = false);

void write_mollification_csv(const std::vector<MollificationRow>& rows, std::ostream& os);

}  // namespace bvsmp
