#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bvsmp/drift_model.hpp"
#include "bvsmp/sde_engine.hpp"

namespace bvsmp {

enum class VariationMethod { ode, localtime, corridor_closed_form, finite_difference };

std::string_view method_name(VariationMethod m);
std::optional<VariationMethod> parse_variation_method(std::string_view name);

/// First variation Phi_{0,t_k} = dX_{t_k} / dx per path and node. Exponential
/// methods store log Phi; the finite-difference oracle stores Phi itself.
struct VariationRecord {
  VariationMethod method = VariationMethod::ode;
  TimeGrid grid;
  std::size_t n_paths = 0;
  bool exponential = true;
  std::vector<double> values;  // [path x node]: log Phi (exponential) or Phi

  double phi(std::size_t p, int k) const;
  /// Phi_{s,t} = Phi_{0,t} / Phi_{0,s}.
  double phi(std::size_t p, int s, int t) const;
  double log_phi(std::size_t p, int k) const;
  /// Ensemble mean of Phi_{0,t_k}.
  double mean_phi(int k) const;
};

/// Per-path building blocks. `states` and `controls` cover nodes
/// start_step..steps, `increments` steps start_step..steps-1; the output
/// receives log Phi_{start, k} for the same nodes. When `frozen_control` is
/// set it replaces the recorded control inside the exponent.
void log_phi_ode_path(const DriftSpec& smooth, const TimeGrid& grid, int start_step,
                      std::span<const double> states, std::span<const double> controls,
                      std::optional<double> frozen_control, std::span<double> out);

void log_phi_localtime_path(const DriftSpec& spec, const TimeGrid& grid, int start_step,
                            std::span<const double> states, std::span<const double> controls,
                            double bandwidth, std::optional<double> frozen_control,
                            std::span<double> out);

void log_phi_corridor_path(const CorridorModel& model, double sigma, const TimeGrid& grid,
                           int start_step, std::span<const double> states,
                           std::span<const double> increments, std::span<double> out);

/// exp(int (d_x b1n + b2n' b3) du) with left-point quadrature. The drift must be
/// smooth: b2 given by a density, no atoms.
VariationRecord first_variation_ode(const DriftSpec& smooth, const PathEnsemble& ensemble,
                                    std::optional<double> frozen_control = std::nullopt,
                                    int threads = 1);
VariationRecord first_variation_ode(const MollifiedSpec& mspec, const PathEnsemble& ensemble,
                                    std::optional<double> frozen_control = std::nullopt,
                                    int threads = 1);

/// exp(-(1/sigma^2) int int b(u, z, alpha_u) Lhat(du, dz)) with the b1 part
/// reduced to int d_x b1(X_u) du and the b2 b3 part by integration by parts.
VariationRecord first_variation_localtime(const DriftSpec& spec, const PathEnsemble& ensemble,
                                          double bandwidth,
                                          std::optional<double> frozen_control = std::nullopt,
                                          int threads = 1);

/// Closed form for the corridor model with alpha = 1 wherever |X| > rho:
///   log Phi_{0,t} = int_0^t mu/(M cosh^2(X/M)) ds
///                   + (2/sigma^2)(b2bar(X_t) - b2bar(x0) + int 1_{|X|>rho} sgn(X) mu tanh(X/M) ds
///                   - int 1_{|X|>rho} ds + int 1_{|X|>rho} sgn(X) sigma dB).
VariationRecord first_variation_corridor_cf(const DriftSpec& corridor, const PathEnsemble& ensemble);

/// (X^{x+h} - X^{x-h}) / 2h under common noise.
VariationRecord finite_difference_flow(const DriftSpec& spec, const ControlPolicy& policy,
                                       const TimeGrid& grid, double x, double h,
                                       std::size_t n_paths, std::uint64_t seed, int threads = 1);

struct MalliavinRecord {
  std::size_t path = 0;
  int t_node = 0;
  VariationMethod method = VariationMethod::ode;
  std::vector<double> values;  // D_t X_s for s = t_node..steps
};

/// D_t X_s = Phi_{t,s} (int_t^s b2(X_u) D_t b3(u) Phi_{t,u}^{-1} du + sigma).
/// D_t b3 vanishes for feedback controls; for the bm_functional control
/// D_t alpha_u = int_t^u e^{-r} (-2 B_r) / (1 + B_r^2)^2 dr.
MalliavinRecord malliavin_derivative(const DriftSpec& spec, const ControlPolicy& policy,
                                     const PathEnsemble& ensemble, const VariationRecord& phi,
                                     std::size_t path, int t_node);

/// CSV with header path_id,s,t,phi,method for Phi_{s,t} at the given node pairs.
void write_variation_csv(const VariationRecord& rec, std::span<const std::pair<int, int>> pairs,
                         std::ostream& os);

}  // namespace bvsmp
