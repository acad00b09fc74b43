#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "bvsmp/drift_model.hpp"
#include "bvsmp/sde_engine.hpp"

namespace bvsmp {

/// eps = c * sigma * sqrt(dt) * kappa.
double default_bandwidth(double sigma, double dt, double c = 0.5, double kappa = 1.0);

/// True when the window 2 eps is narrower than one typical step sigma sqrt(dt).
bool is_undersmoothed(double bandwidth, double sigma, double dt);

/// Bound on the smoothing bias |E Lhat(T, y) - E L(T, y)| for processes whose
/// expected local time is 2-Lipschitz in the level (Brownian motion).
double smoothing_bias_bound(double bandwidth);

struct LocalTimeCurve {
  std::vector<double> values;  // Lhat(t_j, y), j = 0..steps
  double bandwidth = 0.0;
  bool undersmoothed = false;
};

/// Occupation-density estimate
///   Lhat(t, y) = sigma^2 / (2 eps) * int_0^t 1{|X_s - y| < eps} ds
/// with the time integral taken by the trapezoid rule on the grid.
LocalTimeCurve estimate_local_time(std::span<const double> path, const TimeGrid& grid,
                                   double sigma, double y, double bandwidth);

/// |X_T - y| - |x0 - y| - sum_k sgn(X_k - y)(X_{k+1} - X_k) - Lhat(T, y).
double tanaka_residual(std::span<const double> path, const TimeGrid& grid, double sigma, double y,
                       double bandwidth);

/// Spatial factor A1 (BV in y) and temporal factor A2 (per path, on grid
/// nodes) of a space-time integrand A(s, y) = A1(y) A2(s).
struct SpaceTimeIntegrand {
  BVFunction a1;
  std::function<double(int)> a2;  // value at node j
};

/// Lhat(t, y) on a uniform level grid for one path, stored as sparse
/// per-step increments.
class LocalTimeField {
 public:
  struct Entry {
    std::size_t level;
    double increment;
  };

  /// Level spacing eps/2 covering the path range padded by 3 eps. If a point
  /// of `avoid` falls on a level the grid is shifted by half a cell.
  static LocalTimeField build(std::span<const double> path, const TimeGrid& grid, double sigma,
                              double bandwidth, std::size_t path_index = 0,
                              std::span<const double> avoid = {});

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& y_grid() const { return y_; }
  double dy() const { return dy_; }
  double bandwidth() const { return bandwidth_; }
  double sigma() const { return sigma_; }
  std::size_t path_index() const { return path_index_; }
  bool shifted() const { return shifted_; }
  std::span<const double> path() const { return path_; }

  /// Increments Lhat(t_{j+1}, y_i) - Lhat(t_j, y_i) that are nonzero.
  std::span<const Entry> step(int j) const;
  /// Lhat(t_j, y_i).
  double value(int j, std::size_t i) const;
  /// Lhat(T, y_i) for all levels.
  std::vector<double> terminal() const;
  /// Increment over step j at an arbitrary level y, from the path itself.
  double increment_at(int j, double y) const;
  /// int_0^{t_end} a2(s) d_s Lhat(s, y) with left-point a2.
  double stieltjes(double y, const std::function<double(int)>& a2, int end_step) const;

  /// Dense CSV (t, y, L).
  void write_csv(std::ostream& os) const;

 private:
  TimeGrid grid_;
  std::vector<double> path_;
  std::vector<double> y_;
  double dy_ = 0.0;
  double bandwidth_ = 0.0;
  double sigma_ = 1.0;
  std::size_t path_index_ = 0;
  bool shifted_ = false;
  std::vector<std::size_t> row_;  // CSR over steps
  std::vector<Entry> entries_;
};

/// y-range [lo, hi] and time range [0, t_{end_step}].
struct Region {
  double y_lo = -1e300;
  double y_hi = 1e300;
  int end_step = -1;  // -1: whole grid
};

/// Riemann sum sum_{i,j} A1(y_i) A2(s_j) (second difference of Lhat) over
/// the cells of the region.
double spacetime_integral_grid(const SpaceTimeIntegrand& integrand, const LocalTimeField& field,
                               const Region& region = {});

/// -[ sum_atoms jump * int A2 d_s Lhat(., loc) + int density(y) int A2 d_s Lhat(., y) dy ].
double spacetime_integral_ibp(const SpaceTimeIntegrand& integrand, const LocalTimeField& field,
                              const Region& region = {});

struct IdentityCheck {
  double lhs_mean = 0.0;  // grid method
  double rhs_mean = 0.0;  // -sigma^2 int phi'(X_s) psi(s) ds
  double ibp_mean = 0.0;
  double rel_err = 0.0;      // mean_p |lhs_p - rhs_p| / mean_p |rhs_p|
  double rel_err_ibp = 0.0;  // mean_p |lhs_p - ibp_p| / mean_p |ibp_p|
  std::size_t n_paths = 0;
};

/// For phi in C^1 with compact support (numerically) and a time weight psi,
/// compares int int phi(y) psi(s) Lhat(ds, dy) with -sigma^2 int phi'(X_s) psi(s) ds.
IdentityCheck smooth_identity_check(const std::function<double(double)>& phi,
                                    const std::function<double(double)>& phi_prime,
                                    const std::function<double(double)>& psi,
                                    const PathEnsemble& ensemble, double sigma, double bandwidth,
                                    int threads = 1);

}  // namespace bvsmp
