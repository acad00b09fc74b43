#pragma once

#include <span>
#include <string>
#include <vector>

namespace bvsmp {

enum class BasisKind { spline, polynomial };

struct BasisConfig {
  BasisKind kind = BasisKind::spline;
  int interior_knots = 24;          // quantile knots (spline)
  int degree = 5;                   // polynomial degree (polynomial)
  std::vector<double> extra_knots;  // always-included knots, e.g. drift atoms
  double min_paths_per_coef = 50.0;
  double max_condition = 1e12;
};

/// Least-squares projection of a payoff on functions of one state variable,
/// with heteroskedasticity-robust (HC1) standard errors of the fitted value.
class ConditionalFit {
 public:
  static ConditionalFit fit(std::span<const double> x, std::span<const double> y,
                            const BasisConfig& cfg = {});

  double value(double x) const;
  double std_error(double x) const;

  bool intercept_only() const { return intercept_only_; }
  /// True when the basis was shrunk for sample size or conditioning.
  bool reduced() const { return reduced_; }
  const std::string& description() const { return description_; }
  int basis_size() const { return static_cast<int>(coef_.size()); }

 private:
  void basis(double x, std::vector<double>& out) const;

  BasisKind kind_ = BasisKind::spline;
  bool intercept_only_ = false;
  bool reduced_ = false;
  std::string description_;
  double lo_ = 0.0, hi_ = 0.0;
  double center_ = 0.0, scale_ = 1.0;
  int degree_ = 0;
  std::vector<double> knots_;  // full clamped knot vector (spline)
  std::vector<double> coef_;
  std::vector<double> cov_;  // row-major p x p
};

/// Cubic B-spline basis on a clamped knot vector, evaluated by Cox-de Boor.
/// `out` receives all knots.size() - 4 basis values; x is clamped to the
/// knot range.
void bspline_basis(std::span<const double> knots, double x, std::vector<double>& out);

}  // namespace bvsmp
