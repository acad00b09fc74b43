#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bvsmp {

/// Raised for invalid model or experiment parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// b1(t, x): bounded, with a spatial derivative.
struct SmoothBoundedFn {
  std::function<double(double, double)> eval;
  std::function<double(double, double)> partial_x;
  double sup_norm = 0.0;
};

struct Atom {
  double location = 0.0;
  double jump = 0.0;
};

/// Derivative measure of a BV function: point masses plus a density.
struct DerivativeMeasure {
  std::vector<Atom> atoms;
  std::function<double(double)> density;
};

/// Right-continuous function of bounded variation on the real line,
///   f(x) = f(-inf) + sum_{loc <= x} jump + int_{-inf}^x density.
class BVFunction {
 public:
  BVFunction();

  static BVFunction zero();
  /// Piecewise constant: `left_value` below the first atom.
  static BVFunction step(double left_value, std::vector<Atom> atoms);
  /// Absolutely continuous: `value` and its derivative `density`, with the
  /// density negligible outside `support`.
  static BVFunction from_density(std::function<double(double)> value,
                                 std::function<double(double)> density,
                                 std::pair<double, double> support, double sup_norm);

  double eval(double x) const;
  double left_limit(double x) const;
  double density(double x) const;
  /// Value of the step part below every atom.
  double left_value() const { return left_value_; }
  /// Absolutely continuous part of the value (0 for pure step functions).
  double ac_value(double x) const;
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::pair<double, double> support() const { return support_; }
  bool has_density() const { return static_cast<bool>(density_); }
  double sup_norm() const { return sup_norm_; }
  /// sum |jump| + int |density| over the support (adaptive Gauss-Kronrod).
  double total_variation() const;

 private:
  double left_value_ = 0.0;
  std::vector<Atom> atoms_;
  std::function<double(double)> ac_value_;  // absolutely continuous part, value
  std::function<double(double)> density_;
  std::pair<double, double> support_{0.0, 0.0};
  double sup_norm_ = 0.0;
};

/// b3(t, a).
struct ControlFactor {
  std::function<double(double, double)> eval;
  std::function<double(double, double)> partial_a;
  double bound = 1.0;

  static ControlFactor identity();
};

struct CorridorModel {
  double mu = 0.5;
  double M = 4.0;
  double rho = 2.0;
};

/// b(t, x, a) = b1(t, x) + b2(x) b3(t, a), diffusion sigma.
struct DriftSpec {
  SmoothBoundedFn b1;
  BVFunction b2;
  ControlFactor b3;
  double sigma = 1.0;
  std::string family;
  std::optional<CorridorModel> corridor;

  double composite_bound() const { return b1.sup_norm + b2.sup_norm() * b3.bound; }
};

double eval_drift(const DriftSpec& spec, double t, double x, double a);

/// b1 = mu tanh(x/M), b2 = -sgn(x) 1_{|x|>rho}, b3(t, a) = a.
DriftSpec corridor_spec(double mu, double M, double rho, double sigma);

DriftSpec zero_spec(double sigma);

/// b1(x) = sum_k c_k tanh(x/s1)^k and b2(x) = sum_k d_k tanh(x/s2)^k (b2
/// absolutely continuous), b3(t, a) = a.
DriftSpec custom_polynomial_spec(std::vector<double> b1_coeffs, double b1_scale,
                                 std::vector<double> b2_coeffs, double b2_scale, double sigma);

/// Smoothed, compactly supported approximation of a drift spec.
struct MollifiedSpec {
  int n = 1;
  SmoothBoundedFn b1n;
  SmoothBoundedFn b2n;  // eval(t, x) ignores t; partial_x is b2n'
  std::shared_ptr<const DriftSpec> source;

  /// The same smooth drift packaged as a DriftSpec (b2n as a density-only BV
  /// function), for use with the generic engine.
  DriftSpec as_drift_spec() const;
};

/// Convolution with a Gaussian of standard deviation 1/n truncated at +-6/n,
/// times a smooth cutoff equal to 1 on [-(n-1), n-1] and 0 outside [-n, n].
MollifiedSpec mollify(const DriftSpec& spec, int n);

DerivativeMeasure bv_derivative_measure(const BVFunction& f);

namespace mollifier {
/// Smooth cutoff and its derivative.
double cutoff(double x, int n);
double cutoff_derivative(double x, int n);
/// CDF and density of the truncated kernel at x (kernel scale 1/n).
double kernel_cdf(double x, int n);
double kernel_pdf(double x, int n);
}  // namespace mollifier

}  // namespace bvsmp
