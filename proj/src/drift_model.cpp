#include "bvsmp/drift_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace bvsmp {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

constexpr double kKernelTail = 6.0;

// Gauss-Legendre rule on [-6, 6] (kernel units) with the truncated normal
// weights folded in and renormalised to unit mass.
struct KernelRule {
  static constexpr int kPoints = 24;
  std::array<double, kPoints> z{};
  std::array<double, kPoints> w{};

  KernelRule() {
    using Rule = boost::math::quadrature::gauss<double, kPoints>;
    const auto& abscissa = Rule::abscissa();
    const auto& weights = Rule::weights();
    int k = 0;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      for (double sign : {-1.0, 1.0}) {
        z[k] = sign * kKernelTail * abscissa[i];
        w[k] = weights[i] * std::exp(-0.5 * z[k] * z[k]);
        ++k;
      }
    }
    double mass = 0.0;
    for (double v : w) mass += v;
    for (double& v : w) v /= mass;
  }
};

const KernelRule& kernel_rule() {
  static const KernelRule rule;
  return rule;
}

template <class Fn>
double convolve(Fn&& f, double x, int n) {
  const auto& rule = kernel_rule();
  const double h = 1.0 / n;
  double s = 0.0;
  for (int i = 0; i < KernelRule::kPoints; ++i) s += rule.w[i] * f(x - h * rule.z[i]);
  return s;
}

double bump(double s) { return s <= 0.0 ? 0.0 : std::exp(-1.0 / s); }

}  // namespace

namespace mollifier {

double cutoff(double x, int n) {
  const double s = n - std::abs(x);
  if (s >= 1.0) return 1.0;
  if (s <= 0.0) return 0.0;
  const double a = bump(s);
  const double b = bump(1.0 - s);
  return a / (a + b);
}

double cutoff_derivative(double x, int n) {
  const double s = n - std::abs(x);
  if (s >= 1.0 || s <= 0.0) return 0.0;
  const double a = bump(s);
  const double b = bump(1.0 - s);
  const double da = a / (s * s);
  const double db = b / ((1.0 - s) * (1.0 - s));
  const double dchi_ds = (da * b + a * db) / ((a + b) * (a + b));
  return x > 0 ? -dchi_ds : (x < 0 ? dchi_ds : 0.0);
}

double kernel_cdf(double x, int n) {
  const double z = x * n;
  if (z <= -kKernelTail) return 0.0;
  if (z >= kKernelTail) return 1.0;
  const double lo = normal_cdf(-kKernelTail);
  return (normal_cdf(z) - lo) / (normal_cdf(kKernelTail) - lo);
}

double kernel_pdf(double x, int n) {
  const double z = x * n;
  if (std::abs(z) >= kKernelTail) return 0.0;
  const double mass = normal_cdf(kKernelTail) - normal_cdf(-kKernelTail);
  return n * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) / mass;
}

}  // namespace mollifier

BVFunction::BVFunction() = default;

BVFunction BVFunction::zero() { return BVFunction(); }

BVFunction BVFunction::step(double left_value, std::vector<Atom> atoms) {
  BVFunction f;
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  f.left_value_ = left_value;
  f.atoms_ = std::move(atoms);
  double v = left_value;
  f.sup_norm_ = std::abs(v);
  for (const auto& a : f.atoms_) {
    v += a.jump;
    f.sup_norm_ = std::max(f.sup_norm_, std::abs(v));
  }
  if (!f.atoms_.empty()) f.support_ = {f.atoms_.front().location, f.atoms_.back().location};
  return f;
}

BVFunction BVFunction::from_density(std::function<double(double)> value,
                                    std::function<double(double)> density,
                                    std::pair<double, double> support, double sup_norm) {
  BVFunction f;
  f.ac_value_ = std::move(value);
  f.density_ = std::move(density);
  f.support_ = support;
  f.sup_norm_ = sup_norm;
  return f;
}

double BVFunction::eval(double x) const {
  double v = left_value_;
  for (const auto& a : atoms_) {
    if (a.location <= x) v += a.jump;
  }
  if (ac_value_) v += ac_value_(x);
  return v;
}

double BVFunction::left_limit(double x) const {
  double v = left_value_;
  for (const auto& a : atoms_) {
    if (a.location < x) v += a.jump;
  }
  if (ac_value_) v += ac_value_(x);
  return v;
}

double BVFunction::density(double x) const { return density_ ? density_(x) : 0.0; }

double BVFunction::ac_value(double x) const { return ac_value_ ? ac_value_(x) : 0.0; }

double BVFunction::total_variation() const {
  double tv = 0.0;
  for (const auto& a : atoms_) tv += std::abs(a.jump);
  if (density_ && support_.second > support_.first) {
    auto integrand = [this](double y) { return std::abs(density_(y)); };
    tv += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, support_.first, support_.second, 20, 1e-13);
  }
  return tv;
}

ControlFactor ControlFactor::identity() {
  return ControlFactor{[](double, double a) { return a; }, [](double, double) { return 1.0; }, 1.0};
}

double eval_drift(const DriftSpec& spec, double t, double x, double a) {
  require_finite(t, "time");
  require_finite(x, "state");
  require_finite(a, "control");
  if (a < -1.0 || a > 1.0) throw std::invalid_argument("control value outside [-1, 1]");
  return spec.b1.eval(t, x) + spec.b2.eval(x) * spec.b3.eval(t, a);
}

DriftSpec corridor_spec(double mu, double M, double rho, double sigma) {
  if (!(mu > 0)) throw ConfigError("mu must be positive");
  if (!(M > 0)) throw ConfigError("M must be positive");
  if (!(rho > 0)) throw ConfigError("rho must be positive");
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  DriftSpec s;
  s.b1.eval = [mu, M](double, double x) { return mu * std::tanh(x / M); };
  s.b1.partial_x = [mu, M](double, double x) {
    const double c = std::cosh(x / M);
    return mu / (M * c * c);
  };
  s.b1.sup_norm = mu;
  s.b2 = BVFunction::step(1.0, {{-rho, -1.0}, {rho, -1.0}});
  s.b3 = ControlFactor::identity();
  s.sigma = sigma;
  s.family = "corridor";
  s.corridor = CorridorModel{mu, M, rho};
  return s;
}

DriftSpec zero_spec(double sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  DriftSpec s;
  s.b1.eval = [](double, double) { return 0.0; };
  s.b1.partial_x = [](double, double) { return 0.0; };
  s.b1.sup_norm = 0.0;
  s.b2 = BVFunction::zero();
  s.b3 = ControlFactor::identity();
  s.sigma = sigma;
  s.family = "zero";
  return s;
}

namespace {

// p(tanh(x/s)) and its x-derivative.
struct TanhPolynomial {
  std::vector<double> c;
  double scale = 1.0;

  double value(double x) const {
    const double th = std::tanh(x / scale);
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * th + c[k];
    return v;
  }
  double derivative(double x) const {
    const double th = std::tanh(x / scale);
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) v = v * th + static_cast<double>(k) * c[k];
    return v * (1.0 - th * th) / scale;
  }
  double bound() const {
    double b = 0.0;
    for (double v : c) b += std::abs(v);
    return b;
  }
};

}  // namespace

DriftSpec custom_polynomial_spec(std::vector<double> b1_coeffs, double b1_scale,
                                 std::vector<double> b2_coeffs, double b2_scale, double sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  if (!(b1_scale > 0) || !(b2_scale > 0)) throw ConfigError("polynomial scales must be positive");
  const TanhPolynomial p1{std::move(b1_coeffs), b1_scale};
  const TanhPolynomial p2{std::move(b2_coeffs), b2_scale};
  DriftSpec s;
  s.b1.eval = [p1](double, double x) { return p1.value(x); };
  s.b1.partial_x = [p1](double, double x) { return p1.derivative(x); };
  s.b1.sup_norm = p1.bound();
  const double reach = 40.0 * b2_scale;
  s.b2 = BVFunction::from_density([p2](double x) { return p2.value(x); },
                                  [p2](double x) { return p2.derivative(x); }, {-reach, reach},
                                  p2.bound());
  s.b3 = ControlFactor::identity();
  s.sigma = sigma;
  s.family = "custom-polynomial";
  return s;
}

MollifiedSpec mollify(const DriftSpec& spec, int n) {
  if (n < 1) throw ConfigError("mollification index must be >= 1");
  auto src = std::make_shared<const DriftSpec>(spec);
  MollifiedSpec m;
  m.n = n;
  m.source = src;

  m.b1n.eval = [src, n](double t, double x) {
    const double chi = mollifier::cutoff(x, n);
    if (chi == 0.0) return 0.0;
    return chi * convolve([&](double y) { return src->b1.eval(t, y); }, x, n);
  };
  m.b1n.partial_x = [src, n](double t, double x) {
    const double chi = mollifier::cutoff(x, n);
    if (chi == 0.0) return 0.0;
    const double conv = convolve([&](double y) { return src->b1.eval(t, y); }, x, n);
    const double dconv = convolve([&](double y) { return src->b1.partial_x(t, y); }, x, n);
    return mollifier::cutoff_derivative(x, n) * conv + chi * dconv;
  };
  m.b1n.sup_norm = spec.b1.sup_norm;

  // b2 * kernel: atoms through the kernel CDF, the absolutely continuous part
  // through the quadrature rule.
  auto smoothed_b2 = [src, n](double x) {
    const BVFunction& b2 = src->b2;
    double v = b2.left_value();
    for (const auto& a : b2.atoms()) v += a.jump * mollifier::kernel_cdf(x - a.location, n);
    if (b2.has_density()) v += convolve([&](double y) { return b2.ac_value(y); }, x, n);
    return v;
  };
  auto smoothed_b2_derivative = [src, n](double x) {
    const BVFunction& b2 = src->b2;
    double d = 0.0;
    for (const auto& a : b2.atoms()) d += a.jump * mollifier::kernel_pdf(x - a.location, n);
    if (b2.has_density()) d += convolve([&](double y) { return b2.density(y); }, x, n);
    return d;
  };
  m.b2n.eval = [smoothed_b2, n](double, double x) {
    const double chi = mollifier::cutoff(x, n);
    return chi == 0.0 ? 0.0 : chi * smoothed_b2(x);
  };
  m.b2n.partial_x = [smoothed_b2, smoothed_b2_derivative, n](double, double x) {
    const double chi = mollifier::cutoff(x, n);
    if (chi == 0.0) return 0.0;
    return mollifier::cutoff_derivative(x, n) * smoothed_b2(x) + chi * smoothed_b2_derivative(x);
  };
  m.b2n.sup_norm = spec.b2.sup_norm();
  return m;
}

DriftSpec MollifiedSpec::as_drift_spec() const {
  DriftSpec s;
  s.b1 = b1n;
  auto value = b2n.eval;
  auto slope = b2n.partial_x;
  s.b2 = BVFunction::from_density([value](double x) { return value(0.0, x); },
                                  [slope](double x) { return slope(0.0, x); },
                                  {-static_cast<double>(n), static_cast<double>(n)}, b2n.sup_norm);
  s.b3 = source->b3;
  s.sigma = source->sigma;
  s.family = source->family + "-mollified";
  return s;
}

DerivativeMeasure bv_derivative_measure(const BVFunction& f) {
  DerivativeMeasure m;
  m.atoms = f.atoms();
  if (f.has_density()) {
    m.density = [f](double x) { return f.density(x); };
  } else {
    m.density = [](double) { return 0.0; };
  }
  return m;
}

}  // namespace bvsmp
