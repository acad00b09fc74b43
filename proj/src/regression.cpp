#include "bvsmp/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bvsmp {

void bspline_basis(std::span<const double> t, double x, std::vector<double>& out) {
  constexpr int p = 3;
  const int m = static_cast<int>(t.size());
  const int nb = m - p - 1;
  if (nb < 1) throw std::invalid_argument("knot vector too short");
  out.assign(nb, 0.0);
  x = std::clamp(x, t[p], t[nb]);
  // knot span: t[k] <= x < t[k+1], last nonempty span at the right end
  int k = static_cast<int>(std::upper_bound(t.begin() + p, t.begin() + nb + 1, x) - t.begin()) - 1;
  k = std::min(k, nb - 1);
  while (k > p && t[k] == t[k + 1]) --k;

  double N[p + 1], left[p + 1], right[p + 1];
  N[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[k + 1 - j];
    right[j] = t[k + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double den = right[r + 1] + left[j - r];
      const double tmp = den != 0.0 ? N[r] / den : 0.0;
      N[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    N[j] = saved;
  }
  for (int j = 0; j <= p; ++j) out[k - p + j] = N[j];
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return i + 1 < s.size() ? s[i] * (1 - f) + s[i + 1] * f : s.back();
}

std::vector<double> spline_knots(const std::vector<double>& sorted, int interior,
                                 const std::vector<double>& extra, double lo, double hi) {
  std::vector<double> in;
  for (int i = 1; i <= interior; ++i) in.push_back(quantile_sorted(sorted, double(i) / (interior + 1)));
  for (double e : extra) in.push_back(e);
  std::sort(in.begin(), in.end());
  const double tol = 1e-9 * (hi - lo);
  std::vector<double> t(4, lo);
  for (double v : in) {
    if (v <= lo + tol || v >= hi - tol) continue;
    if (t.size() > 4 && v - t.back() <= tol) continue;
    t.push_back(v);
  }
  t.insert(t.end(), 4, hi);
  return t;
}

}  // namespace

void ConditionalFit::basis(double x, std::vector<double>& out) const {
  if (intercept_only_) {
    out.assign(1, 1.0);
    return;
  }
  if (kind_ == BasisKind::spline) {
    bspline_basis(knots_, x, out);
    return;
  }
  const double u = (std::clamp(x, lo_, hi_) - center_) / scale_;
  out.resize(degree_ + 1);
  double v = 1.0;
  for (int d = 0; d <= degree_; ++d, v *= u) out[d] = v;
}

ConditionalFit ConditionalFit::fit(std::span<const double> x, std::span<const double> y,
                                   const BasisConfig& cfg) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("regression needs matching non-empty samples");
  const std::size_t n = x.size();
  ConditionalFit f;
  f.kind_ = cfg.kind;

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  f.lo_ = sorted.front();
  f.hi_ = sorted.back();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= double(n);
  f.center_ = mean;
  f.scale_ = std::sqrt(var);

  auto intercept = [&] {
    f.intercept_only_ = true;
    f.description_ = "intercept";
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double s2 = 0.0;
    for (double v : y) s2 += (v - my) * (v - my);
    s2 = n > 1 ? s2 / double(n - 1) : 0.0;
    f.coef_ = {my};
    f.cov_ = {s2 / double(n)};
    return f;
  };
  if (!(f.scale_ > 1e-12 * (1.0 + std::abs(mean)))) return intercept();

  int level = cfg.kind == BasisKind::spline ? cfg.interior_knots : cfg.degree;
  auto size_of = [&](int lv) { return cfg.kind == BasisKind::spline ? lv + 4 + 2 : lv + 1; };
  while (level > 0 && double(n) < cfg.min_paths_per_coef * size_of(level)) {
    --level;
    f.reduced_ = true;
  }

  std::vector<double> row;
  while (true) {
    if (cfg.kind == BasisKind::spline) {
      f.knots_ = spline_knots(sorted, level, cfg.extra_knots, f.lo_, f.hi_);
    } else {
      f.degree_ = level;
    }
    f.basis(x[0], row);
    const auto p = static_cast<Eigen::Index>(row.size());
    Eigen::MatrixXd A(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) {
      f.basis(x[i], row);
      for (Eigen::Index j = 0; j < p; ++j) A(i, j) = row[j];
    }
    const Eigen::MatrixXd AtA = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(AtA);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    const bool ill = !(lmin > 0) || lmax / lmin > cfg.max_condition;
    if (ill && level > 0) {
      level = cfg.kind == BasisKind::spline ? level / 2 : level - 1;
      f.reduced_ = true;
      continue;
    }
    if (ill) return intercept();

    const Eigen::MatrixXd inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd coef = inv * (A.transpose() * Y);
    const Eigen::VectorXd r = Y - A * coef;
    const Eigen::MatrixXd meat = A.transpose() * r.array().square().matrix().asDiagonal() * A;
    const double hc1 = double(n) > double(p) ? double(n) / double(n - p) : 1.0;
    const Eigen::MatrixXd cov = hc1 * inv * meat * inv;

    f.coef_.assign(coef.data(), coef.data() + p);
    f.cov_.resize(p * p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) f.cov_[i * p + j] = cov(i, j);
    f.description_ = cfg.kind == BasisKind::spline
                         ? "cubic-bspline knots=" + std::to_string(f.knots_.size() - 8)
                         : "polynomial degree=" + std::to_string(level);
    return f;
  }
}

double ConditionalFit::value(double x) const {
  std::vector<double> b;
  basis(x, b);
  double v = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) v += b[j] * coef_[j];
  return v;
}

double ConditionalFit::std_error(double x) const {
  std::vector<double> b;
  basis(x, b);
  const std::size_t p = b.size();
  double v = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    if (b[i] == 0.0) continue;
    for (std::size_t j = 0; j < p; ++j) v += b[i] * cov_[i * p + j] * b[j];
  }
  return std::sqrt(std::max(v, 0.0));
}

}  // namespace bvsmp
