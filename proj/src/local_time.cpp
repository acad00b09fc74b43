#include "bvsmp/local_time.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "bvsmp/csv.hpp"
#include "bvsmp/parallel.hpp"

namespace bvsmp {

namespace {

// Weight of one node indicator: sigma^2/(2 eps) times the trapezoid half step.
double node_weight(double sigma, double bandwidth, double dt) {
  return (sigma * sigma / (2.0 * bandwidth)) * (0.5 * dt);
}

double step_increment(double w, double x_left, double x_right, double y, double eps) {
  const double a = std::abs(x_left - y) < eps ? 1.0 : 0.0;
  const double b = std::abs(x_right - y) < eps ? 1.0 : 0.0;
  return w * (a + b);
}

void check_path(std::span<const double> path, const TimeGrid& grid) {
  if (path.size() != static_cast<std::size_t>(grid.nodes())) {
    throw std::invalid_argument("path length does not match the time grid");
  }
}

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

double default_bandwidth(double sigma, double dt, double c, double kappa) {
  return c * sigma * std::sqrt(dt) * kappa;
}

bool is_undersmoothed(double bandwidth, double sigma, double dt) {
  return 2.0 * bandwidth < sigma * std::sqrt(dt);
}

double smoothing_bias_bound(double bandwidth) { return bandwidth; }

LocalTimeCurve estimate_local_time(std::span<const double> path, const TimeGrid& grid,
                                   double sigma, double y, double bandwidth) {
  if (!(bandwidth > 0)) throw std::invalid_argument("bandwidth must be positive");
  check_path(path, grid);
  LocalTimeCurve c;
  c.bandwidth = bandwidth;
  c.undersmoothed = is_undersmoothed(bandwidth, sigma, grid.dt());
  c.values.assign(grid.nodes(), 0.0);
  const double w = node_weight(sigma, bandwidth, grid.dt());
  for (int j = 0; j < grid.steps; ++j) {
    c.values[j + 1] = c.values[j] + step_increment(w, path[j], path[j + 1], y, bandwidth);
  }
  return c;
}

double tanaka_residual(std::span<const double> path, const TimeGrid& grid, double sigma, double y,
                       double bandwidth) {
  check_path(path, grid);
  double ito = 0.0;
  for (int k = 0; k < grid.steps; ++k) ito += sgn(path[k] - y) * (path[k + 1] - path[k]);
  const double L = estimate_local_time(path, grid, sigma, y, bandwidth).values.back();
  return std::abs(path.back() - y) - std::abs(path.front() - y) - ito - L;
}

LocalTimeField LocalTimeField::build(std::span<const double> path, const TimeGrid& grid,
                                     double sigma, double bandwidth, std::size_t path_index,
                                     std::span<const double> avoid) {
  if (!(bandwidth > 0)) throw std::invalid_argument("bandwidth must be positive");
  check_path(path, grid);
  LocalTimeField f;
  f.grid_ = grid;
  f.path_.assign(path.begin(), path.end());
  f.bandwidth_ = bandwidth;
  f.sigma_ = sigma;
  f.path_index_ = path_index;
  f.dy_ = 0.5 * bandwidth;

  const auto [mn, mx] = std::minmax_element(path.begin(), path.end());
  const double lo = *mn - 3.0 * bandwidth;
  const double hi = *mx + 3.0 * bandwidth;
  double y0 = std::floor(lo / f.dy_) * f.dy_;
  for (double a : avoid) {
    const double r = (a - y0) / f.dy_;
    if (std::abs(r - std::round(r)) < 1e-9) {
      y0 -= 0.5 * f.dy_;
      f.shifted_ = true;
      break;
    }
  }
  const auto levels = static_cast<std::size_t>(std::ceil((hi - y0) / f.dy_)) + 1;
  f.y_.resize(levels);
  for (std::size_t i = 0; i < levels; ++i) f.y_[i] = y0 + static_cast<double>(i) * f.dy_;

  const double w = node_weight(sigma, bandwidth, grid.dt());
  f.row_.assign(grid.steps + 1, 0);
  f.entries_.reserve(static_cast<std::size_t>(grid.steps) * 8);
  for (int j = 0; j < grid.steps; ++j) {
    f.row_[j] = f.entries_.size();
    const double a = std::min(path[j], path[j + 1]) - bandwidth;
    const double b = std::max(path[j], path[j + 1]) + bandwidth;
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor((a - y0) / f.dy_)));
    const auto i1 = std::min(levels - 1, static_cast<std::size_t>(std::ceil((b - y0) / f.dy_)));
    for (std::size_t i = i0; i <= i1; ++i) {
      const double inc = step_increment(w, path[j], path[j + 1], f.y_[i], bandwidth);
      if (inc > 0) f.entries_.push_back({i, inc});
    }
  }
  f.row_[grid.steps] = f.entries_.size();
  return f;
}

std::span<const LocalTimeField::Entry> LocalTimeField::step(int j) const {
  return {entries_.data() + row_[j], row_[j + 1] - row_[j]};
}

double LocalTimeField::value(int j, std::size_t i) const {
  double v = 0.0;
  for (int s = 0; s < j; ++s) {
    for (const auto& e : step(s)) {
      if (e.level == i) v += e.increment;
    }
  }
  return v;
}

std::vector<double> LocalTimeField::terminal() const {
  std::vector<double> L(y_.size(), 0.0);
  for (int s = 0; s < grid_.steps; ++s) {
    for (const auto& e : step(s)) L[e.level] += e.increment;
  }
  return L;
}

double LocalTimeField::increment_at(int j, double y) const {
  return step_increment(node_weight(sigma_, bandwidth_, grid_.dt()), path_[j], path_[j + 1], y,
                        bandwidth_);
}

double LocalTimeField::stieltjes(double y, const std::function<double(int)>& a2,
                                 int end_step) const {
  double s = 0.0;
  for (int j = 0; j < end_step; ++j) {
    const double inc = increment_at(j, y);
    if (inc > 0) s += a2(j) * inc;
  }
  return s;
}

void LocalTimeField::write_csv(std::ostream& os) const {
  CsvWriter w(os, {"t", "y", "L"});
  std::vector<double> L(y_.size(), 0.0);
  for (int j = 0; j <= grid_.steps; ++j) {
    for (std::size_t i = 0; i < y_.size(); ++i) {
      w.field(grid_.t(j)).field(y_[i]).field(L[i]);
      w.end_row();
    }
    if (j < grid_.steps) {
      for (const auto& e : step(j)) L[e.level] += e.increment;
    }
  }
}

namespace {

struct LevelRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive
  bool empty = true;
};

LevelRange levels_in(const LocalTimeField& f, const Region& r) {
  const auto& y = f.y_grid();
  LevelRange out;
  const auto first = std::lower_bound(y.begin(), y.end(), r.y_lo);
  const auto last = std::upper_bound(y.begin(), y.end(), r.y_hi);
  if (first >= last) return out;
  out.lo = static_cast<std::size_t>(first - y.begin());
  out.hi = static_cast<std::size_t>(last - y.begin()) - 1;
  out.empty = false;
  return out;
}

int end_of(const LocalTimeField& f, const Region& r) {
  return r.end_step < 0 ? f.grid().steps : std::min(r.end_step, f.grid().steps);
}

}  // namespace

double spacetime_integral_grid(const SpaceTimeIntegrand& in, const LocalTimeField& f,
                               const Region& region) {
  const LevelRange lv = levels_in(f, region);
  if (lv.empty || lv.hi == lv.lo) return 0.0;
  const auto& y = f.y_grid();
  std::vector<double> a1(y.size(), 0.0);
  for (std::size_t i = lv.lo; i <= lv.hi; ++i) a1[i] = in.a1.eval(y[i]);

  // sum_i A1(y_i) [dL(y_{i+1}) - dL(y_i)] for i = lo .. hi-1, step by step.
  double total = 0.0;
  const int end = end_of(f, region);
  for (int j = 0; j < end; ++j) {
    double inner = 0.0;
    for (const auto& e : f.step(j)) {
      if (e.level >= lv.lo + 1 && e.level <= lv.hi) inner += a1[e.level - 1] * e.increment;
      if (e.level >= lv.lo && e.level + 1 <= lv.hi) inner -= a1[e.level] * e.increment;
    }
    if (inner != 0.0) total += in.a2(j) * inner;
  }
  return total;
}

double spacetime_integral_ibp(const SpaceTimeIntegrand& in, const LocalTimeField& f,
                              const Region& region) {
  const int end = end_of(f, region);
  double atoms = 0.0;
  for (const auto& a : in.a1.atoms()) {
    if (a.location < region.y_lo || a.location > region.y_hi) continue;
    atoms += a.jump * f.stieltjes(a.location, in.a2, end);
  }
  double dens = 0.0;
  if (in.a1.has_density()) {
    const LevelRange lv = levels_in(f, region);
    if (!lv.empty) {
      const auto& y = f.y_grid();
      std::vector<double> s(y.size(), 0.0);
      for (int j = 0; j < end; ++j) {
        const double w = in.a2(j);
        for (const auto& e : f.step(j)) s[e.level] += w * e.increment;
      }
      for (std::size_t i = lv.lo; i <= lv.hi; ++i) {
        if (s[i] != 0.0) dens += in.a1.density(y[i]) * s[i] * f.dy();
      }
    }
  }
  return -(atoms + dens);
}

IdentityCheck smooth_identity_check(const std::function<double(double)>& phi,
                                    const std::function<double(double)>& phi_prime,
                                    const std::function<double(double)>& psi,
                                    const PathEnsemble& e, double sigma, double bandwidth,
                                    int threads) {
  const std::size_t n = e.n_paths;
  std::vector<double> lhs(n), rhs(n), ibp(n);
  const TimeGrid& g = e.grid;
  const double dt = g.dt();
  SpaceTimeIntegrand in;
  in.a1 = BVFunction::from_density(phi, phi_prime, {-1e3, 1e3}, 0.0);
  in.a2 = [&](int j) { return psi(g.t(j)); };
  parallel_for_blocks(n, 64, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto path = e.path(p);
      const auto field = LocalTimeField::build(path, g, sigma, bandwidth, p);
      lhs[p] = spacetime_integral_grid(in, field);
      ibp[p] = spacetime_integral_ibp(in, field);
      double r = 0.0;
      for (int j = 0; j < g.steps; ++j) {
        r += 0.5 * dt * (phi_prime(path[j]) * psi(g.t(j)) + phi_prime(path[j + 1]) * psi(g.t(j + 1)));
      }
      rhs[p] = -sigma * sigma * r;
    }
  });
  IdentityCheck c;
  c.n_paths = n;
  double d = 0.0, ar = 0.0, di = 0.0, ai = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    c.lhs_mean += lhs[p];
    c.rhs_mean += rhs[p];
    c.ibp_mean += ibp[p];
    d += std::abs(lhs[p] - rhs[p]);
    ar += std::abs(rhs[p]);
    di += std::abs(lhs[p] - ibp[p]);
    ai += std::abs(ibp[p]);
  }
  const double nn = static_cast<double>(n);
  c.lhs_mean /= nn;
  c.rhs_mean /= nn;
  c.ibp_mean /= nn;
  c.rel_err = ar > 0 ? d / ar : (d > 0 ? INFINITY : 0.0);
  c.rel_err_ibp = ai > 0 ? di / ai : (di > 0 ? INFINITY : 0.0);
  return c;
}

}  // namespace bvsmp
