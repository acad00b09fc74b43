#include "bvsmp/variation.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "bvsmp/csv.hpp"
#include "bvsmp/local_time.hpp"
#include "bvsmp/parallel.hpp"

namespace bvsmp {

std::string_view method_name(VariationMethod m) {
  switch (m) {
    case VariationMethod::ode:
      return "ode";
    case VariationMethod::localtime:
      return "localtime";
    case VariationMethod::corridor_closed_form:
      return "corridor-closed-form";
    case VariationMethod::finite_difference:
      return "finite-difference";
  }
  return "unknown";
}

std::optional<VariationMethod> parse_variation_method(std::string_view name) {
  for (auto m : {VariationMethod::ode, VariationMethod::localtime,
                 VariationMethod::corridor_closed_form, VariationMethod::finite_difference}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

double VariationRecord::log_phi(std::size_t p, int k) const {
  const double v = values[p * grid.nodes() + k];
  return exponential ? v : std::log(v);
}

double VariationRecord::phi(std::size_t p, int k) const {
  const double v = values[p * grid.nodes() + k];
  return exponential ? std::exp(v) : v;
}

double VariationRecord::phi(std::size_t p, int s, int t) const {
  if (exponential) return std::exp(values[p * grid.nodes() + t] - values[p * grid.nodes() + s]);
  return values[p * grid.nodes() + t] / values[p * grid.nodes() + s];
}

double VariationRecord::mean_phi(int k) const {
  double s = 0.0;
  for (std::size_t p = 0; p < n_paths; ++p) s += phi(p, k);
  return s / static_cast<double>(n_paths);
}

namespace {

void require_smooth(const DriftSpec& spec) {
  if (!spec.b2.atoms().empty()) {
    throw std::invalid_argument("ODE first variation needs a smooth drift (mollify first)");
  }
}

std::size_t span_nodes(const TimeGrid& grid, int start_step) {
  return static_cast<std::size_t>(grid.steps - start_step + 1);
}

VariationRecord make_record(VariationMethod m, const PathEnsemble& e) {
  VariationRecord r;
  r.method = m;
  r.grid = e.grid;
  r.n_paths = e.n_paths;
  r.values.assign(e.n_paths * e.grid.nodes(), 0.0);
  return r;
}

std::span<double> row(VariationRecord& r, std::size_t p) {
  return {r.values.data() + p * r.grid.nodes(), static_cast<std::size_t>(r.grid.nodes())};
}

}  // namespace

void log_phi_ode_path(const DriftSpec& spec, const TimeGrid& grid, int start_step,
                      std::span<const double> states, std::span<const double> controls,
                      std::optional<double> frozen, std::span<double> out) {
  require_smooth(spec);
  const std::size_t n = span_nodes(grid, start_step);
  const double dt = grid.dt();
  out[0] = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double t = grid.t(start_step + static_cast<int>(j));
    const double x = states[j];
    const double a = frozen ? *frozen : controls[j];
    const double rate = spec.b1.partial_x(t, x) + spec.b2.density(x) * spec.b3.eval(t, a);
    out[j + 1] = out[j] + rate * dt;
  }
}

void log_phi_localtime_path(const DriftSpec& spec, const TimeGrid& grid, int start_step,
                            std::span<const double> states, std::span<const double> controls,
                            double bandwidth, std::optional<double> frozen,
                            std::span<double> out) {
  const std::size_t n = span_nodes(grid, start_step);
  out[0] = 0.0;
  if (n == 1) return;
  const double dt = grid.dt();
  const int sub_steps = grid.steps - start_step;
  const TimeGrid sub(sub_steps * dt, sub_steps);
  std::vector<double> avoid;
  for (const auto& a : spec.b2.atoms()) avoid.push_back(a.location);
  const auto field =
      LocalTimeField::build(states.first(n), sub, spec.sigma, bandwidth, 0, avoid);

  std::vector<double> density_dy;
  if (spec.b2.has_density()) {
    density_dy.resize(field.y_grid().size());
    for (std::size_t i = 0; i < density_dy.size(); ++i) {
      density_dy[i] = spec.b2.density(field.y_grid()[i]) * field.dy();
    }
  }
  const double inv_s2 = 1.0 / (spec.sigma * spec.sigma);
  for (int j = 0; j < sub_steps; ++j) {
    const double t = grid.t(start_step + j);
    const double a = frozen ? *frozen : controls[j];
    const double b3 = spec.b3.eval(t, a);
    double atoms = 0.0;
    for (const auto& at : spec.b2.atoms()) atoms += at.jump * field.increment_at(j, at.location);
    double dens = 0.0;
    if (!density_dy.empty()) {
      for (const auto& e : field.step(j)) dens += density_dy[e.level] * e.increment;
    }
    const double smooth = spec.b1.partial_x(t, states[j]) * dt;
    out[j + 1] = out[j] + smooth + inv_s2 * b3 * (atoms + dens);
  }
}

void log_phi_corridor_path(const CorridorModel& m, double sigma, const TimeGrid& grid,
                           int start_step, std::span<const double> states,
                           std::span<const double> increments, std::span<double> out) {
  const std::size_t n = span_nodes(grid, start_step);
  const double dt = grid.dt();
  const double two_over_s2 = 2.0 / (sigma * sigma);
  const double b2bar_start = corridor_b2_primitive(states[0], m.rho);
  double i_b1 = 0.0, i_tanh = 0.0, i_occ = 0.0, i_db = 0.0;
  out[0] = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double x = states[j];
    const double th = std::tanh(x / m.M);
    // c = -b2(x), with b2 right-continuous
    const double c = x >= m.rho ? 1.0 : (x < -m.rho ? -1.0 : 0.0);
    i_b1 += (m.mu / m.M) * (1.0 - th * th) * dt;
    i_tanh += c * m.mu * th * dt;
    i_occ += c * c * dt;
    i_db += c * sigma * increments[j];
    const double bracket =
        corridor_b2_primitive(states[j + 1], m.rho) - b2bar_start + i_tanh - i_occ + i_db;
    out[j + 1] = i_b1 + two_over_s2 * bracket;
  }
}

VariationRecord first_variation_ode(const DriftSpec& spec, const PathEnsemble& e,
                                    std::optional<double> frozen, int threads) {
  require_smooth(spec);
  VariationRecord r = make_record(VariationMethod::ode, e);
  parallel_for_blocks(e.n_paths, 256, threads, [&](std::size_t b, std::size_t end) {
    for (std::size_t p = b; p < end; ++p) {
      log_phi_ode_path(spec, e.grid, 0, e.path(p), e.path_controls(p), frozen, row(r, p));
    }
  });
  return r;
}

VariationRecord first_variation_ode(const MollifiedSpec& mspec, const PathEnsemble& e,
                                    std::optional<double> frozen, int threads) {
  return first_variation_ode(mspec.as_drift_spec(), e, frozen, threads);
}

VariationRecord first_variation_localtime(const DriftSpec& spec, const PathEnsemble& e,
                                          double bandwidth, std::optional<double> frozen,
                                          int threads) {
  VariationRecord r = make_record(VariationMethod::localtime, e);
  parallel_for_blocks(e.n_paths, 64, threads, [&](std::size_t b, std::size_t end) {
    for (std::size_t p = b; p < end; ++p) {
      log_phi_localtime_path(spec, e.grid, 0, e.path(p), e.path_controls(p), bandwidth, frozen,
                             row(r, p));
    }
  });
  return r;
}

VariationRecord first_variation_corridor_cf(const DriftSpec& spec, const PathEnsemble& e) {
  if (!spec.corridor) throw std::invalid_argument("closed form needs the corridor model");
  const CorridorModel& m = *spec.corridor;
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    for (int k = 0; k < e.grid.steps; ++k) {
      if (std::abs(e.state(p, k)) > m.rho && e.control(p, k) != 1.0) {
        throw std::invalid_argument("closed form requires alpha = 1 outside the corridor");
      }
    }
  }
  VariationRecord r = make_record(VariationMethod::corridor_closed_form, e);
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    log_phi_corridor_path(m, spec.sigma, e.grid, 0, e.path(p), e.path_increments(p), row(r, p));
  }
  return r;
}

VariationRecord finite_difference_flow(const DriftSpec& spec, const ControlPolicy& policy,
                                       const TimeGrid& grid, double x, double h,
                                       std::size_t n_paths, std::uint64_t seed, int threads) {
  if (!(h >= 1e-8)) throw std::invalid_argument("finite-difference step below 1e-8");
  VariationRecord r;
  r.method = VariationMethod::finite_difference;
  r.grid = grid;
  r.n_paths = n_paths;
  r.exponential = false;
  const std::size_t nodes = grid.nodes();
  r.values.assign(n_paths * nodes, 0.0);
  const NoiseKey key{seed, 0};
  parallel_for_blocks(n_paths, 64, threads, [&](std::size_t b, std::size_t end) {
    std::vector<double> up(nodes), down(nodes), inc(grid.steps), ctl(nodes);
    for (std::size_t p = b; p < end; ++p) {
      simulate_path(spec, policy, grid, key, p, 0, x + h, AuxState{}, 1.0, up, inc, ctl);
      simulate_path(spec, policy, grid, key, p, 0, x - h, AuxState{}, 1.0, down, inc, ctl);
      for (std::size_t k = 0; k < nodes; ++k) r.values[p * nodes + k] = (up[k] - down[k]) / (2.0 * h);
    }
  });
  return r;
}

MalliavinRecord malliavin_derivative(const DriftSpec& spec, const ControlPolicy& policy,
                                     const PathEnsemble& e, const VariationRecord& phi,
                                     std::size_t path, int t_node) {
  if (t_node < 0 || t_node > e.grid.steps) throw std::invalid_argument("t outside the grid");
  MalliavinRecord m;
  m.path = path;
  m.t_node = t_node;
  m.method = phi.method;
  const int steps = e.grid.steps;
  const double dt = e.grid.dt();
  m.values.assign(steps - t_node + 1, 0.0);

  if (policy.kind != PolicyKind::bm_functional) {
    for (int s = t_node; s <= steps; ++s) m.values[s - t_node] = spec.sigma * phi.phi(path, t_node, s);
    return m;
  }

  // Brownian path B_r = sum_{k<r} dB_k, and D_t alpha_u accumulated over r > t
  // (B_r for r <= t does not see the increment at t).
  std::vector<double> B(steps + 1, 0.0);
  for (int k = 0; k < steps; ++k) B[k + 1] = B[k] + e.increment(path, k);
  double d_alpha = 0.0;
  double integral = 0.0;
  for (int s = t_node; s <= steps; ++s) {
    m.values[s - t_node] = phi.phi(path, t_node, s) * (integral + spec.sigma);
    if (s == steps) break;
    const double t = e.grid.t(s);
    const double a = e.control(path, s);
    integral += spec.b2.eval(e.state(path, s)) * spec.b3.partial_a(t, a) * d_alpha /
                phi.phi(path, t_node, s) * dt;
    const int r = s + 1;
    if (r > t_node && r < steps) {
      const double q = 1.0 + B[r] * B[r];
      d_alpha += std::exp(-e.grid.t(r)) * (-2.0 * B[r]) / (q * q) * dt;
    }
  }
  return m;
}

void write_variation_csv(const VariationRecord& rec, std::span<const std::pair<int, int>> pairs,
                         std::ostream& os) {
  CsvWriter w(os, {"path_id", "s", "t", "phi", "method"});
  for (std::size_t p = 0; p < rec.n_paths; ++p) {
    for (const auto& [s, t] : pairs) {
      w.field(p).field(rec.grid.t(s)).field(rec.grid.t(t)).field(rec.phi(p, s, t));
      w.field(method_name(rec.method));
      w.end_row();
    }
  }
}

}  // namespace bvsmp
