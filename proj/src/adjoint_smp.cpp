#include "bvsmp/adjoint_smp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"
#include <ostream>
#include <stdexcept>

#include "bvsmp/csv.hpp"
#include "bvsmp/local_time.hpp"
#include "bvsmp/parallel.hpp"

namespace bvsmp {

Hamiltonian Hamiltonian::terminal_quadratic(DriftSpec drift) {
  Hamiltonian H;
  auto zero = [](double, double, double) { return 0.0; };
  H.f = zero;
  H.f_x = zero;
  H.f_a = zero;
  H.g = [](double x) { return x * x; };
  H.g_x = [](double x) { return 2.0 * x; };
  H.drift = std::move(drift);
  H.zero_running_cost = true;
  return H;
}

HamiltonianValue hamiltonian_eval(const Hamiltonian& H, double t, double x, double y, double a) {
  HamiltonianValue v;
  v.value = H.f(t, x, a) + eval_drift(H.drift, t, x, a) * y;
  v.partial_a = H.f_a(t, x, a) + H.drift.b2.eval(x) * H.drift.b3.partial_a(t, a) * y;
  return v;
}

double quadratic_growth_constant(const Hamiltonian& H, double T) {
  double c = 0.0;
  for (double t : {0.0, 0.5 * T, T}) {
    for (int i = -20; i <= 20; ++i) {
      const double x = 0.5 * i;
      for (int j = -5; j <= 5; ++j) {
        const double a = 0.2 * j;
        const double v = std::abs(H.f(t, x, a)) + std::abs(H.f_x(t, x, a)) + std::abs(H.f_a(t, x, a));
        c = std::max(c, v / (1.0 + x * x + a * a));
      }
    }
  }
  return c;
}

double CheckpointSample::payoff(const Hamiltonian& H, std::size_t c, std::size_t p) const {
  const std::size_t last = nodes.size() - 1;
  const std::size_t i = index(c, p), e = index(last, p);
  double v = std::exp(log_phi[e] - log_phi[i]) * H.g_x(x[e]);
  if (!running.empty()) v += std::exp(-log_phi[i]) * (running[e] - running[i]);
  return v;
}

namespace {

std::vector<int> normalize_nodes(std::vector<int> nodes, const TimeGrid& grid) {
  for (int k : nodes) {
    if (k < 0 || k > grid.steps) throw std::invalid_argument("checkpoint outside the grid");
  }
  nodes.push_back(grid.steps);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// log Phi_{start, k} along one (sub)path by the requested method.
void path_log_phi(const DriftSpec& spec, const TimeGrid& grid, int start, std::span<const double> xs,
                  std::span<const double> dbs, std::span<const double> ctl, VariationMethod method,
                  double bandwidth, std::optional<double> frozen, std::span<double> out) {
  switch (method) {
    case VariationMethod::ode:
      log_phi_ode_path(spec, grid, start, xs, ctl, frozen, out);
      return;
    case VariationMethod::localtime:
      log_phi_localtime_path(spec, grid, start, xs, ctl, bandwidth, frozen, out);
      return;
    case VariationMethod::corridor_closed_form:
      if (!spec.corridor) throw std::invalid_argument("closed form needs the corridor model");
      for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
        if (std::abs(xs[j]) > spec.corridor->rho && ctl[j] != 1.0) {
          throw std::invalid_argument("closed form requires alpha = 1 outside the corridor");
        }
      }
      log_phi_corridor_path(*spec.corridor, spec.sigma, grid, start, xs, dbs, out);
      return;
    case VariationMethod::finite_difference:
      break;
  }
  throw std::invalid_argument("finite differences do not give a pathwise first variation");
}

double resolve_bandwidth(double bw, const DriftSpec& spec, const TimeGrid& grid) {
  return bw > 0 ? bw : default_bandwidth(spec.sigma, grid.dt());
}

// Running integral int_0^{t_k} Phi_{0,s} f_x ds (left point) at every node.
void running_integral(const Hamiltonian& H, const TimeGrid& grid, std::span<const double> xs,
                      std::span<const double> ctl, std::span<const double> lp,
                      std::vector<double>& out) {
  out.assign(xs.size(), 0.0);
  if (H.zero_running_cost) return;
  const double dt = grid.dt();
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double t = grid.t(static_cast<int>(k));
    out[k + 1] = out[k] + std::exp(lp[k]) * H.f_x(t, xs[k], ctl[k]) * dt;
  }
}

}  // namespace

CheckpointSample sample_checkpoints(const Hamiltonian& H, const ControlPolicy& policy,
                                    const TimeGrid& grid, std::vector<int> nodes,
                                    std::size_t n_paths, std::uint64_t seed,
                                    const SamplerOptions& opts) {
  CheckpointSample s;
  s.grid = grid;
  s.nodes = normalize_nodes(std::move(nodes), grid);
  s.n_paths = n_paths;
  const std::size_t nc = s.nodes.size();
  s.x.assign(nc * n_paths, 0.0);
  s.log_phi.assign(nc * n_paths, 0.0);
  s.running.assign(nc * n_paths, 0.0);
  const double bw = resolve_bandwidth(opts.bandwidth, H.drift, grid);
  const NoiseKey key{seed, opts.sim.stream};
  parallel_for_blocks(n_paths, 64, opts.sim.threads, [&](std::size_t b, std::size_t e) {
    const auto nn = static_cast<std::size_t>(grid.nodes());
    std::vector<double> xs(nn), dbs(grid.steps), ctl(nn), lp(nn), run;
    for (std::size_t p = b; p < e; ++p) {
      simulate_path(H.drift, policy, grid, key, opts.sim.first_path + p, 0, opts.sim.x0,
                    AuxState{}, opts.sim.noise_sign, xs, dbs, ctl);
      path_log_phi(H.drift, grid, 0, xs, dbs, ctl, opts.method, bw, opts.frozen_control, lp);
      running_integral(H, grid, xs, ctl, lp, run);
      for (std::size_t c = 0; c < nc; ++c) {
        const int k = s.nodes[c];
        s.x[s.index(c, p)] = xs[k];
        s.log_phi[s.index(c, p)] = lp[k];
        s.running[s.index(c, p)] = run[k];
      }
    }
  });
  return s;
}

CheckpointSample sample_checkpoints(const Hamiltonian& H, const PathEnsemble& e,
                                    const VariationRecord& phi, std::vector<int> nodes) {
  CheckpointSample s;
  s.grid = e.grid;
  s.nodes = normalize_nodes(std::move(nodes), e.grid);
  s.n_paths = e.n_paths;
  const std::size_t nc = s.nodes.size();
  s.x.assign(nc * e.n_paths, 0.0);
  s.log_phi.assign(nc * e.n_paths, 0.0);
  s.running.assign(nc * e.n_paths, 0.0);
  std::vector<double> lp(e.grid.nodes()), run;
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    for (int k = 0; k <= e.grid.steps; ++k) lp[k] = phi.log_phi(p, k);
    running_integral(H, e.grid, e.path(p), e.path_controls(p), lp, run);
    for (std::size_t c = 0; c < nc; ++c) {
      const int k = s.nodes[c];
      s.x[s.index(c, p)] = e.state(p, k);
      s.log_phi[s.index(c, p)] = lp[k];
      s.running[s.index(c, p)] = run[k];
    }
  }
  return s;
}

CheckpointSample sample_checkpoints(const TimeGrid& grid, const CorridorKernelArgs& args,
                                    const CorridorKernelOutput& out) {
  if (!args.track_phi) throw std::invalid_argument("kernel run must track the first variation");
  if (args.start_step != 0 || args.end_step != grid.steps || args.checkpoints.empty() ||
      args.checkpoints.back() != grid.steps) {
    throw std::invalid_argument("kernel run must cover the whole grid and record T");
  }
  CheckpointSample s;
  s.grid = grid;
  s.nodes = args.checkpoints;
  s.n_paths = out.n_paths;
  s.x = out.x;
  s.log_phi = out.log_phi;
  return s;
}

AdjointRegression estimate_adjoint_regression(const Hamiltonian& H, const CheckpointSample& s,
                                              const BasisConfig& basis) {
  AdjointRegression r;
  r.nodes = s.nodes;
  r.estimate.method = AdjointMethod::regression;
  r.estimate.grid = s.grid;
  std::vector<double> xs(s.n_paths), pay(s.n_paths);
  for (std::size_t c = 0; c < s.nodes.size(); ++c) {
    const int node = s.nodes[c];
    if (node == s.grid.steps) {
      r.fits.emplace_back();
      r.estimate.basis.push_back("exact");
      for (std::size_t p = 0; p < s.n_paths; ++p) {
        const double x = s.x[s.index(c, p)];
        r.estimate.points.push_back({node, p, x, H.g_x(x), 0.0});
      }
      continue;
    }
    for (std::size_t p = 0; p < s.n_paths; ++p) {
      xs[p] = s.x[s.index(c, p)];
      pay[p] = s.payoff(H, c, p);
    }
    auto fit = ConditionalFit::fit(xs, pay, basis);
    if (fit.reduced()) {
      r.estimate.warnings.push_back("basis reduced at node " + std::to_string(node) + ": " +
                                    fit.description());
    }
    r.estimate.basis.push_back(fit.description());
    for (std::size_t p = 0; p < s.n_paths; ++p) {
      r.estimate.points.push_back({node, p, xs[p], fit.value(xs[p]), fit.std_error(xs[p])});
    }
    r.fits.push_back(std::move(fit));
  }
  return r;
}

namespace {

bool kernel_eligible(const Hamiltonian& H, const ControlPolicy& policy, const NestedOptions& o) {
  if (!H.drift.corridor || !H.zero_running_cost) return false;
  if (o.method != VariationMethod::corridor_closed_form) return false;
  return policy.kind == PolicyKind::corridor ||
         (policy.kind == PolicyKind::constant && policy.value == 1.0);
}

SampleStats nested_kernel(const Hamiltonian& H, const ControlPolicy& policy, const TimeGrid& grid,
                          const OuterState& st, const NestedOptions& o) {
  const CorridorModel& m = *H.drift.corridor;
  CorridorKernelArgs a;
  a.mu = m.mu;
  a.M = m.M;
  a.rho = m.rho;
  a.sigma = H.drift.sigma;
  a.dt = grid.dt();
  a.policy = *policy.kernel_policy();
  a.policy_value = policy.value;
  a.policy_rho = policy.rho;
  a.noise = NoiseKey{o.seed, nested_stream(static_cast<std::uint32_t>(st.node))};
  a.path_base = inner_path_id(st.outer_id, 0);
  a.start_step = st.node;
  a.end_step = grid.steps;
  a.x_start = st.x;
  a.checkpoints = {grid.steps};
  a.track_phi = true;
  const auto out = run_corridor_kernel(a, o.inner_paths, 1);
  std::vector<double> v(o.inner_paths);
  for (std::size_t j = 0; j < o.inner_paths; ++j) {
    v[j] = std::exp(out.log_phi_at(0, j)) * H.g_x(out.x_at(0, j));
  }
  return sample_stats(v);
}

SampleStats nested_generic(const Hamiltonian& H, const ControlPolicy& policy, const TimeGrid& grid,
                           const OuterState& st, const NestedOptions& o, double bw) {
  const auto nn = static_cast<std::size_t>(grid.steps - st.node + 1);
  std::vector<double> xs(nn), dbs(nn - 1), ctl(nn), lp(nn), v(o.inner_paths);
  const NoiseKey key{o.seed, nested_stream(static_cast<std::uint32_t>(st.node))};
  const double dt = grid.dt();
  for (std::size_t j = 0; j < o.inner_paths; ++j) {
    simulate_path(H.drift, policy, grid, key, inner_path_id(st.outer_id, static_cast<std::uint32_t>(j)),
                  st.node, st.x, AuxState{}, 1.0, xs, dbs, ctl);
    path_log_phi(H.drift, grid, st.node, xs, dbs, ctl, o.method, bw, o.frozen_control, lp);
    double val = std::exp(lp[nn - 1]) * H.g_x(xs[nn - 1]);
    if (!H.zero_running_cost) {
      for (std::size_t k = 0; k + 1 < nn; ++k) {
        val += std::exp(lp[k]) * H.f_x(grid.t(st.node + static_cast<int>(k)), xs[k], ctl[k]) * dt;
      }
    }
    v[j] = val;
  }
  return sample_stats(v);
}

}  // namespace

AdjointEstimate estimate_adjoint_nested(const Hamiltonian& H, const ControlPolicy& policy,
                                        const TimeGrid& grid, std::span<const OuterState> states,
                                        const NestedOptions& o) {
  if (!policy.is_markov()) throw std::invalid_argument("nested adjoint needs a Markov feedback policy");
  if (o.inner_paths == 0) throw std::invalid_argument("nested adjoint needs inner paths");
  AdjointEstimate est;
  est.method = AdjointMethod::nested;
  est.grid = grid;
  est.inner_paths = o.inner_paths;
  if (o.inner_paths < 100) {
    est.warnings.push_back("fewer than 100 inner paths: high-variance nested estimate");
  }
  for (const auto& st : states) {
    if (st.node < 0 || st.node > grid.steps) throw std::invalid_argument("outer node outside the grid");
  }
  const bool fast = kernel_eligible(H, policy, o);
  const double bw = resolve_bandwidth(o.bandwidth, H.drift, grid);
  est.points.resize(states.size());
  parallel_for_blocks(states.size(), 1, o.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& st = states[i];
      AdjointPoint pt{st.node, static_cast<std::size_t>(st.outer_id), st.x, H.g_x(st.x), 0.0};
      if (st.node < grid.steps) {
        const SampleStats s =
            fast ? nested_kernel(H, policy, grid, st, o) : nested_generic(H, policy, grid, st, o, bw);
        pt.y = s.mean;
        pt.se = s.std_error;
      }
      est.points[i] = pt;
    }
  });
  return est;
}

std::vector<double> default_beta_grid() {
  std::vector<double> b(21);
  for (int i = 0; i <= 20; ++i) b[i] = -1.0 + 0.1 * i;
  b[10] = 0.0;
  b[20] = 1.0;
  return b;
}

NecessaryConditionResult necessary_condition_check(const Hamiltonian& H,
                                                   const AdjointEstimate& adj,
                                                   const ControlPolicy& policy,
                                                   std::span<const double> beta_grid) {
  if (!policy.is_markov()) throw std::invalid_argument("condition check needs a feedback policy");
  for (double b : beta_grid) {
    if (!(b >= -1.0 && b <= 1.0)) throw std::invalid_argument("beta outside the control set [-1, 1]");
  }
  NecessaryConditionResult r;
  r.min_residual = std::numeric_limits<double>::infinity();
  r.min_residual_plus_3se = std::numeric_limits<double>::infinity();
  std::size_t violations = 0, sign_hits = 0;
  for (const auto& pt : adj.points) {
    const double t = adj.grid.t(pt.node);
    const double a = policy.eval(t, pt.x, AuxState{});
    const double dH = hamiltonian_eval(H, t, pt.x, pt.y, a).partial_a;
    const double b2 = H.drift.b2.eval(pt.x);
    const double lever = std::abs(b2 * H.drift.b3.partial_a(t, a));
    for (double beta : beta_grid) {
      const double res = dH * (beta - a);
      const double se = lever * std::abs(beta - a) * pt.se;
      r.min_residual = std::min(r.min_residual, res);
      r.min_residual_plus_3se = std::min(r.min_residual_plus_3se, res + 3.0 * se);
      if (res < -3.0 * se) ++violations;
      ++r.n_samples;
    }
    if (b2 != 0.0) {
      ++r.n_sign_samples;
      if ((pt.y > 0) == (pt.x > 0) && pt.y != 0.0) ++sign_hits;
    }
  }
  if (r.n_samples == 0) {
    r.min_residual = r.min_residual_plus_3se = 0.0;
  } else {
    r.violation_fraction = double(violations) / double(r.n_samples);
  }
  if (r.n_sign_samples > 0) r.sign_relation_fraction = double(sign_hits) / double(r.n_sign_samples);
  return r;
}

SymmetryStatistic symmetry_statistic(const CorridorKernelArgs& base, int steps,
                                     const SymmetryOptions& o) {
  if (o.outer_paths == 0 || o.inner_paths == 0) throw std::invalid_argument("I1 needs outer and inner paths");
  CorridorKernelArgs outer = base;
  outer.noise = NoiseKey{o.seed, 0};
  outer.path_base = 0;
  outer.noise_sign = o.noise_sign;
  outer.start_step = 0;
  outer.end_step = steps;
  outer.checkpoints = {};
  outer.track_phi = false;
  outer.track_crossing = true;
  const auto first = run_corridor_kernel(outer, o.outer_paths, o.threads);

  std::vector<double> contrib(o.outer_paths, 0.0);
  parallel_for_blocks(o.outer_paths, 8, o.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const int tau = first.crossing_step[p];
      if (tau < 0) continue;
      if (tau == steps) {
        contrib[p] = first.crossing_x[p];
        continue;
      }
      CorridorKernelArgs in = outer;
      in.noise = NoiseKey{o.seed, nested_stream(static_cast<std::uint32_t>(tau))};
      in.path_base = inner_path_id(p, 0);
      in.start_step = tau;
      in.x_start = first.crossing_x[p];
      in.checkpoints = {steps};
      in.track_phi = true;
      in.track_crossing = false;
      const auto out = run_corridor_kernel(in, o.inner_paths, 1);
      double s = 0.0;
      for (std::size_t j = 0; j < o.inner_paths; ++j) s += std::exp(out.log_phi_at(0, j)) * out.x_at(0, j);
      contrib[p] = s / double(o.inner_paths);
    }
  });
  SymmetryStatistic st;
  const SampleStats s = sample_stats(contrib);
  st.mean = s.mean;
  st.std_error = s.std_error;
  st.ci_low = s.mean - 1.96 * s.std_error;
  st.ci_high = s.mean + 1.96 * s.std_error;
  st.outer_paths = o.outer_paths;
  st.inner_paths = o.inner_paths;
  for (int c : first.crossing_step) st.hits += c >= 0 ? 1 : 0;
  return st;
}

void write_smp_report_json(const SMPReport& r, std::ostream& os) {
  nlohmann::ordered_json j;
  j["necessary_condition"] = {{"min_residual", r.condition.min_residual},
                              {"min_residual_plus_3se", r.condition.min_residual_plus_3se},
                              {"violation_fraction", r.condition.violation_fraction},
                              {"sign_relation_fraction", r.condition.sign_relation_fraction},
                              {"n_samples", r.condition.n_samples},
                              {"n_sign_samples", r.condition.n_sign_samples}};
  j["symmetry_i1"] = {{"mean", r.i1.mean},
                      {"std_error", r.i1.std_error},
                      {"ci_low", r.i1.ci_low},
                      {"ci_high", r.i1.ci_high},
                      {"outer_paths", r.i1.outer_paths},
                      {"inner_paths", r.i1.inner_paths},
                      {"hits", r.i1.hits}};
  j["nested_vs_regression"] = {{"n_compared", r.n_compared},
                               {"max_abs_z", r.max_abs_z},
                               {"n_beyond_3se", r.n_beyond_3se},
                               {"z_std", r.z_std}};
  j["warnings"] = r.warnings;
  os << j.dump(2) << '\n';
}

void write_adjoint_csv(std::span<const AdjointEstimate> estimates, std::ostream& os) {
  CsvWriter w(os, {"t", "x", "y", "se", "method"});
  for (const auto& est : estimates) {
    const std::string_view m = est.method == AdjointMethod::nested ? "nested" : "regression";
    for (const auto& pt : est.points) {
      w.field(est.grid.t(pt.node)).field(pt.x).field(pt.y).field(pt.se).field(m);
      w.end_row();
    }
  }
}

void write_adjoint_csv(const AdjointEstimate& estimate, std::ostream& os) {
  write_adjoint_csv(std::span<const AdjointEstimate>(&estimate, 1), os);
}

}  // namespace bvsmp
