#include "bvsmp/corridor_app.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "bvsmp/csv.hpp"
#include "bvsmp/parallel.hpp"

namespace bvsmp {

std::vector<std::string> CorridorParams::validate() const {
  std::vector<std::string> d;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) d.push_back(std::string(name) + " must be positive");
  };
  positive(mu, "mu");
  positive(M, "M");
  positive(rho, "rho");
  positive(sigma, "sigma");
  positive(T, "T");
  positive(dt, "dt");
  if (!std::isfinite(x0)) d.push_back("x0 must be finite");
  if (dt > 0 && T > 0 && !(dt < T)) d.push_back("dt must be smaller than T");
  if (n_paths == 0) d.push_back("n_paths must be at least 1");
  if (threads < 1) d.push_back("threads must be at least 1");
  return d;
}

TimeGrid CorridorParams::grid() const { return TimeGrid::from_dt(T, dt); }

DriftSpec CorridorParams::spec() const { return corridor_spec(mu, M, rho, sigma); }

CorridorKernelArgs CorridorParams::kernel_args(const ControlPolicy& policy) const {
  const auto kp = policy.kernel_policy();
  if (!kp) throw std::invalid_argument("policy " + policy.id + " has no kernel form");
  CorridorKernelArgs a;
  a.mu = mu;
  a.M = M;
  a.rho = rho;
  a.sigma = sigma;
  a.dt = grid().dt();
  a.policy = *kp;
  a.policy_value = policy.value;
  a.policy_rho = policy.rho;
  a.noise = NoiseKey{seed, 0};
  a.start_step = 0;
  a.end_step = grid().steps;
  a.x_start = x0;
  return a;
}

std::vector<ControlPolicy> policy_catalog(double rho) {
  return {ControlPolicy::corridor(rho),      ControlPolicy::rational_x(),
          ControlPolicy::rational_1(),       ControlPolicy::sign_pos(),
          ControlPolicy::sign_neg(),         ControlPolicy::neg_corridor(rho),
          ControlPolicy::bm_functional()};
}

std::optional<ControlPolicy> find_policy(const std::string& id, double rho) {
  if (id == "zero") return ControlPolicy::constant(0.0, "zero");
  if (id == "full") return ControlPolicy::constant(1.0, "full");
  for (auto& p : policy_catalog(rho)) {
    if (p.id == id) return p;
  }
  return std::nullopt;
}

namespace {

FigureRow summarize(const std::vector<double>& costs, const std::string& id, double rho,
                    std::uint64_t seed) {
  const SampleStats s = sample_stats(costs);
  FigureRow r;
  r.policy_id = id;
  r.rho = rho;
  r.mean = s.mean;
  r.std_error = s.std_error;
  r.ci_low = s.mean - 1.96 * s.std_error;
  r.ci_high = s.mean + 1.96 * s.std_error;
  r.n_paths = s.n;
  r.seed = seed;
  return r;
}

std::vector<double> terminal_costs(const CorridorKernelArgs& base, const TimeGrid& grid,
                                   std::size_t n, int threads) {
  CorridorKernelArgs a = base;
  a.checkpoints = {grid.steps};
  const auto out = run_corridor_kernel(a, n, threads);
  std::vector<double> c(n);
  for (std::size_t p = 0; p < n; ++p) c[p] = out.x_at(0, p) * out.x_at(0, p);
  return c;
}

void check(const CorridorParams& p) {
  const auto d = p.validate();
  if (!d.empty()) throw ConfigError(d.front());
}

}  // namespace

FigureTable run_figure1(const CorridorParams& params, const std::vector<ControlPolicy>& policies) {
  check(params);
  const TimeGrid grid = params.grid();
  FigureTable t;
  for (const auto& pol : policies) {
    t.costs.push_back(terminal_costs(params.kernel_args(pol), grid, params.n_paths, params.threads));
    t.rows.push_back(summarize(t.costs.back(), pol.id, params.rho, params.seed));
  }
  return t;
}

FigureTable run_figure1(const CorridorParams& params) {
  return run_figure1(params, policy_catalog(params.rho));
}

std::vector<double> default_rho_grid() { return {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}; }

FigureTable run_figure2(const CorridorParams& params, const std::vector<double>& rho_grid) {
  check(params);
  if (!std::is_sorted(rho_grid.begin(), rho_grid.end())) throw ConfigError("rho_grid must be sorted");
  const TimeGrid grid = params.grid();
  FigureTable t;
  for (double rho : rho_grid) {
    CorridorParams p = params;
    p.rho = rho;
    check(p);
    t.costs.push_back(terminal_costs(p.kernel_args(ControlPolicy::corridor(rho)), grid, p.n_paths,
                                     p.threads));
    t.rows.push_back(summarize(t.costs.back(), "opt_corridor", rho, params.seed));
  }
  return t;
}

std::vector<PairedComparison> compare_to_row(const FigureTable& t, std::size_t ref) {
  std::vector<PairedComparison> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i == ref) continue;
    const SampleStats d = paired_difference(t.costs[ref], t.costs[i]);
    out.push_back({t.rows[ref].policy_id, t.rows[i].policy_id, d.mean, d.std_error});
  }
  return out;
}

std::vector<PairedComparison> adjacent_differences(const FigureTable& t) {
  std::vector<PairedComparison> out;
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const SampleStats d = paired_difference(t.costs[i + 1], t.costs[i]);
    out.push_back({format_double(t.rows[i + 1].rho), format_double(t.rows[i].rho), d.mean,
                   d.std_error});
  }
  return out;
}

void write_figure1_csv(const FigureTable& t, std::ostream& os) {
  CsvWriter w(os, {"policy_id", "mean", "ci_low", "ci_high", "n_paths", "seed"});
  for (const auto& r : t.rows) {
    w.field(r.policy_id).field(r.mean).field(r.ci_low).field(r.ci_high).field(r.n_paths).field(
        static_cast<unsigned long long>(r.seed));
    w.end_row();
  }
}

void write_figure2_csv(const FigureTable& t, std::ostream& os) {
  CsvWriter w(os, {"rho", "mean", "ci_low", "ci_high", "n_paths", "seed"});
  for (const auto& r : t.rows) {
    w.field(r.rho).field(r.mean).field(r.ci_low).field(r.ci_high).field(r.n_paths).field(
        static_cast<unsigned long long>(r.seed));
    w.end_row();
  }
}

SmpVerification verify_optimal_control(const CorridorParams& params, const SmpOptions& o) {
  check(params);
  if (o.n_nodes < 2) throw ConfigError("smp needs at least two adjoint nodes");
  const TimeGrid grid = params.grid();
  const DriftSpec spec = params.spec();
  const Hamiltonian H = Hamiltonian::terminal_quadratic(spec);
  const ControlPolicy opt = ControlPolicy::corridor(params.rho);

  SmpVerification v;
  for (int i = 0; i < o.n_nodes; ++i) {
    v.nodes.push_back(static_cast<int>(std::lround(double(i) * grid.steps / (o.n_nodes - 1))));
  }
  v.nodes.erase(std::unique(v.nodes.begin(), v.nodes.end()), v.nodes.end());

  CorridorKernelArgs a = params.kernel_args(opt);
  a.checkpoints = v.nodes;
  a.track_phi = true;
  const auto out = run_corridor_kernel(a, o.outer_paths, params.threads);
  const CheckpointSample sample = sample_checkpoints(grid, a, out);

  BasisConfig basis;
  basis.interior_knots = o.knots;
  basis.extra_knots = {-params.rho, params.rho};
  auto reg = estimate_adjoint_regression(H, sample, basis);
  v.regression = reg.estimate;
  v.report.warnings = reg.estimate.warnings;

  // nested estimates at states spread over the empirical quantiles of X_t
  std::vector<OuterState> states;
  std::vector<std::size_t> fit_index;
  std::vector<std::size_t> order(sample.n_paths);
  for (std::size_t c = 0; c < v.nodes.size(); ++c) {
    if (v.nodes[c] == grid.steps) continue;
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return sample.x[sample.index(c, i)] < sample.x[sample.index(c, j)];
    });
    for (std::size_t i = 0; i < o.states_per_node; ++i) {
      const auto rank = static_cast<std::size_t>((double(i) + 0.5) / double(o.states_per_node) *
                                                 double(sample.n_paths));
      const std::size_t p = order[std::min(rank, sample.n_paths - 1)];
      states.push_back({v.nodes[c], sample.x[sample.index(c, p)], p});
      fit_index.push_back(c);
    }
  }
  NestedOptions no;
  no.inner_paths = o.inner_paths;
  no.seed = params.seed;
  no.method = VariationMethod::corridor_closed_form;
  no.threads = params.threads;
  v.nested = estimate_adjoint_nested(H, opt, grid, states, no);
  for (const auto& w : v.nested.warnings) v.report.warnings.push_back(w);

  double z2 = 0.0;
  v.regression_at_states = v.nested;
  v.regression_at_states.method = AdjointMethod::regression;
  v.regression_at_states.inner_paths = 0;
  v.regression_at_states.warnings.clear();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& fit = reg.fits[fit_index[i]];
    const double y = fit.value(states[i].x), se = fit.std_error(states[i].x);
    v.regression_at_states.points[i].y = y;
    v.regression_at_states.points[i].se = se;
    const auto& pt = v.nested.points[i];
    const double comb = std::sqrt(se * se + pt.se * pt.se);
    const double z = comb > 0 ? (pt.y - y) / comb : (pt.y == y ? 0.0 : INFINITY);
    v.nested_regression_z.push_back(z);
    v.report.max_abs_z = std::max(v.report.max_abs_z, std::abs(z));
    v.report.n_beyond_3se += std::abs(z) > 3.0 ? 1 : 0;
    z2 += z * z;
  }
  v.report.n_compared = states.size();
  v.report.z_std = states.empty() ? 0.0 : std::sqrt(z2 / double(states.size()));

  const auto beta = default_beta_grid();
  v.report.condition = necessary_condition_check(H, v.regression, opt, beta);

  if (o.run_i1) {
    SymmetryOptions so;
    so.outer_paths = o.i1_outer;
    so.inner_paths = o.i1_inner;
    so.seed = params.seed;
    so.threads = params.threads;
    v.report.i1 = symmetry_statistic(params.kernel_args(opt), grid.steps, so);
  }
  if (o.run_costs) {
    CorridorParams cp = params;
    cp.n_paths = o.cost_paths;
    v.cost_ordering = compare_to_row(run_figure1(cp), 0);
  }
  return v;
}

std::vector<MollificationRow> mollification_convergence(const CorridorParams& params,
                                                        const std::vector<int>& levels,
                                                        bool drop_b2) {
  check(params);
  const TimeGrid grid = params.grid();
  DriftSpec raw = params.spec();
  if (drop_b2) {
    raw.b2 = BVFunction::zero();
    raw.corridor.reset();
    raw.family = "corridor_b1_only";
  }
  const ControlPolicy full = ControlPolicy::constant(1.0, "full");
  const NoiseKey key{params.seed, 0};
  std::vector<MollificationRow> rows;
  for (int n : levels) {
    if (n < 1) throw ConfigError("mollification level must be at least 1");
    const DriftSpec smooth = mollify(raw, n).as_drift_spec();
    std::vector<double> sup(params.n_paths), sq(params.n_paths);
    parallel_for_blocks(params.n_paths, 64, params.threads, [&](std::size_t b, std::size_t e) {
      const auto nn = static_cast<std::size_t>(grid.nodes());
      std::vector<double> xa(nn), xb(nn), inc(grid.steps), ctl(nn);
      for (std::size_t p = b; p < e; ++p) {
        simulate_path(raw, full, grid, key, p, 0, params.x0, AuxState{}, 1.0, xa, inc, ctl);
        simulate_path(smooth, full, grid, key, p, 0, params.x0, AuxState{}, 1.0, xb, inc, ctl);
        double m = 0.0;
        for (std::size_t k = 0; k < nn; ++k) m = std::max(m, std::abs(xa[k] - xb[k]));
        sup[p] = m;
        sq[p] = m * m;
      }
    });
    const SampleStats s1 = sample_stats(sup), s2 = sample_stats(sq);
    rows.push_back({n, s1.mean, s1.std_error, s2.mean, s2.std_error, params.n_paths, params.seed});
  }
  return rows;
}

void write_mollification_csv(const std::vector<MollificationRow>& rows, std::ostream& os) {
  CsvWriter w(os, {"n", "mean_sup_abs", "se_sup_abs", "mean_sup_sq", "se_sup_sq", "n_paths", "seed"});
  for (const auto& r : rows) {
    w.field(r.n).field(r.mean_sup_abs).field(r.se_sup_abs).field(r.mean_sup_sq).field(r.se_sup_sq);
    w.field(r.n_paths).field(static_cast<unsigned long long>(r.seed));
    w.end_row();
  }
}

}  // namespace bvsmp
