#include "bvsmp/cli_runner.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "bvsmp/csv.hpp"
#include "bvsmp/local_time.hpp"
#include "bvsmp/rng.hpp"
#include "bvsmp/variation.hpp"

#ifndef BVSMP_VERSION
#define BVSMP_VERSION "0"
#endif

namespace bvsmp {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  const std::string t = trim(v);
  double d = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw ConfigParseError(field, field + ": expected a number, got '" + v + "'");
  }
  return d;
}

template <class I>
I to_integer(const std::string& field, const std::string& v) {
  const std::string t = trim(v);
  I i{};
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw ConfigParseError(field, field + ": expected an integer, got '" + v + "'");
  }
  return i;
}

bool to_bool(const std::string& field, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigParseError(field, field + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& field, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(field, s));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& field, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = [] {
    std::map<std::string, std::map<std::string, Setter>> m;
    m["experiment"] = {
        {"kind", [](auto& c, auto&, auto& v) { c.kind = trim(v); }},
        {"seed", [](auto& c, auto& f, auto& v) { c.seed = to_integer<std::uint64_t>(f, v); }},
        {"threads", [](auto& c, auto& f, auto& v) { c.threads = to_integer<int>(f, v); }},
        {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = trim(v); }},
    };
    m["corridor"] = {
        {"mu", [](auto& c, auto& f, auto& v) { c.corridor.mu = to_double(f, v); }},
        {"M", [](auto& c, auto& f, auto& v) { c.corridor.M = to_double(f, v); }},
        {"rho", [](auto& c, auto& f, auto& v) { c.corridor.rho = to_double(f, v); }},
        {"sigma", [](auto& c, auto& f, auto& v) { c.corridor.sigma = to_double(f, v); }},
        {"x0", [](auto& c, auto& f, auto& v) { c.corridor.x0 = to_double(f, v); }},
        {"T", [](auto& c, auto& f, auto& v) { c.corridor.T = to_double(f, v); }},
        {"dt", [](auto& c, auto& f, auto& v) { c.corridor.dt = to_double(f, v); }},
        {"n_paths", [](auto& c, auto& f, auto& v) { c.corridor.n_paths = to_integer<std::size_t>(f, v); }},
    };
    m["figure1"] = {
        {"policies", [](auto& c, auto&, auto& v) { c.figure1_policies = split_list(v); }},
    };
    m["figure2"] = {
        {"rho_grid", [](auto& c, auto& f, auto& v) { c.rho_grid = to_doubles(f, v); }},
    };
    m["smp"] = {
        {"outer_paths", [](auto& c, auto& f, auto& v) { c.smp.outer_paths = to_integer<std::size_t>(f, v); }},
        {"inner_paths", [](auto& c, auto& f, auto& v) { c.smp.inner_paths = to_integer<std::size_t>(f, v); }},
        {"nodes", [](auto& c, auto& f, auto& v) { c.smp.n_nodes = to_integer<int>(f, v); }},
        {"states_per_node", [](auto& c, auto& f, auto& v) { c.smp.states_per_node = to_integer<std::size_t>(f, v); }},
        {"i1_outer", [](auto& c, auto& f, auto& v) { c.smp.i1_outer = to_integer<std::size_t>(f, v); }},
        {"i1_inner", [](auto& c, auto& f, auto& v) { c.smp.i1_inner = to_integer<std::size_t>(f, v); }},
        {"knots", [](auto& c, auto& f, auto& v) { c.smp.knots = to_integer<int>(f, v); }},
        {"cost_paths", [](auto& c, auto& f, auto& v) { c.smp.cost_paths = to_integer<std::size_t>(f, v); }},
        {"run_i1", [](auto& c, auto& f, auto& v) { c.smp.run_i1 = to_bool(f, v); }},
        {"run_costs", [](auto& c, auto& f, auto& v) { c.smp.run_costs = to_bool(f, v); }},
    };
    m["localtime"] = {
        {"n_paths", [](auto& c, auto& f, auto& v) { c.localtime.n_paths = to_integer<std::size_t>(f, v); }},
        {"T", [](auto& c, auto& f, auto& v) { c.localtime.T = to_double(f, v); }},
        {"dt", [](auto& c, auto& f, auto& v) { c.localtime.dt = to_double(f, v); }},
        {"bandwidth_c", [](auto& c, auto& f, auto& v) { c.localtime.bandwidth_c = to_double(f, v); }},
        {"kappa", [](auto& c, auto& f, auto& v) { c.localtime.kappa = to_double(f, v); }},
    };
    m["variation"] = {
        {"n_paths", [](auto& c, auto& f, auto& v) { c.variation.n_paths = to_integer<std::size_t>(f, v); }},
        {"T", [](auto& c, auto& f, auto& v) { c.variation.T = to_double(f, v); }},
        {"dt", [](auto& c, auto& f, auto& v) { c.variation.dt = to_double(f, v); }},
        {"fd_h", [](auto& c, auto& f, auto& v) { c.variation.fd_h = to_double(f, v); }},
        {"smooth_control", [](auto& c, auto& f, auto& v) { c.variation.smooth_control = to_double(f, v); }},
        {"linear_rate", [](auto& c, auto& f, auto& v) { c.variation.linear_rate = to_double(f, v); }},
    };
    m["mollify"] = {
        {"levels", [](auto& c, auto& f, auto& v) {
           c.mollify.levels.clear();
           for (const auto& s : split_list(v)) c.mollify.levels.push_back(to_integer<int>(f, s));
         }},
        {"n_paths", [](auto& c, auto& f, auto& v) { c.mollify.n_paths = to_integer<std::size_t>(f, v); }},
        {"drop_b2", [](auto& c, auto& f, auto& v) { c.mollify.drop_b2 = to_bool(f, v); }},
    };
    m["spec"] = {
        {"family", [](auto& c, auto&, auto& v) { c.spec.family = trim(v); }},
        {"b1_coeffs", [](auto& c, auto& f, auto& v) { c.spec.b1_coeffs = to_doubles(f, v); }},
        {"b1_scale", [](auto& c, auto& f, auto& v) { c.spec.b1_scale = to_double(f, v); }},
        {"b2_coeffs", [](auto& c, auto& f, auto& v) { c.spec.b2_coeffs = to_doubles(f, v); }},
        {"b2_scale", [](auto& c, auto& f, auto& v) { c.spec.b2_scale = to_double(f, v); }},
        {"policy", [](auto& c, auto&, auto& v) { c.spec.policy = trim(v); }},
        {"n_paths", [](auto& c, auto& f, auto& v) { c.spec.n_paths = to_integer<std::size_t>(f, v); }},
    };
    return m;
  }();
  return s;
}

bool is_known_family(const std::string& f) { return f == "corridor" || f == "zero" || f == "polynomial"; }

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"figure1",        "figure2",         "smp-verify",
                                          "localtime-check", "variation-check", "mollify-sweep",
                                          "simulate"};
  return k;
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigParseError("", std::string("malformed config: ") + e.message() + " at line " +
                                   std::to_string(e.line()));
  }
  ExperimentConfig c;
  c.source = text;
  const auto& sch = schema();
  for (const auto& [section, keys] : tree) {
    const auto s = sch.find(section);
    if (s == sch.end()) throw ConfigParseError(section, "unknown section [" + section + "]");
    if (keys.empty() && !keys.data().empty()) {
      throw ConfigParseError(section, "key '" + section + "' outside a section");
    }
    for (const auto& [key, node] : keys) {
      const std::string field = section + "." + key;
      const auto k = s->second.find(key);
      if (k == s->second.end()) throw ConfigParseError(field, "unknown key " + field);
      k->second(c, field, node.data());
    }
  }
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) {
    throw ConfigParseError("experiment.kind", "experiment.kind: unknown experiment kind '" + c.kind + "'");
  }
  if (!is_known_family(c.spec.family)) {
    throw ConfigParseError("spec.family", "spec.family: unknown drift family '" + c.spec.family + "'");
  }
  c.corridor.seed = c.seed;
  c.corridor.threads = c.threads;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError("", "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  CorridorParams p = c.corridor;
  p.seed = c.seed;
  p.threads = c.threads;
  std::vector<std::string> d = p.validate();
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) d.push_back(msg);
  };
  need(!c.output_dir.empty(), "experiment.output_dir must not be empty");
  if (c.kind == "figure1") {
    for (const auto& id : c.figure1_policies) {
      need(find_policy(id, p.rho).has_value(), "figure1.policies: unknown policy '" + id + "'");
    }
  }
  if (c.kind == "figure2") {
    need(!c.rho_grid.empty(), "figure2.rho_grid must not be empty");
    need(std::is_sorted(c.rho_grid.begin(), c.rho_grid.end()), "figure2.rho_grid must be sorted ascending");
    for (double r : c.rho_grid) need(r > 0, "figure2.rho_grid entries must be positive");
  }
  if (c.kind == "smp-verify") {
    need(c.smp.outer_paths >= 1, "smp.outer_paths must be at least 1");
    need(c.smp.inner_paths >= 1, "smp.inner_paths must be at least 1");
    need(c.smp.n_nodes >= 2, "smp.nodes must be at least 2");
    need(c.smp.i1_outer >= 1 && c.smp.i1_inner >= 1, "smp.i1_outer and smp.i1_inner must be at least 1");
    need(c.smp.knots >= 0, "smp.knots must be non-negative");
    need(c.smp.cost_paths >= 1, "smp.cost_paths must be at least 1");
  }
  if (c.kind == "localtime-check") {
    const auto& l = c.localtime;
    need(l.n_paths >= 1, "localtime.n_paths must be at least 1");
    need(l.T > 0 && l.dt > 0 && l.dt < l.T, "localtime.dt must lie in (0, localtime.T)");
    need(l.bandwidth_c > 0 && l.kappa > 0, "localtime.bandwidth_c and localtime.kappa must be positive");
  }
  if (c.kind == "variation-check") {
    const auto& v = c.variation;
    need(v.n_paths >= 1, "variation.n_paths must be at least 1");
    need(v.T > 0 && v.dt > 0 && v.dt < v.T, "variation.dt must lie in (0, variation.T)");
    need(v.fd_h >= 1e-8, "variation.fd_h must be at least 1e-8");
    need(std::abs(v.smooth_control) <= 1.0, "variation.smooth_control must lie in [-1, 1]");
  }
  if (c.kind == "mollify-sweep") {
    need(!c.mollify.levels.empty(), "mollify.levels must not be empty");
    for (int n : c.mollify.levels) need(n >= 1, "mollify.levels entries must be at least 1");
    need(c.mollify.n_paths >= 1, "mollify.n_paths must be at least 1");
  }
  if (c.kind == "simulate") {
    need(find_policy(c.spec.policy, p.rho).has_value(), "spec.policy: unknown policy '" + c.spec.policy + "'");
    need(c.spec.n_paths >= 1, "spec.n_paths must be at least 1");
    need(c.spec.b1_scale > 0 && c.spec.b2_scale > 0, "spec.b1_scale and spec.b2_scale must be positive");
  }
  return d;
}

std::vector<LocalTimeCheckRow> run_localtime_check(const LocalTimeConfig& cfg, std::uint64_t seed,
                                                   int threads) {
  const TimeGrid g = TimeGrid::from_dt(cfg.T, cfg.dt);
  const double sigma = 1.0;
  SimulationOptions so;
  so.threads = threads;
  const auto e = simulate(zero_spec(sigma), ControlPolicy::constant(0.0, "zero"), g, cfg.n_paths, seed, so);
  const double eps = default_bandwidth(sigma, g.dt(), cfg.bandwidth_c, cfg.kappa);

  std::vector<LocalTimeCheckRow> rows;
  auto phi = [](double y) { return std::exp(-y * y); };
  auto dphi = [](double y) { return -2.0 * y * std::exp(-y * y); };
  const std::pair<const char*, std::function<double(double)>> psis[] = {
      {"psi_1", [](double) { return 1.0; }}, {"psi_s", [](double s) { return s; }}};
  for (const auto& [name, psi] : psis) {
    const auto c = smooth_identity_check(phi, dphi, psi, e, sigma, eps, threads);
    rows.push_back({std::string("identity_") + name, c.lhs_mean, c.rhs_mean, c.rel_err});
    rows.push_back({std::string("ibp_") + name, c.lhs_mean, c.ibp_mean, c.rel_err_ibp});
  }
  std::vector<double> L(e.n_paths), R(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    L[p] = estimate_local_time(e.path(p), g, sigma, 0.0, eps).values.back();
    R[p] = tanaka_residual(e.path(p), g, sigma, 0.0, eps);
  }
  const SampleStats sl = sample_stats(L), sr = sample_stats(R);
  const double exact = std::sqrt(2.0 * g.T / std::numbers::pi);
  rows.push_back({"calibration", sl.mean, exact, std::abs(sl.mean - exact) / exact});
  rows.push_back({"tanaka", sr.mean, sl.mean, std::abs(sr.mean) / sl.mean});
  return rows;
}

void write_localtime_csv(const std::vector<LocalTimeCheckRow>& rows, std::ostream& os) {
  CsvWriter w(os, {"test_id", "lhs", "rhs", "rel_err"});
  for (const auto& r : rows) {
    w.field(r.test_id).field(r.lhs).field(r.rhs).field(r.rel_err);
    w.end_row();
  }
}

namespace {

double max_mean_rel_err(const VariationRecord& a, const VariationRecord& b) {
  double m = 0.0;
  for (int i = 1; i <= 10; ++i) {
    const int k = static_cast<int>(std::lround(double(i) * a.grid.steps / 10.0));
    const double vb = b.mean_phi(k);
    m = std::max(m, std::abs(a.mean_phi(k) - vb) / std::abs(vb));
  }
  return m;
}

double max_rel_err_exact(const VariationRecord& a, double c) {
  double m = 0.0;
  for (int i = 1; i <= 10; ++i) {
    const int k = static_cast<int>(std::lround(double(i) * a.grid.steps / 10.0));
    const double exact = std::exp(c * a.grid.t(k));
    m = std::max(m, std::abs(a.mean_phi(k) - exact) / exact);
  }
  return m;
}

DriftSpec linear_spec(double c) {
  DriftSpec s;
  s.b1.eval = [c](double, double x) { return c * x; };
  s.b1.partial_x = [c](double, double) { return c; };
  s.b1.sup_norm = INFINITY;
  s.b2 = BVFunction::zero();
  s.b3 = ControlFactor::identity();
  s.sigma = 1.0;
  s.family = "linear";
  return s;
}

}  // namespace

std::vector<VariationCheckRow> run_variation_check(const VariationConfig& cfg,
                                                   const CorridorParams& cp, std::uint64_t seed,
                                                   int threads) {
  const TimeGrid g = TimeGrid::from_dt(cfg.T, cfg.dt);
  SimulationOptions so;
  so.threads = threads;
  std::vector<VariationCheckRow> rows;
  auto add = [&](const VariationRecord& a, const VariationRecord& b, double tol) {
    const double r = max_mean_rel_err(a, b);
    rows.push_back({std::string(method_name(a.method)), std::string(method_name(b.method)), r, tol, r <= tol});
  };

  {
    const DriftSpec smooth = custom_polynomial_spec({0.0, 0.5}, 2.0, {0.0, -0.4}, 1.5, 1.0);
    const auto pol = ControlPolicy::constant(cfg.smooth_control);
    const auto e = simulate(smooth, pol, g, cfg.n_paths, seed, so);
    const double eps = default_bandwidth(smooth.sigma, g.dt());
    const auto ode = first_variation_ode(smooth, e, std::nullopt, threads);
    const auto lt = first_variation_localtime(smooth, e, eps, std::nullopt, threads);
    const auto fd = finite_difference_flow(smooth, pol, g, 0.0, cfg.fd_h, cfg.n_paths, seed, threads);
    add(ode, lt, 0.05);
    add(ode, fd, 0.05);
    add(lt, fd, 0.05);
  }
  {
    const DriftSpec corr = corridor_spec(cp.mu, cp.M, cp.rho, cp.sigma);
    const auto pol = ControlPolicy::constant(1.0, "full");
    const auto e = simulate(corr, pol, g, cfg.n_paths, seed, so);
    const double eps = default_bandwidth(corr.sigma, g.dt());
    const auto lt = first_variation_localtime(corr, e, eps, std::nullopt, threads);
    const auto cf = first_variation_corridor_cf(corr, e);
    const auto fd = finite_difference_flow(corr, pol, g, 0.0, cfg.fd_h, cfg.n_paths, seed, threads);
    add(lt, cf, 0.10);
    add(lt, fd, 0.10);
    add(cf, fd, 0.10);
  }
  {
    const DriftSpec lin = linear_spec(cfg.linear_rate);
    const auto pol = ControlPolicy::constant(0.0, "zero");
    const auto e = simulate(lin, pol, g, std::min<std::size_t>(cfg.n_paths, 100), seed, so);
    const auto ode = first_variation_ode(lin, e);
    const auto fd = finite_difference_flow(lin, pol, g, 0.0, cfg.fd_h, std::min<std::size_t>(cfg.n_paths, 100), seed, threads);
    for (const auto* r : {&ode, &fd}) {
      const double err = max_rel_err_exact(*r, cfg.linear_rate);
      rows.push_back({std::string(method_name(r->method)), "exp-ct", err, 1e-3, err <= 1e-3});
    }
  }
  return rows;
}

void write_variation_check_csv(const std::vector<VariationCheckRow>& rows, std::ostream& os) {
  CsvWriter w(os, {"method_a", "method_b", "rel_err", "tolerance", "pass"});
  for (const auto& r : rows) {
    w.field(r.method_a).field(r.method_b).field(r.rel_err).field(r.tolerance).field(r.pass);
    w.end_row();
  }
}

namespace {

namespace fs = std::filesystem;

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  template <class F>
  void write(const std::string& name, F&& body) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    body(os);
    if (!os) throw std::runtime_error("failed writing " + (dir / name).string());
    files.push_back(name);
  }
};

DriftSpec spec_of(const ExperimentConfig& c) {
  if (c.spec.family == "zero") return zero_spec(c.corridor.sigma);
  if (c.spec.family == "polynomial") {
    return custom_polynomial_spec(c.spec.b1_coeffs, c.spec.b1_scale, c.spec.b2_coeffs, c.spec.b2_scale,
                                  c.corridor.sigma);
  }
  return c.corridor.spec();
}

nlohmann::ordered_json tolerances(const std::string& kind) {
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  if (kind == "figure1") t = {{"paired_se_multiple", 3.0}, {"ci_level", 0.95}};
  if (kind == "figure2") t = {{"adjacent_paired_se_multiple", 3.0}, {"ci_level", 0.95}};
  if (kind == "smp-verify") {
    t = {{"nested_vs_regression_combined_se", 3.0},
         {"necessary_condition_se_multiple", 3.0},
         {"beta_grid_points", 21},
         {"i1_ci_level", 0.95}};
  }
  if (kind == "localtime-check") {
    t = {{"identity_rel_err", 0.05}, {"ibp_rel_err", 0.05}, {"calibration_se_multiple", 3.0}, {"tanaka_rel", 0.05}};
  }
  if (kind == "variation-check") t = {{"smooth", 0.05}, {"corridor", 0.10}, {"exp_ct", 1e-3}};
  if (kind == "mollify-sweep") t = {{"monotone_se_multiple", 2.0}};
  return t;
}

void run_kind(const ExperimentConfig& c, Outputs& out) {
  CorridorParams p = c.corridor;
  p.seed = c.seed;
  p.threads = c.threads;
  if (c.kind == "figure1") {
    std::vector<ControlPolicy> pols;
    if (c.figure1_policies.empty()) {
      pols = policy_catalog(p.rho);
    } else {
      for (const auto& id : c.figure1_policies) pols.push_back(*find_policy(id, p.rho));
    }
    const auto t = run_figure1(p, pols);
    out.write("figure1.csv", [&](std::ostream& os) { write_figure1_csv(t, os); });
  } else if (c.kind == "figure2") {
    const auto t = run_figure2(p, c.rho_grid);
    out.write("figure2.csv", [&](std::ostream& os) { write_figure2_csv(t, os); });
  } else if (c.kind == "smp-verify") {
    const auto v = verify_optimal_control(p, c.smp);
    out.write("smp_report.json", [&](std::ostream& os) { write_smp_report_json(v.report, os); });
    const AdjointEstimate both[] = {v.nested, v.regression_at_states};
    out.write("adjoint.csv", [&](std::ostream& os) { write_adjoint_csv(both, os); });
  } else if (c.kind == "localtime-check") {
    const auto rows = run_localtime_check(c.localtime, c.seed, c.threads);
    out.write("localtime_check.csv", [&](std::ostream& os) { write_localtime_csv(rows, os); });
  } else if (c.kind == "variation-check") {
    const auto rows = run_variation_check(c.variation, p, c.seed, c.threads);
    out.write("variation_check.csv", [&](std::ostream& os) { write_variation_check_csv(rows, os); });
  } else if (c.kind == "mollify-sweep") {
    CorridorParams q = p;
    q.n_paths = c.mollify.n_paths;
    const auto rows = mollification_convergence(q, c.mollify.levels, c.mollify.drop_b2);
    out.write("mollification.csv", [&](std::ostream& os) { write_mollification_csv(rows, os); });
  } else if (c.kind == "simulate") {
    SimulationOptions so;
    so.x0 = p.x0;
    so.threads = c.threads;
    const auto e = simulate(spec_of(c), *find_policy(c.spec.policy, p.rho), p.grid(), c.spec.n_paths,
                            c.seed, so);
    out.write("ensemble.csv", [&](std::ostream& os) { write_ensemble_csv(e, os); });
  }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  Outputs out;
  out.dir = c.output_dir;
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  try {
    const auto diags = validate(c);
    if (!diags.empty()) throw ConfigError(diags.front());
    run_kind(c, out);
  } catch (const std::exception& e) {
    r.exit_code = 1;
    r.error = e.what();
  }
  r.files = out.files;

  nlohmann::ordered_json m;
  m["tool"] = "bvsmp";
  m["version"] = BVSMP_VERSION;
  m["kind"] = c.kind;
  m["seed"] = c.seed;
  m["threads"] = c.threads;
  m["isa"] = std::string(isa_name(active_isa()));
  m["config"] = c.source;
  m["corridor"] = {{"mu", c.corridor.mu}, {"M", c.corridor.M}, {"rho", c.corridor.rho},
                   {"sigma", c.corridor.sigma}, {"x0", c.corridor.x0}, {"T", c.corridor.T},
                   {"dt", c.corridor.dt}, {"n_paths", c.corridor.n_paths}};
  m["tolerances"] = tolerances(c.kind);
  m["files"] = r.files;
  m["status"] = r.exit_code == 0 ? "ok" : "error";
  if (r.exit_code != 0) m["error"] = r.error;
  m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    std::ofstream os(out.dir / "manifest.json", std::ios::binary);
    os << m.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write manifest.json");
  } catch (const std::exception& e) {
    if (r.exit_code == 0) {
      r.exit_code = 1;
      r.error = e.what();
    }
  }
  return r;
}

namespace {

void print_error(const std::string& kind, const std::string& field, const std::string& msg) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!field.empty()) j["field"] = field;
  j["message"] = msg;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for SDEs with BV drift and corridor control"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> isa;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override experiment.seed");
  run->add_option("--out", out_dir, "override experiment.output_dir");
  run->add_option("--threads", threads, "override experiment.threads");
  run->add_option("--isa", isa, "force the kernel ISA (scalar or avx2)");

  auto* val = app.add_subcommand("validate", "check a config file without running it");
  val->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigParseError& e) {
    print_error("config", e.field(), e.what());
    return 2;
  }
  if (seed) {
    cfg.seed = *seed;
    cfg.corridor.seed = *seed;
  }
  if (threads) {
    cfg.threads = *threads;
    cfg.corridor.threads = *threads;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  if (val->parsed()) {
    const auto d = validate(cfg);
    nlohmann::ordered_json j;
    j["diagnostics"] = d;
    std::cout << j.dump(2) << '\n';
    return d.empty() ? 0 : 1;
  }
  if (isa) {
    if (*isa == "scalar") {
      set_isa_override(Isa::scalar);
    } else if (*isa == "avx2") {
      set_isa_override(Isa::avx2);
    } else {
      print_error("usage", "--isa", "--isa must be scalar or avx2");
      return 2;
    }
  }
  const RunResult r = run_experiment(cfg);
  if (r.exit_code != 0) {
    print_error("runtime", "", r.error);
    return r.exit_code;
  }
  for (const auto& f : r.files) std::cout << (std::filesystem::path(cfg.output_dir) / f).string() << '\n';
  return 0;
}

}  // namespace bvsmp
