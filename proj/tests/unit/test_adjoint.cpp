#include <cmath>
#include <sstream>

#include "bvsmp/adjoint_smp.hpp"
#include "bvsmp/corridor_app.hpp"
#include "doctest.h"

using namespace bvsmp;
using doctest::Approx;

TEST_CASE("Hamiltonian at a point outside the corridor") {
  const auto H = Hamiltonian::terminal_quadratic(corridor_spec(0.5, 4.0, 2.0, 1.0));
  const auto h = hamiltonian_eval(H, 0.0, 3.0, 1.0, 0.5);
  CHECK(h.value == Approx(0.5 * std::tanh(0.75) - 0.5).epsilon(1e-14));
  CHECK(h.value == Approx(-0.18243).epsilon(1e-4));
  CHECK(h.partial_a == -1.0);
  CHECK(hamiltonian_eval(H, 0.0, 1.0, 1.0, 0.5).partial_a == 0.0);
  CHECK(quadratic_growth_constant(H, 5.0) < 1e-12);
  CHECK(H.g(3.0) == 9.0);
  CHECK(H.g_x(3.0) == 6.0);
}

TEST_CASE("Brownian adjoint is 2 X_t") {
  const auto H = Hamiltonian::terminal_quadratic(zero_spec(1.0));
  const auto g = TimeGrid::from_dt(1.0, 0.01);
  SamplerOptions so;
  so.method = VariationMethod::ode;
  const auto sample =
      sample_checkpoints(H, ControlPolicy::constant(0.0), g, {0, 50, 100}, 20000, 3, so);
  const auto reg = estimate_adjoint_regression(H, sample);
  for (const auto& pt : reg.estimate.points) {
    if (pt.node == g.steps) {
      CHECK(pt.y == 2 * pt.x);
      CHECK(pt.se == 0.0);
    }
  }
  const auto& fit = reg.fits[1];
  for (double x : {-1.0, -0.3, 0.4, 1.0}) CHECK(std::abs(fit.value(x) - 2 * x) < 4 * fit.std_error(x) + 1e-3);

  const OuterState states[] = {{50, 0.5, 0}, {50, -1.2, 1}, {0, 0.0, 2}};
  NestedOptions no;
  no.inner_paths = 2000;
  no.method = VariationMethod::ode;
  const auto nested = estimate_adjoint_nested(H, ControlPolicy::constant(0.0), g, states, no);
  REQUIRE(nested.points.size() == 3);
  for (const auto& pt : nested.points) CHECK(std::abs(pt.y - 2 * pt.x) < 3.5 * pt.se);
  CHECK(nested.warnings.empty());
}

TEST_CASE("nested estimates warn and refuse where they should") {
  const auto H = Hamiltonian::terminal_quadratic(zero_spec(1.0));
  const auto g = TimeGrid::from_dt(1.0, 0.01);
  const OuterState s[] = {{10, 0.0, 0}};
  NestedOptions no;
  no.inner_paths = 50;
  no.method = VariationMethod::ode;
  CHECK_FALSE(estimate_adjoint_nested(H, ControlPolicy::constant(0.0), g, s, no).warnings.empty());
  CHECK_THROWS_AS(estimate_adjoint_nested(H, ControlPolicy::bm_functional(), g, s, no),
                  std::invalid_argument);
}

TEST_CASE("corridor kernel and generic nested paths agree") {
  CorridorParams p;
  p.T = 1.0;
  p.dt = 0.01;
  const auto H = Hamiltonian::terminal_quadratic(p.spec());
  const OuterState s[] = {{20, 2.4, 3}, {50, -1.0, 4}};
  NestedOptions fast;
  fast.inner_paths = 400;
  fast.method = VariationMethod::corridor_closed_form;
  NestedOptions slow = fast;
  slow.method = VariationMethod::localtime;
  slow.frozen_control = 1.0;
  const auto a = estimate_adjoint_nested(H, ControlPolicy::corridor(p.rho), p.grid(), s, fast);
  const auto b = estimate_adjoint_nested(H, ControlPolicy::corridor(p.rho), p.grid(), s, slow);
  for (std::size_t i = 0; i < 2; ++i) {
    CAPTURE(i);
    CAPTURE(a.points[i].y);
    CAPTURE(b.points[i].y);
    CAPTURE(a.points[i].se);
    CHECK(std::abs(a.points[i].y - b.points[i].y) < 0.05 * std::abs(a.points[i].y) + 3 * a.points[i].se);
  }
}

TEST_CASE("necessary condition is zero at beta = alpha_hat") {
  CorridorParams p;
  p.T = 1.0;
  p.dt = 0.01;
  const auto H = Hamiltonian::terminal_quadratic(p.spec());
  const auto full = *find_policy("full", p.rho);
  SimulationOptions sim;
  sim.x0 = 2.5;
  SamplerOptions so;
  so.method = VariationMethod::corridor_closed_form;
  so.sim = sim;
  const auto sample = sample_checkpoints(H, full, p.grid(), {0, 50, 100}, 3000, 1, so);
  const auto reg = estimate_adjoint_regression(H, sample);
  const double one[] = {1.0};
  const auto r = necessary_condition_check(H, reg.estimate, full, one);
  CHECK(r.min_residual == 0.0);
  CHECK(r.violation_fraction == 0.0);
  CHECK(r.n_samples > 0);
  const double bad[] = {2.0};
  CHECK_THROWS_AS(necessary_condition_check(H, reg.estimate, full, bad), std::invalid_argument);
  CHECK(default_beta_grid().size() == 21);
  CHECK(default_beta_grid().front() == -1.0);
  CHECK(default_beta_grid().back() == 1.0);
}

TEST_CASE("I1 under mirrored noise changes sign exactly") {
  CorridorParams p;
  p.T = 1.0;
  p.dt = 0.01;
  const auto base = p.kernel_args(ControlPolicy::corridor(p.rho));
  SymmetryOptions o;
  o.outer_paths = 200;
  o.inner_paths = 100;
  o.seed = 5;
  const auto a = symmetry_statistic(base, p.grid().steps, o);
  o.noise_sign = -1.0;
  const auto b = symmetry_statistic(base, p.grid().steps, o);
  CHECK(a.mean == -b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.hits == 200);  // x0 = 0 means tau = 0
  CHECK(a.ci_high - a.ci_low == Approx(2 * 1.96 * a.std_error));
}

TEST_CASE("I1 vanishes when the path never reaches zero") {
  CorridorParams p;
  p.sigma = 1e-6;
  p.x0 = 3.0;
  const auto base = p.kernel_args(ControlPolicy::corridor(p.rho));
  auto args = base;
  args.x_start = p.x0;
  SymmetryOptions o;
  o.outer_paths = 64;
  o.inner_paths = 10;
  const auto s = symmetry_statistic(args, p.grid().steps, o);
  CHECK(s.hits == 0);
  CHECK(s.mean == 0.0);
}

TEST_CASE("smp report json and adjoint csv") {
  SMPReport r;
  r.warnings.push_back("w");
  std::ostringstream js;
  write_smp_report_json(r, js);
  for (const char* key : {"necessary_condition", "symmetry_i1", "nested_vs_regression", "warnings"})
    CHECK(js.str().find(key) != std::string::npos);
  AdjointEstimate e;
  e.grid = TimeGrid(1.0, 10);
  e.points.push_back({5, 0, 0.25, 0.5, 0.01});
  std::ostringstream cs;
  write_adjoint_csv(e, cs);
  CHECK(cs.str().rfind("t,x,y,se,method\n", 0) == 0);
}
