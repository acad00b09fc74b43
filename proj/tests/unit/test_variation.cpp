#include <cmath>
#include <sstream>

#include "bvsmp/local_time.hpp"
#include "bvsmp/variation.hpp"
#include "doctest.h"

using namespace bvsmp;
using doctest::Approx;

namespace {

DriftSpec linear(double c) {
  DriftSpec s;
  s.b1.eval = [c](double, double x) { return c * x; };
  s.b1.partial_x = [c](double, double) { return c; };
  s.b1.sup_norm = 1e300;
  s.b2 = BVFunction::zero();
  s.b3 = ControlFactor::identity();
  s.sigma = 1.0;
  return s;
}

DriftSpec smooth() { return custom_polynomial_spec({0.0, 0.5}, 2.0, {0.0, -0.4}, 1.5, 1.0); }

double max_rel(const VariationRecord& a, const VariationRecord& b) {
  double m = 0;
  for (int i = 1; i <= 10; ++i) {
    const int k = i * a.grid.steps / 10;
    m = std::max(m, std::abs(a.mean_phi(k) - b.mean_phi(k)) / std::abs(b.mean_phi(k)));
  }
  return m;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (auto m : {VariationMethod::ode, VariationMethod::localtime,
                 VariationMethod::corridor_closed_form, VariationMethod::finite_difference})
    CHECK(parse_variation_method(method_name(m)) == m);
  CHECK_FALSE(parse_variation_method("bogus").has_value());
}

TEST_CASE("linear drift gives exp(ct)") {
  const double c = 0.2;
  const auto g = TimeGrid::from_dt(2.0, 0.005);
  const auto spec = linear(c);
  const auto e = simulate(spec, ControlPolicy::constant(0.0), g, 20, 1);
  const auto ode = first_variation_ode(spec, e);
  const auto fd = finite_difference_flow(spec, ControlPolicy::constant(0.0), g, 0.0, 1e-3, 20, 1);
  for (std::size_t p = 0; p < 20; ++p) {
    for (int k = 0; k <= g.steps; k += 50) {
      const double exact = std::exp(c * g.t(k));
      CHECK(ode.phi(p, k) == Approx(exact).epsilon(1e-12));
      CHECK(fd.phi(p, k) == Approx(exact).epsilon(1e-3));
    }
  }
  CHECK(ode.phi(3, 100, 300) == Approx(std::exp(c * 1.0)).epsilon(1e-12));
  CHECK(ode.log_phi(0, g.steps) == Approx(c * 2.0).epsilon(1e-12));
}

TEST_CASE("ode, local time and finite differences agree on a smooth drift") {
  const auto g = TimeGrid::from_dt(1.0, 0.005);
  const auto spec = smooth();
  const auto pol = ControlPolicy::constant(0.7);
  const auto e = simulate(spec, pol, g, 500, 3);
  const auto ode = first_variation_ode(spec, e);
  const auto lt = first_variation_localtime(spec, e, default_bandwidth(1.0, g.dt()));
  const auto fd = finite_difference_flow(spec, pol, g, 0.0, 1e-3, 500, 3);
  CHECK(max_rel(lt, ode) < 0.02);
  CHECK(max_rel(fd, ode) < 0.02);
  CHECK_FALSE(fd.exponential);
}

TEST_CASE("closed form and local time agree on the corridor") {
  const auto g = TimeGrid::from_dt(2.0, 0.005);
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  const auto pol = ControlPolicy::constant(1.0);
  SimulationOptions o;
  o.x0 = 1.5;
  const auto e = simulate(spec, pol, g, 1000, 4, o);
  const auto cf = first_variation_corridor_cf(spec, e);
  const auto lt = first_variation_localtime(spec, e, default_bandwidth(1.0, g.dt()));
  CHECK(max_rel(lt, cf) < 0.05);
  // the corridor policy equals alpha = 1 wherever b2 is active
  const auto ec = simulate(spec, ControlPolicy::corridor(2.0), g, 50, 4, o);
  CHECK_NOTHROW(first_variation_corridor_cf(spec, ec));
}

TEST_CASE("closed form per path matches the ensemble routine") {
  const auto g = TimeGrid::from_dt(1.0, 0.01);
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  const auto e = simulate(spec, ControlPolicy::constant(1.0), g, 5, 6);
  const auto cf = first_variation_corridor_cf(spec, e);
  std::vector<double> out(g.nodes());
  for (std::size_t p = 0; p < 5; ++p) {
    log_phi_corridor_path(*spec.corridor, 1.0, g, 0, e.path(p), e.path_increments(p), out);
    for (int k = 0; k <= g.steps; ++k) CHECK(out[k] == Approx(cf.log_phi(p, k)).epsilon(1e-12));
  }
}

TEST_CASE("invalid variation requests") {
  const auto g = TimeGrid::from_dt(1.0, 0.01);
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  SimulationOptions o;
  o.x0 = 3.0;
  const auto e = simulate(spec, ControlPolicy::constant(0.5), g, 10, 1, o);
  CHECK_THROWS_AS(first_variation_corridor_cf(spec, e), std::invalid_argument);
  CHECK_THROWS_AS(first_variation_ode(spec, e), std::invalid_argument);
  CHECK_THROWS_AS(finite_difference_flow(spec, ControlPolicy::constant(0.5), g, 0.0, 1e-9, 10, 1),
                  std::invalid_argument);
  CHECK_NOTHROW(first_variation_ode(mollify(spec, 10), e));
}

TEST_CASE("Malliavin derivative for a feedback control") {
  const auto g = TimeGrid::from_dt(1.0, 0.01);
  const auto spec = smooth();
  const auto e = simulate(spec, ControlPolicy::rational_x(), g, 3, 2);
  const auto phi = first_variation_ode(spec, e);
  const auto m = malliavin_derivative(spec, ControlPolicy::rational_x(), e, phi, 1, 40);
  CHECK(m.values.front() == Approx(1.0));
  for (int s = 40; s <= g.steps; ++s) CHECK(m.values[s - 40] == Approx(phi.phi(1, 40, s)));
}

TEST_CASE("Malliavin derivative for the path functional against a bumped Euler scheme") {
  const auto g = TimeGrid::from_dt(1.0, 0.002);
  const auto spec = smooth();
  const auto pol = ControlPolicy::bm_functional();
  SimulationOptions o;
  o.x0 = 0.5;
  const auto e = simulate(spec, pol, g, 4, 12, o);
  const auto phi = first_variation_ode(spec, e);
  const int t0 = 100;

  auto euler = [&](std::size_t p, double bump) {
    std::vector<double> x(g.nodes());
    x[0] = o.x0;
    AuxState aux;
    for (int k = 0; k < g.steps; ++k) {
      const double db = e.increment(p, k) + (k == t0 ? bump : 0.0);
      const double a = pol.eval(g.t(k), x[k], aux);
      const double b = eval_drift(spec, g.t(k), x[k], a);
      pol.advance(aux, g.t(k), db, g.dt());
      x[k + 1] = x[k] + b * g.dt() + spec.sigma * db;
    }
    return x;
  };

  for (std::size_t p = 0; p < e.n_paths; ++p) {
    CAPTURE(p);
    const auto m = malliavin_derivative(spec, pol, e, phi, p, t0);
    const double h = 1e-6;
    const auto up = euler(p, h), down = euler(p, -h);
    for (int s = t0 + 1; s <= g.steps; s += 50) {
      const double bumped = (up[s] - down[s]) / (2 * h);
      CHECK(m.values[s - t0] == Approx(bumped).epsilon(0.01));
    }
  }
}

TEST_CASE("variation csv") {
  const auto g = TimeGrid(1.0, 4);
  const auto e = simulate(smooth(), ControlPolicy::constant(0.0), g, 2, 1);
  const auto r = first_variation_ode(smooth(), e);
  const std::pair<int, int> pairs[] = {{0, 4}, {1, 3}};
  std::ostringstream os;
  write_variation_csv(r, pairs, os);
  CHECK(os.str().rfind("path_id,s,t,phi,method\n", 0) == 0);
  CHECK(os.str().find(",ode\n") != std::string::npos);
}
