#include <cmath>
#include <cstring>
#include <sstream>

#include "bvsmp/corridor_app.hpp"
#include "bvsmp/sde_engine.hpp"
#include "doctest.h"

using namespace bvsmp;
using doctest::Approx;

namespace {
TimeGrid short_grid() { return TimeGrid::from_dt(1.0, 0.01); }
}  // namespace

TEST_CASE("time grid") {
  const auto g = TimeGrid::from_dt(5.0, 0.005);
  CHECK(g.steps == 1000);
  CHECK(g.dt() == Approx(0.005));
  CHECK(g.node_of(2.5) == 500);
  CHECK(g.t(g.steps) == Approx(5.0));
  CHECK_THROWS_AS(TimeGrid::from_dt(1.0, 2.0), ConfigError);
  CHECK_THROWS_AS(TimeGrid(0.0, 10), ConfigError);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), ConfigError);
}

TEST_CASE("every catalog policy stays in [-1, 1]") {
  auto catalog = policy_catalog(2.0);
  catalog.push_back(*find_policy("zero", 2.0));
  catalog.push_back(*find_policy("full", 2.0));
  catalog.push_back(ControlPolicy::feedback([](double, double x) { return 5 * x; }, "steep"));
  for (const auto& p : catalog) {
    CAPTURE(p.id);
    AuxState aux;
    for (int i = -400; i <= 400; ++i) {
      const double x = i * 0.05;
      aux.brownian = 0.01 * i;
      aux.integral = (i + 400) / 801.0;  // reachable range [0, 1)
      const double a = p.eval(0.3, x, aux);
      CHECK(a >= -1.0);
      CHECK(a <= 1.0);
    }
  }
  CHECK_THROWS_AS(ControlPolicy::constant(1.5), ConfigError);
  CHECK_FALSE(find_policy("nope", 2.0).has_value());
}

TEST_CASE("policy formulas") {
  AuxState aux;
  CHECK(ControlPolicy::corridor(2.0).eval(0, 2.5, aux) == 1.0);
  CHECK(ControlPolicy::corridor(2.0).eval(0, 1.5, aux) == 0.0);
  CHECK(ControlPolicy::neg_corridor(2.0).eval(0, -2.5, aux) == -1.0);
  CHECK(ControlPolicy::rational_x().eval(0, 2.0, aux) == Approx(0.4));
  CHECK(ControlPolicy::rational_1().eval(0, 2.0, aux) == Approx(0.2));
  CHECK(ControlPolicy::sign_pos().eval(0, -0.1, aux) == -1.0);
  CHECK(ControlPolicy::sign_neg().eval(0, -0.1, aux) == 1.0);
  // int_0^t e^{-s} / (1 + B_s^2) ds with B = 0 is 1 - e^{-t}
  const auto bm = ControlPolicy::bm_functional();
  AuxState s;
  const double dt = 1e-4;
  for (int k = 0; k < 10000; ++k) bm.advance(s, k * dt, 0.0, dt);
  CHECK(bm.eval(1.0, 0.0, s) == Approx(1.0 - std::exp(-1.0)).epsilon(1e-3));
  CHECK_FALSE(bm.is_markov());
}

TEST_CASE("replay reproduces the stored states bit for bit") {
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  for (const auto& pol : policy_catalog(2.0)) {
    const auto e = simulate(spec, pol, short_grid(), 40, 9);
    const auto r = reconstruct_states(spec, e);
    REQUIRE(r.size() == e.states.size());
    CHECK(std::memcmp(r.data(), e.states.data(), r.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("ensembles do not depend on the thread count") {
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  SimulationOptions one, three;
  three.threads = 3;
  const auto a = simulate(spec, ControlPolicy::bm_functional(), short_grid(), 300, 5, one);
  const auto b = simulate(spec, ControlPolicy::bm_functional(), short_grid(), 300, 5, three);
  CHECK(a.states == b.states);
  CHECK(a.controls == b.controls);
  CHECK(a.increments == b.increments);
}

TEST_CASE("first_path offsets address the same noise") {
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  const auto pol = ControlPolicy::corridor(2.0);
  const auto all = simulate(spec, pol, short_grid(), 20, 3);
  SimulationOptions o;
  o.first_path = 12;
  const auto tail = simulate(spec, pol, short_grid(), 8, 3, o);
  for (std::size_t p = 0; p < 8; ++p)
    for (int k = 0; k <= tail.grid.steps; ++k) CHECK(tail.state(p, k) == all.state(p + 12, k));
}

TEST_CASE("mirrored policies under mirrored noise give mirrored paths") {
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  SimulationOptions neg;
  neg.noise_sign = -1.0;
  const auto a = simulate(spec, ControlPolicy::sign_pos(), short_grid(), 200, 4);
  const auto b = simulate(spec, ControlPolicy::sign_neg(), short_grid(), 200, 4, neg);
  double worst = 0;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    worst = std::max(worst, std::abs(a.states[i] + b.states[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("terminal cost on a short horizon is sigma^2 T") {
  CorridorParams p;
  p.T = 0.01;
  p.dt = 0.001;
  p.n_paths = 20000;
  const auto spec = p.spec();
  for (const auto& pol : policy_catalog(p.rho)) {
    const auto e = simulate(spec, pol, p.grid(), p.n_paths, p.seed);
    const auto c = evaluate_cost(e, nullptr, [](double x) { return x * x; });
    CAPTURE(pol.id);
    // drift contributes at most O(T^2)
    CHECK(std::abs(c.mean - 0.01) < 3 * c.std_error + 2 * 1.5 * 0.01 * 0.01);
  }
}

TEST_CASE("trapezoid running cost") {
  const auto spec = zero_spec(1.0);
  const auto e = simulate(spec, ControlPolicy::constant(0.5), short_grid(), 3, 1);
  const auto c = evaluate_cost(e, [](double, double, double a) { return a * a; }, nullptr);
  for (double v : c.per_path) CHECK(v == Approx(0.25));
}

TEST_CASE("uncontrolled symmetric dynamics have zero mean") {
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  const auto e = simulate(spec, ControlPolicy::constant(0.0), TimeGrid::from_dt(5.0, 0.01), 20000, 8);
  std::vector<double> xt(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) xt[p] = e.state(p, e.grid.steps);
  const auto s = sample_stats(xt);
  CHECK(std::abs(s.mean) < 3 * s.std_error);
}

TEST_CASE("flow difference") {
  const auto g = short_grid();
  const auto z = flow_difference(zero_spec(1.0), ControlPolicy::constant(0.0), g, 0.3, 0.1, 50, 2);
  CHECK(z.mean[0] == Approx(0.2));
  CHECK(z.mean[2] == Approx(0.0016));

  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  const auto pol = ControlPolicy::corridor(2.0);
  const auto h1 = flow_difference(spec, pol, g, 1.9 + 0.01, 1.9 - 0.01, 4000, 2);
  const auto h2 = flow_difference(spec, pol, g, 1.9 + 0.02, 1.9 - 0.02, 4000, 2);
  const double ratio = h2.mean[0] / h1.mean[0];
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("binary cache round trip") {
  const auto spec = corridor_spec(0.5, 4.0, 2.0, 1.0);
  const auto e = simulate(spec, ControlPolicy::rational_x(), short_grid(), 7, 11);
  std::stringstream ss;
  write_ensemble_binary(e, ss);
  const auto r = read_ensemble_binary(ss);
  CHECK(r.n_paths == e.n_paths);
  CHECK(r.seed == e.seed);
  CHECK(r.policy_id == e.policy_id);
  CHECK(r.states == e.states);
  CHECK(r.increments == e.increments);
  CHECK(r.controls == e.controls);

  std::stringstream bad("not a cache at all");
  CHECK_THROWS(read_ensemble_binary(bad));
}

TEST_CASE("ensemble csv") {
  const auto e = simulate(zero_spec(1.0), ControlPolicy::constant(0.0), TimeGrid(1.0, 2), 2, 1);
  std::ostringstream os;
  write_ensemble_csv(e, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "path_id,t,X,alpha");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 6);
}
