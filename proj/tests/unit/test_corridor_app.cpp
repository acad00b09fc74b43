#include <cmath>
#include <sstream>

#include "bvsmp/corridor_app.hpp"
#include "doctest.h"

using namespace bvsmp;
using doctest::Approx;

namespace {

CorridorParams small(std::size_t n = 4000) {
  CorridorParams p;
  p.T = 2.0;
  p.dt = 0.01;
  p.n_paths = n;
  return p;
}

}  // namespace

TEST_CASE("policy catalog") {
  const auto c = policy_catalog(2.0);
  const char* ids[] = {"opt_corridor", "rational_x",   "rational_1",   "sign_pos",
                       "sign_neg",     "neg_corridor", "bm_functional"};
  REQUIRE(c.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(c[i].id == ids[i]);
  CHECK(find_policy("zero", 2.0)->value == 0.0);
  CHECK(find_policy("full", 2.0)->value == 1.0);
  CHECK(find_policy("opt_corridor", 3.0)->rho == 3.0);
}

TEST_CASE("parameter validation names the field") {
  CorridorParams p;
  CHECK(p.validate().empty());
  p.rho = -1;
  p.dt = 10;
  p.n_paths = 0;
  const auto d = p.validate();
  auto has = [&](const char* s) {
    for (const auto& m : d)
      if (m.find(s) != std::string::npos) return true;
    return false;
  };
  CHECK(has("rho"));
  CHECK(has("dt"));
  CHECK(has("n_paths"));
}

TEST_CASE("figure 1 rows") {
  const auto p = small();
  const auto t = run_figure1(p);
  REQUIRE(t.rows.size() == 7);
  for (const auto& r : t.rows) {
    CHECK(r.n_paths == p.n_paths);
    CHECK(r.seed == p.seed);
    CHECK(r.ci_low == Approx(r.mean - 1.96 * r.std_error));
    CHECK(r.ci_high == Approx(r.mean + 1.96 * r.std_error));
  }
  // mirror images have the same cost in law
  const auto pos = paired_difference(t.costs[3], t.costs[4]);
  CHECK(std::abs(pos.mean) < 3.5 * pos.std_error);
  const auto cmp = compare_to_row(t, 0);
  CHECK(cmp.size() == 6);
  for (const auto& c : cmp) CHECK(c.a == "opt_corridor");
  CHECK(adjacent_differences(t).size() == 6);
}

TEST_CASE("figure 1 runs are reproducible across thread counts") {
  auto p = small(1000);
  const auto a = run_figure1(p);
  p.threads = 3;
  const auto b = run_figure1(p);
  CHECK(a.costs == b.costs);
}

TEST_CASE("a very wide corridor is the uncontrolled system") {
  auto p = small();
  const double grid[] = {50.0};
  const auto wide = run_figure2(p, {grid[0]});
  const auto zero = run_figure1(p, {*find_policy("zero", p.rho)});
  CHECK(wide.rows[0].mean == Approx(zero.rows[0].mean).epsilon(1e-12));
}

TEST_CASE("a vanishing corridor is the sign feedback") {
  auto p = small();
  const auto narrow = run_figure2(p, {1e-6});
  // direct Euler scheme of dX = (mu tanh(X/M) - sgn(X)) dt + sigma dB
  const auto g = p.grid();
  std::vector<double> cost(p.n_paths);
  std::vector<double> z(g.steps);
  for (std::size_t i = 0; i < p.n_paths; ++i) {
    fill_standard_normals(NoiseKey{p.seed, 0}, i, 0, z);
    double x = p.x0;
    for (int k = 0; k < g.steps; ++k) {
      const double s = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
      x += (p.mu * std::tanh(x / p.M) - s) * g.dt() + p.sigma * std::sqrt(g.dt()) * z[k];
    }
    cost[i] = x * x;
  }
  const auto d = paired_difference(narrow.costs[0], cost);
  CHECK(std::abs(d.mean) <= 3 * d.std_error + 1e-9);
}

TEST_CASE("figure 2 cost grows with the corridor") {
  const auto t = run_figure2(small(), {0.5, 1.5, 3.0});
  REQUIRE(t.rows.size() == 3);
  for (const auto& d : adjacent_differences(t)) CHECK(d.mean_diff > 3 * d.std_error);
  CHECK_THROWS_AS(run_figure2(small(), {2.0, 1.0}), ConfigError);
}

TEST_CASE("figure csv layout") {
  auto p = small(10);
  const auto t1 = run_figure1(p);
  std::ostringstream a, b;
  write_figure1_csv(t1, a);
  write_figure2_csv(run_figure2(p, {1.0, 2.0}), b);
  std::istringstream ia(a.str());
  std::string line;
  int n = 0;
  while (std::getline(ia, line)) ++n;
  CHECK(n == 8);
  CHECK(b.str().rfind("rho,mean,ci_low,ci_high,n_paths,seed\n", 0) == 0);
}

TEST_CASE("mollified solutions converge") {
  auto p = small(500);
  p.T = 1.0;
  const auto rows = mollification_convergence(p, {5, 20, 80});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mean_sup_abs > rows[1].mean_sup_abs);
  CHECK(rows[1].mean_sup_abs > rows[2].mean_sup_abs);
  for (const auto& r : rows) CHECK(r.mean_sup_sq >= r.mean_sup_abs * r.mean_sup_abs * (1 - 1e-12));
  const auto smooth_only = mollification_convergence(p, {5}, true);
  CHECK(smooth_only[0].mean_sup_abs < rows[0].mean_sup_abs);
  std::ostringstream os;
  write_mollification_csv(rows, os);
  CHECK(os.str().rfind("n,mean_sup_abs", 0) == 0);
}
