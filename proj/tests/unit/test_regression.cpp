#include <cmath>
#include <stdexcept>
#include <vector>

#include "bvsmp/regression.hpp"
#include "bvsmp/rng.hpp"
#include "doctest.h"

using namespace bvsmp;
using doctest::Approx;

namespace {

// textbook recursion, half-open spans
double cox_de_boor(const std::vector<double>& t, int i, int k, double x) {
  if (k == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double v = 0.0;
  if (t[i + k] > t[i]) v += (x - t[i]) / (t[i + k] - t[i]) * cox_de_boor(t, i, k - 1, x);
  if (t[i + k + 1] > t[i + 1])
    v += (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * cox_de_boor(t, i + 1, k - 1, x);
  return v;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::vector<double> z(n);
  fill_standard_normals(NoiseKey{seed, 0}, 0, 0, z);
  return z;
}

}  // namespace

TEST_CASE("cubic B-spline basis") {
  const std::vector<double> knots{-1, -1, -1, -1, -0.3, 0.0, 0.2, 1.1, 2, 2, 2, 2};
  std::vector<double> out;
  for (int i = 0; i < 300; ++i) {
    const double x = -1.0 + 3.0 * i / 300.0;
    bspline_basis(knots, x, out);
    REQUIRE(out.size() == knots.size() - 4);
    double sum = 0;
    for (std::size_t j = 0; j < out.size(); ++j) {
      CHECK(out[j] >= -1e-15);
      CHECK(out[j] == Approx(cox_de_boor(knots, static_cast<int>(j), 3, x)).epsilon(1e-12));
      sum += out[j];
    }
    CHECK(sum == Approx(1.0).epsilon(1e-13));
  }
  bspline_basis(knots, 2.0, out);
  CHECK(out.back() == Approx(1.0));
  bspline_basis(knots, 7.0, out);
  CHECK(out.back() == Approx(1.0));
}

TEST_CASE("constant payoff") {
  const auto x = normals(5000, 1);
  const std::vector<double> y(x.size(), 3.25);
  const auto f = ConditionalFit::fit(x, y);
  CHECK_FALSE(f.intercept_only());
  for (double q : {-8.0, -1.0, 0.3, 2.0}) {
    CHECK(f.value(q) == Approx(3.25).epsilon(1e-10));
    CHECK(f.std_error(q) < 1e-8);
  }
}

TEST_CASE("degenerate state gives the sample mean") {
  const std::vector<double> x(100, 0.0);
  std::vector<double> y(100);
  for (int i = 0; i < 100; ++i) y[i] = i;
  const auto f = ConditionalFit::fit(x, y);
  CHECK(f.intercept_only());
  CHECK(f.description() == "intercept");
  CHECK(f.value(0.0) == Approx(49.5));
  CHECK(f.std_error(0.0) == Approx(std::sqrt(841.6666666666666 / 100)).epsilon(1e-9));
}

TEST_CASE("recovers a smooth conditional mean") {
  const auto x = normals(20000, 2);
  const auto eps = normals(20000, 3);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sin(x[i]) + 2 * x[i] + 0.3 * eps[i];
  for (auto kind : {BasisKind::spline, BasisKind::polynomial}) {
    BasisConfig cfg;
    cfg.kind = kind;
    const auto f = ConditionalFit::fit(x, y, cfg);
    CHECK_FALSE(f.intercept_only());
    for (double q : {-1.5, -0.5, 0.0, 0.7, 1.5}) {
      const double truth = std::sin(q) + 2 * q;
      CHECK(std::abs(f.value(q) - truth) < 4 * f.std_error(q) + 0.01);
      CHECK(f.std_error(q) > 0);
      CHECK(f.std_error(q) < 0.05);
    }
  }
}

TEST_CASE("linear payoff is reproduced exactly") {
  const auto x = normals(3000, 4);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 - 0.5 * x[i];
  BasisConfig cfg;
  cfg.extra_knots = {-2.0, 2.0};
  const auto f = ConditionalFit::fit(x, y, cfg);
  for (double q : {-1.9, -0.1, 0.0, 1.3}) CHECK(f.value(q) == Approx(1.0 - 0.5 * q).epsilon(1e-8));
}

TEST_CASE("basis shrinks with few samples") {
  const auto x = normals(300, 5);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
  const auto f = ConditionalFit::fit(x, y);
  CHECK(f.reduced());
  CHECK(f.basis_size() * 50 <= 300);
  CHECK_THROWS_AS(ConditionalFit::fit(std::vector<double>{}, std::vector<double>{}),
                  std::invalid_argument);
}
