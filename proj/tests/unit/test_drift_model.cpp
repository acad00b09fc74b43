#include <cmath>
#include <limits>

#include "bvsmp/drift_model.hpp"
#include "doctest.h"

using namespace bvsmp;
using doctest::Approx;

TEST_CASE("corridor drift values") {
  const auto s = corridor_spec(0.5, 4.0, 2.0, 1.0);
  CHECK(eval_drift(s, 0.0, 0.0, 1.0) == 0.0);
  CHECK(eval_drift(s, 0.0, 3.0, 0.5) == Approx(0.5 * std::tanh(0.75) - 0.5).epsilon(1e-14));
  CHECK(eval_drift(s, 0.0, -3.0, 1.0) == Approx(-0.5 * std::tanh(0.75) + 1.0).epsilon(1e-14));
  CHECK(eval_drift(s, 1.0, 1.0, 1.0) == Approx(0.5 * std::tanh(0.25)).epsilon(1e-14));
  CHECK(std::abs(eval_drift(s, 0.0, 100.0, 1.0)) <= s.composite_bound());
  CHECK(s.composite_bound() == Approx(1.5));
}

TEST_CASE("b2 is right-continuous at the atoms") {
  const auto s = corridor_spec(0.5, 4.0, 2.0, 1.0);
  CHECK(s.b2.eval(2.0) == -1.0);
  CHECK(s.b2.left_limit(2.0) == 0.0);
  CHECK(s.b2.eval(-2.0) == 0.0);
  CHECK(s.b2.left_limit(-2.0) == 1.0);
  CHECK(s.b2.eval(-2.0000001) == 1.0);
  CHECK(s.b2.eval(1.9999999) == 0.0);
}

TEST_CASE("eval_drift rejects bad inputs") {
  const auto s = corridor_spec(0.5, 4.0, 2.0, 1.0);
  CHECK_THROWS_AS(eval_drift(s, 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_drift(s, 0.0, 0.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(eval_drift(s, std::numeric_limits<double>::infinity(), 0.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(corridor_spec(0.5, 4.0, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(corridor_spec(0.5, 4.0, 2.0, -1.0), ConfigError);
  CHECK_THROWS_AS(zero_spec(0.0), ConfigError);
}

TEST_CASE("total variation") {
  CHECK(corridor_spec(0.5, 4.0, 2.0, 1.0).b2.total_variation() == Approx(2.0));
  CHECK(BVFunction::zero().total_variation() == 0.0);
  // monotone b2 = -0.4 tanh(x / 1.5): variation is sup - inf
  const auto p = custom_polynomial_spec({0.0, 0.5}, 2.0, {0.0, -0.4}, 1.5, 1.0);
  CHECK(p.b2.total_variation() == Approx(0.8).epsilon(1e-6));
  CHECK(p.b2.eval(0.7) == Approx(-0.4 * std::tanh(0.7 / 1.5)).epsilon(1e-12));
}

TEST_CASE("derivative measure of the corridor b2") {
  const auto m = bv_derivative_measure(corridor_spec(0.5, 4.0, 2.0, 1.0).b2);
  REQUIRE(m.atoms.size() == 2);
  CHECK(m.atoms[0].location == -2.0);
  CHECK(m.atoms[0].jump == -1.0);
  CHECK(m.atoms[1].location == 2.0);
  CHECK(m.atoms[1].jump == -1.0);
}

TEST_CASE("mollifier building blocks") {
  for (int n : {1, 3, 10}) {
    CHECK(mollifier::cutoff(0.0, n) == 1.0);
    CHECK(mollifier::cutoff(n - 1.0, n) == 1.0);
    CHECK(mollifier::cutoff(n + 0.01, n) == 0.0);
    CHECK(mollifier::kernel_cdf(-7.0 / n, n) == 0.0);
    CHECK(mollifier::kernel_cdf(7.0 / n, n) == 1.0);
    CHECK(mollifier::kernel_cdf(0.0, n) == Approx(0.5));
    double prev = 0.0;
    for (int i = -60; i <= 60; ++i) {
      const double c = mollifier::kernel_cdf(i * 0.1 / n, n);
      CHECK(c >= prev);
      prev = c;
    }
    // derivative of the cutoff against a central difference
    const double x = n - 0.5, h = 1e-6;
    CHECK(mollifier::cutoff_derivative(x, n) ==
          Approx((mollifier::cutoff(x + h, n) - mollifier::cutoff(x - h, n)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("mollified drift approaches the original away from the atoms") {
  const auto s = corridor_spec(0.5, 4.0, 2.0, 1.0);
  double prev_err = 1e9;
  for (int n : {10, 30, 100}) {
    const auto m = mollify(s, n);
    double err = 0.0;
    for (double x : {-3.0, -2.5, -1.0, 0.0, 1.0, 2.5, 3.0})
      err = std::max(err, std::abs(m.b2n.eval(0.0, x) - s.b2.eval(x)) +
                              std::abs(m.b1n.eval(0.0, x) - s.b1.eval(0.0, x)));
    CHECK(err < prev_err + 1e-15);
    prev_err = err;
    // midpoint of the jump
    CHECK(m.b2n.eval(0.0, 2.0) == Approx(-0.5).epsilon(1e-9));
    CHECK(m.b1n.sup_norm == s.b1.sup_norm);
    const auto d = m.as_drift_spec();
    CHECK(d.b2.atoms().empty());
    CHECK(d.b2.eval(2.5) == Approx(m.b2n.eval(0.0, 2.5)));
  }
  // second-order smoothing bias of b1 at scale 1/100
  CHECK(prev_err < 1e-5);
  CHECK_THROWS_AS(mollify(s, 0), ConfigError);
}
