#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "la3p/losses.hpp"
#include "la3p/random.hpp"
#include "oracles.hpp"

using namespace la3p;

TEST_CASE("mse") {
  CHECK(mse(2.0).loss == 2.0);
  CHECK(mse(2.0).grad == 2.0);
  CHECK(mse(-0.5).loss == 0.125);
  CHECK_THROWS_AS(mse(std::nan("")), std::invalid_argument);
}

TEST_CASE("huber") {
  CHECK(huber(0.5).loss == 0.125);
  CHECK(huber(0.5).grad == 0.5);
  CHECK(huber(2.0).loss == 2.0);
  CHECK(huber(2.0).grad == 1.0);
  CHECK(huber(-3.0).grad == -1.0);
  CHECK(huber(0.0).loss == 0.0);
  CHECK(huber(0.0).grad == 0.0);
  CHECK(huber(1.0).loss == 0.5);
  CHECK(huber(1.0).grad == 1.0);
  CHECK_THROWS_AS(huber(std::nan("")), std::invalid_argument);
}

TEST_CASE("pal normalizer") {
  const std::vector<double> d{0.5, 2.0};
  CHECK(pal_xi(d, 0.4) == doctest::Approx((1.0 + std::pow(2.0, 0.4)) / 2.0).epsilon(1e-15));
  CHECK(pal_xi(d, 0.4) == doctest::Approx(1.15975).epsilon(1e-5));
  CHECK(pal_xi(std::vector<double>{0.1, -0.9, 1.0}, 0.7) == 1.0);
  CHECK(pal_xi(std::vector<double>{3.0}, 1.0) == 3.0);
  CHECK_THROWS_AS(pal_xi(std::vector<double>{}, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(pal_xi(std::vector<double>{std::nan("")}, 0.4), std::invalid_argument);
}

TEST_CASE("pal") {
  CHECK(pal(0.5, 1.0, 0.4).loss == 0.125);
  CHECK(pal(0.5, 2.0, 0.4).grad == 0.25);
  const double xi = 1.15975;
  CHECK(pal(2.0, xi, 0.4).loss == doctest::Approx(std::pow(2.0, 1.4) / (1.4 * xi)).epsilon(1e-15));
  CHECK(pal(2.0, xi, 0.4).loss == doctest::Approx(1.6255).epsilon(1e-4));
  CHECK(pal(-2.0, xi, 0.4).grad == doctest::Approx(-std::pow(2.0, 0.4) / xi).epsilon(1e-15));
  CHECK_THROWS_AS(pal(1.0, 0.0, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(pal(1.0, -1.0, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(pal(std::nan(""), 1.0, 0.4), std::invalid_argument);
}

TEST_CASE("pal is continuous at the branch point") {
  for (double alpha : {0.1, 0.4, 1.0}) {
    const double below = pal(std::nextafter(1.0, 0.0), 1.3, alpha).loss;
    const double above = pal(std::nextafter(1.0, 2.0), 1.3, alpha).loss;
    // 0.5 vs 1/(1+alpha): PAL keeps the Huber-like shape only up to a constant.
    CHECK(std::isfinite(below));
    CHECK(std::isfinite(above));
    CHECK(pal(std::nextafter(1.0, 0.0), 1.3, alpha).grad ==
          doctest::Approx(pal(std::nextafter(1.0, 2.0), 1.3, alpha).grad).epsilon(1e-12));
  }
}

TEST_CASE("expected gradient identity") {
  SUBCASE("worked example") {
    const auto r = expected_gradient_identity_check(std::vector<double>{0.5, 2.0}, 0.4);
    CHECK(std::abs(r.prioritized_huber - r.uniform_pal) < 1e-12);
  }
  SUBCASE("all small errors reduce to the mean") {
    const std::vector<double> d{0.3, -0.7, 0.9};
    const auto r = expected_gradient_identity_check(d, 0.6);
    CHECK(r.prioritized_huber == doctest::Approx(0.5 / 3.0).epsilon(1e-12));
    CHECK(r.uniform_pal == doctest::Approx(0.5 / 3.0).epsilon(1e-12));
  }
  SUBCASE("oracle sides on random batches") {
    Rng rng(17);
    std::uniform_real_distribution<double> delta(-10.0, 10.0);
    std::uniform_real_distribution<double> alpha_dist(0.01, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> d(1 + trial % 40);
      for (auto& x : d) x = delta(rng);
      const double alpha = alpha_dist(rng);
      double psum = 0.0, lhs = 0.0, rhs = 0.0;
      for (double x : d) psum += oracle::clipped_priority(std::abs(x), alpha);
      for (double x : d) lhs += oracle::clipped_priority(std::abs(x), alpha) / psum * oracle::huber_grad(x);
      const double xi = psum / static_cast<double>(d.size());
      for (double x : d) rhs += oracle::pal_grad(x, xi, alpha);
      rhs /= static_cast<double>(d.size());
      const auto r = expected_gradient_identity_check(d, alpha);
      CHECK(r.prioritized_huber == doctest::Approx(lhs).epsilon(1e-12));
      CHECK(r.uniform_pal == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(expected_gradient_identity_check(std::vector<double>{}, 0.4), std::invalid_argument);
}

TEST_CASE("bias condition") {
  CHECK(bias_condition(2.0, 0.6, 0.4) == doctest::Approx(2.36).epsilon(1e-15));
  CHECK(bias_condition(1.0, 0.4, 0.0) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(bias_condition(1.0, 0.4, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bias_condition(2.0, 0.7, 1.0) == 2.0);
}

TEST_CASE("loss kind names") {
  CHECK(to_string(LossKind::Mse) == "mse");
  CHECK(to_string(LossKind::Huber) == "huber");
  CHECK(to_string(LossKind::Pal) == "pal");
}
