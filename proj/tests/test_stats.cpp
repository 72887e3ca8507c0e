#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "la3p/stats.hpp"

using namespace la3p::stats;

TEST_CASE("moments") {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(xs) == 5.0);
  CHECK(sample_stddev(xs) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-15));
  CHECK(sample_stddev(std::vector<double>{3.0}) == 0.0);
  CHECK_THROWS_AS(mean(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("confidence interval uses the Student t quantile") {
  // t_{0.975, 9} = 2.2621571628
  std::vector<double> xs(10);
  for (int i = 0; i < 10; ++i) xs[i] = i;
  const double s = sample_stddev(xs);
  CHECK(ci95_half_width(xs) == doctest::Approx(2.2621571628 * s / std::sqrt(10.0)).epsilon(1e-9));
  CHECK(ci95_half_width(std::vector<double>{1.0}) == 0.0);
}

TEST_CASE("correlations") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  const std::vector<double> z{1, 4, 9, 16, 25};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, z) == doctest::Approx(1.0));
  CHECK(pearson(x, z) < 1.0);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(spearman(x, rev) == doctest::Approx(-1.0));
  CHECK(ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK(pearson(x, std::vector<double>(5, 1.0)) == 0.0);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("correlation p-value") {
  // r = 0.5, n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257, one-sided p ~ 0.0490
  CHECK(correlation_p_value_positive(0.5, 12) == doctest::Approx(0.0490).epsilon(2e-2));
  CHECK(correlation_p_value_positive(0.0, 50) == doctest::Approx(0.5));
  CHECK(correlation_p_value_positive(1.0, 50) == 0.0);
  CHECK(correlation_p_value_positive(0.9, 2) == 1.0);
}

TEST_CASE("chi-square goodness of fit") {
  const std::vector<std::size_t> obs{10, 20, 30, 40};
  const std::vector<double> p(4, 0.25);
  const auto r = chi_square_gof(obs, p);
  CHECK(r.statistic == doctest::Approx(20.0));
  CHECK(r.dof == 3);
  CHECK(r.p_value == doctest::Approx(1.697e-4).epsilon(1e-3));

  const auto exact = chi_square_gof(std::vector<std::size_t>{25, 0, 75}, std::vector<double>{0.25, 0.0, 0.75});
  CHECK(exact.statistic == 0.0);
  CHECK(exact.dof == 1);
  CHECK(exact.p_value == 1.0);

  const auto impossible =
      chi_square_gof(std::vector<std::size_t>{1, 1}, std::vector<double>{1.0, 0.0});
  CHECK(impossible.p_value == 0.0);
  CHECK_THROWS_AS(chi_square_gof(obs, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("linear fit") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  const auto noisy = linear_fit(x, std::vector<double>{1, 3, 2, 4});
  CHECK(noisy.r_squared == doctest::Approx(0.64));
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}
