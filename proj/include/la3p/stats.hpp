#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace la3p::stats {

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> xs);

/// Half-width of the two-sided 95% Student-t confidence interval of the mean.
double ci95_half_width(std::span<const double> xs);

double pearson(std::span<const double> xs, std::span<const double> ys);

/// Fractional ranks (1-based, ties get their average rank).
std::vector<double> ranks(std::span<const double> xs);

double spearman(std::span<const double> xs, std::span<const double> ys);

/// One-sided p-value for H1: correlation > 0, using the t approximation
/// t = r * sqrt((n - 2) / (1 - r^2)) with n - 2 degrees of freedom.
double correlation_p_value_positive(double r, std::size_t n);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness-of-fit test. Categories with zero expected probability
/// must have zero observations; they are dropped from the statistic.
ChiSquareResult chi_square_gof(std::span<const std::size_t> observed,
                               std::span<const double> probabilities);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys);

double median(std::vector<double> xs);

}  // namespace la3p::stats
