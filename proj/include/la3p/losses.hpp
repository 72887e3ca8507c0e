#pragma once

#include <span>
#include <string_view>

namespace la3p {

/// Critic loss family, all written as functions of the TD error delta = y - Q.
enum class LossKind { Mse, Huber, Pal };

std::string_view to_string(LossKind kind);

struct LossValue {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d delta
};

/// 0.5 * delta^2. Shares its quadratic branch with huber() and pal().
LossValue mse(double delta);

/// Huber loss with threshold 1; the quadratic branch includes |delta| = 1.
LossValue huber(double delta);

/// Batch normalizer mean_j max(|delta_j|^alpha, 1) used by pal().
double pal_xi(std::span<const double> deltas, double alpha);

/// Prioritized approximate loss: the uniform-sampling mirror of huber()
/// under loss-adjusted prioritization.
LossValue pal(double delta, double xi, double alpha);

struct GradientIdentity {
  double prioritized_huber = 0.0;  // sum_i q_i * huber'(delta_i)
  double uniform_pal = 0.0;        // mean_i pal'(delta_i)
};

/// Evaluates both sides of the expected-gradient identity between Huber
/// under clipped prioritization and PAL under uniform sampling.
GradientIdentity expected_gradient_identity_check(std::span<const double> deltas, double alpha);

/// rho + alpha - alpha * beta; a prioritized objective with loss
/// |delta|^rho / rho is unbiased only when this equals 2.
double bias_condition(double rho, double alpha, double beta);

}  // namespace la3p
