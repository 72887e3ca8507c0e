#include "la3p/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace la3p {

namespace {

void require_finite(double delta, const char* op) {
  if (!std::isfinite(delta)) {
    throw std::invalid_argument(std::string(op) + ": TD error must be finite");
  }
}

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

double clipped_priority(double delta, double alpha) {
  return std::max(std::pow(std::abs(delta), alpha), 1.0);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Mse: return "mse";
    case LossKind::Huber: return "huber";
    case LossKind::Pal: return "pal";
  }
  return "unknown";
}

LossValue mse(double delta) {
  require_finite(delta, "mse");
  return {0.5 * delta * delta, delta};
}

LossValue huber(double delta) {
  require_finite(delta, "huber");
  if (std::abs(delta) <= 1.0) return {0.5 * delta * delta, delta};
  return {std::abs(delta), sign(delta)};
}

double pal_xi(std::span<const double> deltas, double alpha) {
  if (deltas.empty()) throw std::invalid_argument("pal_xi: empty batch");
  double sum = 0.0;
  for (double d : deltas) {
    require_finite(d, "pal_xi");
    sum += clipped_priority(d, alpha);
  }
  return sum / static_cast<double>(deltas.size());
}

LossValue pal(double delta, double xi, double alpha) {
  require_finite(delta, "pal");
  if (!(xi > 0.0)) throw std::invalid_argument("pal: xi must be positive");
  const double a = std::abs(delta);
  if (a <= 1.0) return {0.5 * delta * delta / xi, delta / xi};
  return {std::pow(a, 1.0 + alpha) / ((1.0 + alpha) * xi), sign(delta) * std::pow(a, alpha) / xi};
}

GradientIdentity expected_gradient_identity_check(std::span<const double> deltas, double alpha) {
  if (deltas.empty()) throw std::invalid_argument("expected_gradient_identity_check: empty batch");
  double priority_sum = 0.0;
  for (double d : deltas) priority_sum += clipped_priority(d, alpha);

  const double xi = pal_xi(deltas, alpha);
  GradientIdentity out;
  for (double d : deltas) {
    out.prioritized_huber += clipped_priority(d, alpha) / priority_sum * huber(d).grad;
    out.uniform_pal += pal(d, xi, alpha).grad;
  }
  out.uniform_pal /= static_cast<double>(deltas.size());
  return out;
}

double bias_condition(double rho, double alpha, double beta) { return rho + alpha * (1.0 - beta); }

}  // namespace la3p
