#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "la3p/env.hpp"
#include "la3p/mlp.hpp"

namespace la3p::diagnostics {

/// Action-value function with an action gradient, evaluated per sample.
class QModel {
 public:
  virtual ~QModel() = default;
  virtual double value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const = 0;
  virtual Eigen::VectorXd action_gradient(const Eigen::VectorXd& state,
                                          const Eigen::VectorXd& action) const = 0;
};

/// Critic network (linear head, input [state; action]).
class MlpQ final : public QModel {
 public:
  explicit MlpQ(const Mlp& net);
  double value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override;
  Eigen::VectorXd action_gradient(const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& action) const override;

 private:
  const Mlp& net_;
};

/// Exact action value of the one-step bandit: -(a - g(s))^2.
class BanditQ final : public QModel {
 public:
  double value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override;
  Eigen::VectorXd action_gradient(const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& action) const override;
};

/// base(s, a) + bias + amplitude * sin(3 s_1) * a_1.
/// The bias is action-independent; the amplitude term is not.
class PerturbedQ final : public QModel {
 public:
  PerturbedQ(const QModel& base, double bias, double amplitude);
  double value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override;
  Eigen::VectorXd action_gradient(const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& action) const override;

 private:
  const QModel& base_;
  double bias_;
  double amplitude_;
};

/// Softmax policy over an evenly spaced action grid, logits linear in [s; 1].
class SoftmaxPolicy {
 public:
  SoftmaxPolicy(int state_dim, int grid_size, double action_low, double action_high, Rng& rng);

  Eigen::VectorXd probabilities(const Eigen::VectorXd& state) const;
  const Eigen::VectorXd& grid() const { return grid_; }
  const Eigen::MatrixXd& logits_weight() const { return weight_; }

  /// Exact policy gradient E_{a~pi}[grad log pi(a|s) Q(s, a)], flattened
  /// row-major over the logits weight.
  Eigen::VectorXd policy_gradient(const Eigen::VectorXd& state, const QModel& q) const;

 private:
  Eigen::VectorXd grid_;
  Eigen::MatrixXd weight_;  // grid_size x (state_dim + 1)
};

struct ProbeRow {
  double abs_td = 0.0;
  double abs_est_err_t = 0.0;
  double abs_est_err_t1 = 0.0;
  double grad_div_t = 0.0;
  double grad_div_t1 = 0.0;
};

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
  double spearman_p = 1.0;  // one-sided, H1: spearman > 0
  std::size_t n = 0;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
  Correlation est_err_t;
  Correlation est_err_t1;
  Correlation grad_div_t;
  Correlation grad_div_t1;

  /// Correlate abs_td against each column; columns that are identically
  /// zero are left with n = 0.
  void compute_correlations();
  void write_csv(std::ostream& out) const;
  std::string summary_json() const;
};

/// One-step estimation probe: delta = r - Q(s, a) against |Q - Q^pi|.
/// Throws if the identity |delta| = |Q - Q^pi| is violated by more than 1e-12.
ProbeReport estimation_error_probe(const QModel& critic, const Environment& env,
                                   const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

/// Two-step chained bandit (horizon 2) under policy `actor`:
/// delta = x + gamma * y with x the estimation error at the first step and y
/// at the successor. Also fills the gradient-divergence columns at both steps.
ProbeReport chained_estimation_probe(const QModel& critic, const Mlp& actor, const Environment& env,
                                     const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                     double gamma);

/// Deterministic policy gradient through `critic` versus through the exact
/// bandit Q, per state, next to the TD error of the stored transition.
ProbeReport gradient_divergence_probe(const Mlp& actor, const QModel& critic, const Environment& env,
                                      const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

/// Same as gradient_divergence_probe() for the softmax stochastic policy.
ProbeReport stochastic_gradient_divergence_probe(const SoftmaxPolicy& policy, const QModel& critic,
                                                 const Environment& env,
                                                 const Eigen::MatrixXd& states,
                                                 const Eigen::MatrixXd& actions);

/// Regress a critic onto one-step bandit rewards for `steps` Adam steps.
Mlp train_bandit_critic(const Environment& env, const std::vector<int>& hidden, std::size_t steps,
                        std::size_t batch_size, std::uint64_t seed);

/// Uniform contexts and behavior actions pi(s) + N(0, noise) for probing.
struct ProbeSet {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
};
ProbeSet make_probe_set(const Environment& env, const Mlp* actor, std::size_t n, double noise,
                        std::uint64_t seed);

}  // namespace la3p::diagnostics
