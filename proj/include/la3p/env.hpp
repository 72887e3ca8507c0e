#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace la3p {

enum class EnvKind { PointMass1D, PointMass2D, PendulumSwingUp, AnalyticBandit };

/// Accepts the canonical names plus lowercase aliases ("pointmass1d", "pendulum", "bandit").
EnvKind parse_env_kind(std::string_view name);
std::string_view to_string(EnvKind kind);

struct EnvSpec {
  EnvKind kind = EnvKind::PointMass1D;
  int state_dim = 0;
  int action_dim = 0;
  double action_low = -1.0;
  double action_high = 1.0;
  int max_episode_steps = 1;

  double action_scale() const { return action_high; }
};

struct EnvOptions {
  int bandit_state_dim = 1;
  /// 1 gives the one-step bandit; 2 chains a second step through
  /// bandit::successor() and appends the step index (0 or 1) to the observation.
  int bandit_horizon = 1;
};

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
  /// Episode ended by the step limit rather than a terminal state.
  bool truncated = false;
};

namespace bandit {

/// Optimal action g(s) = 0.5 * tanh(2 * s_1).
double target_action(const Eigen::VectorXd& state);
/// -(a - g(s))^2
double reward(const Eigen::VectorXd& state, const Eigen::VectorXd& action);
/// Context reached after the first step of the chained bandit (context
/// coordinates only, without the step index).
Eigen::VectorXd successor(const Eigen::VectorXd& state, const Eigen::VectorXd& action);

}  // namespace bandit

/**
 * Toy continuous-control tasks with bounded actions.
 *
 *  - PointMass1D/2D: double integrator (dt 0.1) toward the origin,
 *    reward -(|x|^2 + 0.01 |a|^2), 100-step episodes.
 *  - PendulumSwingUp: classic swing-up pendulum, reward
 *    -(angle^2 + 0.1 omega^2 + 0.001 a^2), 200-step episodes.
 *  - AnalyticBandit: reward -(a - g(s))^2, so Q is known in closed form.
 *
 * Rewards are computed from the state before the action is applied.
 * Out-of-range actions are clipped; the first clip prints a warning.
 */
class Environment {
 public:
  explicit Environment(EnvKind kind, EnvOptions options = {});

  const EnvSpec& spec() const { return spec_; }
  const EnvOptions& options() const { return options_; }

  Eigen::VectorXd reset(std::uint64_t seed);
  StepResult step(const Eigen::VectorXd& action);

  /// Exact action value of the one-step bandit.
  double optimal_q(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;

  /// Per-step reward floor for this task.
  double reward_lower_bound() const;

  Eigen::VectorXd observation() const;
  int steps() const { return steps_; }
  bool episode_done() const { return done_; }
  std::size_t clipped_actions() const { return clipped_; }

 private:
  Eigen::VectorXd clip_action(const Eigen::VectorXd& action);

  EnvSpec spec_;
  EnvOptions options_;
  Eigen::VectorXd position_;  // point mass position / pendulum angle / bandit context
  Eigen::VectorXd velocity_;
  int steps_ = 0;
  bool done_ = true;
  std::size_t clipped_ = 0;
};

}  // namespace la3p
