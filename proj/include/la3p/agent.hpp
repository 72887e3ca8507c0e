#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "la3p/env.hpp"
#include "la3p/losses.hpp"
#include "la3p/mlp.hpp"
#include "la3p/random.hpp"
#include "la3p/replay_buffer.hpp"

namespace la3p {

enum class Scheme { Uniform, ClassicPer, Lap, La3p };

Scheme parse_scheme(std::string_view name);
std::string_view to_string(Scheme scheme);

/// Priority storage convention each scheme expects from its replay buffer.
PriorityMode priority_mode_for(Scheme scheme);

struct SamplerScheme {
  Scheme tag = Scheme::La3p;
  double lambda = 0.5;  // uniform fraction; only read by La3p
};

struct AgentConfig {
  std::vector<int> hidden{64, 64};
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double gamma = 0.99;
  double zeta = 0.005;
  double policy_noise = 0.2;  // fraction of the action scale
  double noise_clip = 0.5;    // fraction of the action scale
  int policy_delay = 2;
  double exploration_noise = 0.1;
  std::size_t batch_size = 64;
  std::size_t start_steps = 1000;
  SamplerScheme scheme;
  double alpha = 0.4;
  double beta0 = 0.4;
  double mu = 1e-4;
  /// Horizon of the linear beta schedule (classic PER only).
  std::size_t anneal_steps = 40000;
  /// Polyak-update targets after both actor updates of an LA3P step
  /// (false: only after the last one).
  bool double_target_update = true;
  /// Critic loss of the Uniform scheme; Pal gives the uniform+PAL variant.
  LossKind uniform_loss = LossKind::Mse;
};

/// Default AgentConfig with the alpha matching the scheme (0.6 classic PER, 0.4 otherwise).
AgentConfig default_agent_config(Scheme scheme);

/// One recorded operation of an update step.
struct TraceEvent {
  enum class Op {
    UniformSample,
    PrioritizedSample,
    InverseRebuild,
    InverseSample,
    CriticUpdate,
    ActorUpdate,
    PriorityUpdate,
    TargetUpdate,
  };
  Op op;
  std::size_t batch = 0;
  LossKind loss = LossKind::Mse;  // CriticUpdate only

  bool operator==(const TraceEvent&) const = default;
};

std::string_view to_string(TraceEvent::Op op);

struct CriticUpdateResult {
  std::vector<double> td1;  // y - Q1
  std::vector<double> td2;  // y - Q2
  double loss = 0.0;        // mean per-sample loss, summed over both critics

  /// max(|td1|, |td2|) per sample, the priority signal.
  std::vector<double> priority_errors() const;
};

struct CriticGradients {
  MlpGrads critic1;
  MlpGrads critic2;
  CriticUpdateResult result;
};

/**
 * Deterministic-policy actor-critic with twin critics, target networks,
 * target-policy smoothing and delayed actor updates.
 *
 * update() runs one update step with the configured sampling scheme. Every
 * update step advances the shared delay counter once; actor updates (and
 * the target updates that follow them) only run on steps that are a
 * multiple of policy_delay.
 */
class Agent {
 public:
  Agent(const EnvSpec& env, AgentConfig config, std::uint64_t seed);

  /// Policy action; Gaussian exploration noise when `explore`, and uniform
  /// random actions for the first start_steps exploring calls.
  Eigen::VectorXd select_action(const Eigen::VectorXd& state, bool explore, Rng& rng);

  /// Clipped double-Q targets with target-policy smoothing.
  Eigen::RowVectorXd td_targets(const SampleBatch& batch, Rng& rng) const;

  /// Loss gradients of both critics without stepping them.
  CriticGradients critic_gradients(const SampleBatch& batch, LossKind kind, Rng& rng) const;

  /// One Adam step of both critics on the batch-mean loss. Batch weights
  /// multiply the per-sample losses (all 1 except for classic PER).
  CriticUpdateResult critic_update(const SampleBatch& batch, LossKind kind, Rng& rng);

  /// Gradient of -mean Q1(s, pi(s)) with respect to the actor parameters.
  MlpGrads actor_gradient(const Eigen::MatrixXd& states) const;

  /// Ascend mean Q1(s, pi(s)) over the batch states; critics stay frozen.
  void actor_update(const SampleBatch& batch);

  void update_targets();

  /// Whether the current update step is an actor step.
  bool actor_due() const;

  void la3p_update_step(ReplayBuffer& buffer, Rng& rng);
  void baseline_update_step(ReplayBuffer& buffer, Rng& rng, Scheme scheme);
  /// Dispatch on the configured scheme.
  void update(ReplayBuffer& buffer, Rng& rng);

  const AgentConfig& config() const { return config_; }
  const EnvSpec& env_spec() const { return env_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& actor_target() const { return actor_target_; }
  const Mlp& critic1() const { return critic1_; }
  const Mlp& critic2() const { return critic2_; }
  const Mlp& critic1_target() const { return critic1_target_; }
  const Mlp& critic2_target() const { return critic2_target_; }
  Mlp& mutable_actor() { return actor_; }
  Mlp& mutable_critic1() { return critic1_; }
  Mlp& mutable_critic2() { return critic2_; }

  std::size_t update_steps() const { return update_steps_; }
  std::size_t exploration_steps() const { return explore_calls_; }

  void enable_trace(bool on) { tracing_ = on; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

 private:
  void record(TraceEvent::Op op, std::size_t batch = 0, LossKind loss = LossKind::Mse);
  void check_buffer(const ReplayBuffer& buffer) const;
  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  EnvSpec env_;
  AgentConfig config_;
  BetaSchedule beta_schedule_;

  Mlp actor_;
  Mlp actor_target_;
  Mlp critic1_;
  Mlp critic2_;
  Mlp critic1_target_;
  Mlp critic2_target_;
  AdamState actor_opt_;
  AdamState critic1_opt_;
  AdamState critic2_opt_;

  std::size_t update_steps_ = 0;
  std::size_t explore_calls_ = 0;
  bool tracing_ = false;
  std::vector<TraceEvent> trace_;
};

}  // namespace la3p
