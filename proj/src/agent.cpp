#include "la3p/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace la3p {

Scheme parse_scheme(std::string_view name) {
  std::string n(name);
  for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "uniform") return Scheme::Uniform;
  if (n == "per") return Scheme::ClassicPer;
  if (n == "lap") return Scheme::Lap;
  if (n == "la3p") return Scheme::La3p;
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (expected uniform, per, lap or la3p)");
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Uniform: return "uniform";
    case Scheme::ClassicPer: return "per";
    case Scheme::Lap: return "lap";
    case Scheme::La3p: return "la3p";
  }
  return "unknown";
}

PriorityMode priority_mode_for(Scheme scheme) {
  return scheme == Scheme::ClassicPer ? PriorityMode::Proportional : PriorityMode::Clipped;
}

AgentConfig default_agent_config(Scheme scheme) {
  AgentConfig cfg;
  cfg.scheme.tag = scheme;
  cfg.alpha = scheme == Scheme::ClassicPer ? 0.6 : 0.4;
  return cfg;
}

std::string_view to_string(TraceEvent::Op op) {
  using Op = TraceEvent::Op;
  switch (op) {
    case Op::UniformSample: return "uniform_sample";
    case Op::PrioritizedSample: return "prioritized_sample";
    case Op::InverseRebuild: return "inverse_rebuild";
    case Op::InverseSample: return "inverse_sample";
    case Op::CriticUpdate: return "critic_update";
    case Op::ActorUpdate: return "actor_update";
    case Op::PriorityUpdate: return "priority_update";
    case Op::TargetUpdate: return "target_update";
  }
  return "unknown";
}

std::vector<double> CriticUpdateResult::priority_errors() const {
  std::vector<double> out(td1.size());
  for (std::size_t i = 0; i < td1.size(); ++i) out[i] = std::max(std::abs(td1[i]), std::abs(td2[i]));
  return out;
}

namespace {

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims;
  dims.push_back(in);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

Mlp make_actor(const EnvSpec& env, const AgentConfig& cfg, Rng& rng) {
  return Mlp(with_io(env.state_dim, cfg.hidden, env.action_dim), OutputHead::ScaledTanh,
             env.action_scale(), rng);
}

Mlp make_critic(const EnvSpec& env, const AgentConfig& cfg, Rng& rng) {
  return Mlp(with_io(env.state_dim + env.action_dim, cfg.hidden, 1), OutputHead::Linear, 1.0, rng);
}

void validate(const EnvSpec& env, const AgentConfig& cfg) {
  if (env.action_low != -env.action_high || !(env.action_high > 0.0)) {
    throw std::invalid_argument("Agent: action bounds must be symmetric around zero");
  }
  if (cfg.batch_size == 0) throw std::invalid_argument("Agent: batch size must be positive");
  if (cfg.policy_delay < 1) throw std::invalid_argument("Agent: policy delay must be >= 1");
  if (!(cfg.scheme.lambda >= 0.0 && cfg.scheme.lambda <= 1.0)) {
    throw std::invalid_argument("Agent: lambda must lie in [0, 1]");
  }
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("Agent: gamma must lie in [0, 1)");
}

}  // namespace

Agent::Agent(const EnvSpec& env, AgentConfig config, std::uint64_t seed)
    : env_(env),
      config_((validate(env, config), std::move(config))),
      beta_schedule_{config_.beta0, config_.anneal_steps},
      actor_([&] {
        Rng init(seed);
        return make_actor(env_, config_, init);
      }()),
      actor_target_(actor_),
      critic1_([&] {
        Rng init(seed ^ 0x9e3779b97f4a7c15ULL);
        return make_critic(env_, config_, init);
      }()),
      critic2_([&] {
        Rng init(seed ^ 0xc2b2ae3d27d4eb4fULL);
        return make_critic(env_, config_, init);
      }()),
      critic1_target_(critic1_),
      critic2_target_(critic2_),
      actor_opt_(actor_, AdamOptions{config_.actor_lr}),
      critic1_opt_(critic1_, AdamOptions{config_.critic_lr}),
      critic2_opt_(critic2_, AdamOptions{config_.critic_lr}) {}

void Agent::record(TraceEvent::Op op, std::size_t batch, LossKind loss) {
  if (tracing_) trace_.push_back(TraceEvent{op, batch, loss});
}

Eigen::MatrixXd Agent::critic_input(const Eigen::MatrixXd& states,
                                    const Eigen::MatrixXd& actions) const {
  Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
  x << states, actions;
  return x;
}

Eigen::VectorXd Agent::select_action(const Eigen::VectorXd& state, bool explore, Rng& rng) {
  const double scale = env_.action_scale();
  if (explore && explore_calls_ < config_.start_steps) {
    ++explore_calls_;
    std::uniform_real_distribution<double> uniform(env_.action_low, env_.action_high);
    Eigen::VectorXd a(env_.action_dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform(rng);
    return a;
  }
  Eigen::VectorXd a = actor_.forward(state);
  if (explore) {
    ++explore_calls_;
    std::normal_distribution<double> noise(0.0, config_.exploration_noise * scale);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += noise(rng);
  }
  return a.cwiseMax(env_.action_low).cwiseMin(env_.action_high);
}

Eigen::RowVectorXd Agent::td_targets(const SampleBatch& batch, Rng& rng) const {
  if (batch.size() == 0) throw std::invalid_argument("td_targets: empty batch");
  const double scale = env_.action_scale();
  Eigen::MatrixXd next_actions = actor_target_.forward(batch.next_states);
  std::normal_distribution<double> noise(0.0, config_.policy_noise * scale);
  const double clip = config_.noise_clip * scale;
  for (Eigen::Index c = 0; c < next_actions.cols(); ++c) {
    for (Eigen::Index r = 0; r < next_actions.rows(); ++r) {
      const double eps = std::clamp(noise(rng), -clip, clip);
      next_actions(r, c) = std::clamp(next_actions(r, c) + eps, env_.action_low, env_.action_high);
    }
  }
  const Eigen::MatrixXd x = critic_input(batch.next_states, next_actions);
  const Eigen::RowVectorXd q1 = critic1_target_.forward(x);
  const Eigen::RowVectorXd q2 = critic2_target_.forward(x);
  const Eigen::RowVectorXd not_done = (1.0 - batch.dones.array()).matrix();
  return batch.rewards + config_.gamma * not_done.cwiseProduct(q1.cwiseMin(q2));
}

CriticGradients Agent::critic_gradients(const SampleBatch& batch, LossKind kind, Rng& rng) const {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("critic_gradients: empty batch");
  const Eigen::RowVectorXd y = td_targets(batch, rng);
  const Eigen::MatrixXd x = critic_input(batch.states, batch.actions);
  ForwardCache c1, c2;
  const Eigen::RowVectorXd q1 = critic1_.forward(x, c1);
  const Eigen::RowVectorXd q2 = critic2_.forward(x, c2);

  CriticGradients out;
  auto& res = out.result;
  res.td1.resize(n);
  res.td2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.td1[i] = y(static_cast<Eigen::Index>(i)) - q1(static_cast<Eigen::Index>(i));
    res.td2[i] = y(static_cast<Eigen::Index>(i)) - q2(static_cast<Eigen::Index>(i));
  }

  double xi = 1.0;
  if (kind == LossKind::Pal) xi = pal_xi(res.priority_errors(), config_.alpha);
  auto loss_of = [&](double delta) {
    switch (kind) {
      case LossKind::Mse: return mse(delta);
      case LossKind::Huber: return huber(delta);
      case LossKind::Pal: return pal(delta, xi, config_.alpha);
    }
    throw std::logic_error("unknown loss kind");
  };

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::RowVectorXd g1(static_cast<Eigen::Index>(n));
  Eigen::RowVectorXd g2(static_cast<Eigen::Index>(n));
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = batch.weights.empty() ? 1.0 : batch.weights[i];
    const auto l1 = loss_of(res.td1[i]);
    const auto l2 = loss_of(res.td2[i]);
    loss += w * (l1.loss + l2.loss);
    // delta = y - Q, so dL/dQ = -dL/ddelta.
    g1(static_cast<Eigen::Index>(i)) = -w * l1.grad * inv_n;
    g2(static_cast<Eigen::Index>(i)) = -w * l2.grad * inv_n;
  }
  res.loss = loss * inv_n;
  if (!std::isfinite(res.loss)) throw std::runtime_error("critic update: loss is not finite");

  out.critic1 = critic1_.backward(c1, g1).params;
  out.critic2 = critic2_.backward(c2, g2).params;
  return out;
}

CriticUpdateResult Agent::critic_update(const SampleBatch& batch, LossKind kind, Rng& rng) {
  auto grads = critic_gradients(batch, kind, rng);
  adam_step(critic1_, critic1_opt_, grads.critic1);
  adam_step(critic2_, critic2_opt_, grads.critic2);
  record(TraceEvent::Op::CriticUpdate, batch.size(), kind);
  return std::move(grads.result);
}

MlpGrads Agent::actor_gradient(const Eigen::MatrixXd& states) const {
  const auto n = states.cols();
  if (n == 0) throw std::invalid_argument("actor_gradient: empty batch");
  ForwardCache ca, cq;
  const Eigen::MatrixXd actions = actor_.forward(states, ca);
  critic1_.forward(critic_input(states, actions), cq);
  const Eigen::RowVectorXd up = Eigen::RowVectorXd::Constant(n, -1.0 / static_cast<double>(n));
  const auto critic_back = critic1_.backward(cq, up);
  const Eigen::MatrixXd action_grad = critic_back.input_grad.bottomRows(env_.action_dim);
  return actor_.backward(ca, action_grad).params;
}

void Agent::actor_update(const SampleBatch& batch) {
  const auto grads = actor_gradient(batch.states);
  if (!grads.all_finite()) throw std::runtime_error("actor update: gradient is not finite");
  adam_step(actor_, actor_opt_, grads);
  record(TraceEvent::Op::ActorUpdate, batch.size());
}

void Agent::update_targets() {
  polyak_update(critic1_target_, critic1_, config_.zeta);
  polyak_update(critic2_target_, critic2_, config_.zeta);
  polyak_update(actor_target_, actor_, config_.zeta);
  record(TraceEvent::Op::TargetUpdate);
}

bool Agent::actor_due() const {
  return update_steps_ % static_cast<std::size_t>(config_.policy_delay) == 0;
}

void Agent::check_buffer(const ReplayBuffer& buffer) const {
  if (buffer.count() < config_.batch_size) {
    throw std::logic_error("update step: buffer holds " + std::to_string(buffer.count()) +
                           " transitions, fewer than the batch size " +
                           std::to_string(config_.batch_size));
  }
  if (static_cast<int>(buffer.state_dim()) != env_.state_dim ||
      static_cast<int>(buffer.action_dim()) != env_.action_dim) {
    throw std::invalid_argument("update step: buffer dimensions do not match the agent");
  }
}

void Agent::la3p_update_step(ReplayBuffer& buffer, Rng& rng) {
  check_buffer(buffer);
  if (buffer.mode() != PriorityMode::Clipped) {
    throw std::logic_error("la3p_update_step: buffer must use clipped priorities");
  }
  ++update_steps_;
  const bool actor_step = actor_due();
  const std::size_t n = config_.batch_size;
  const auto n_uniform =
      static_cast<std::size_t>(std::lround(config_.scheme.lambda * static_cast<double>(n)));
  const std::size_t n_prioritized = n - n_uniform;

  // Shared uniform batch: PAL critic, actor, priorities, targets.
  if (n_uniform > 0) {
    auto batch = buffer.sample_uniform(n_uniform, rng);
    record(TraceEvent::Op::UniformSample, n_uniform);
    const auto res = critic_update(batch, LossKind::Pal, rng);
    if (actor_step) actor_update(batch);
    buffer.update_priorities(batch.indices, res.priority_errors());
    record(TraceEvent::Op::PriorityUpdate, n_uniform);
    if (actor_step && (config_.double_target_update || n_prioritized == 0)) update_targets();
  }

  if (n_prioritized > 0) {
    // Prioritized critic batch with Huber loss.
    auto batch = buffer.sample_prioritized(n_prioritized, rng);
    record(TraceEvent::Op::PrioritizedSample, n_prioritized);
    const auto res = critic_update(batch, LossKind::Huber, rng);
    buffer.update_priorities(batch.indices, res.priority_errors());
    record(TraceEvent::Op::PriorityUpdate, n_prioritized);

    // Inverse prioritized actor batch; priorities are left untouched.
    if (actor_step) {
      buffer.rebuild_inverse();
      record(TraceEvent::Op::InverseRebuild);
      auto inverse_batch = buffer.sample_inverse(n_prioritized, rng);
      record(TraceEvent::Op::InverseSample, n_prioritized);
      actor_update(inverse_batch);
      update_targets();
    }
  }
}

void Agent::baseline_update_step(ReplayBuffer& buffer, Rng& rng, Scheme scheme) {
  check_buffer(buffer);
  if (scheme == Scheme::La3p) {
    la3p_update_step(buffer, rng);
    return;
  }
  if (scheme != Scheme::Uniform && buffer.mode() != priority_mode_for(scheme)) {
    throw std::logic_error("baseline_update_step: buffer priority mode does not match scheme");
  }
  ++update_steps_;
  const std::size_t n = config_.batch_size;

  SampleBatch batch;
  CriticUpdateResult res;
  switch (scheme) {
    case Scheme::Uniform:
      batch = buffer.sample_uniform(n, rng);
      record(TraceEvent::Op::UniformSample, n);
      res = critic_update(batch, config_.uniform_loss, rng);
      break;
    case Scheme::ClassicPer:
      buffer.set_beta(beta_schedule_.at(update_steps_));
      batch = buffer.sample_prioritized(n, rng);
      record(TraceEvent::Op::PrioritizedSample, n);
      res = critic_update(batch, LossKind::Mse, rng);
      buffer.update_priorities(batch.indices, res.priority_errors());
      record(TraceEvent::Op::PriorityUpdate, n);
      break;
    case Scheme::Lap:
      batch = buffer.sample_prioritized(n, rng);
      record(TraceEvent::Op::PrioritizedSample, n);
      res = critic_update(batch, LossKind::Huber, rng);
      buffer.update_priorities(batch.indices, res.priority_errors());
      record(TraceEvent::Op::PriorityUpdate, n);
      break;
    case Scheme::La3p:
      break;
  }
  if (actor_due()) {
    actor_update(batch);
    update_targets();
  }
}

void Agent::update(ReplayBuffer& buffer, Rng& rng) {
  baseline_update_step(buffer, rng, config_.scheme.tag);
}

}  // namespace la3p
