#include "la3p/replay_buffer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>

namespace la3p {

Transition SampleBatch::transition(std::size_t k) const {
  if (k >= size()) throw std::out_of_range("SampleBatch::transition: index out of range");
  return Transition{states.col(static_cast<Eigen::Index>(k)),
                    actions.col(static_cast<Eigen::Index>(k)),
                    rewards(static_cast<Eigen::Index>(k)),
                    next_states.col(static_cast<Eigen::Index>(k)),
                    dones(static_cast<Eigen::Index>(k)) != 0.0};
}

double BetaSchedule::at(std::size_t step) const {
  if (total_steps == 0) return 1.0;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return beta0 + (1.0 - beta0) * frac;
}

namespace detail {

MinTree::MinTree(std::size_t capacity) : padded_(std::bit_ceil(std::max<std::size_t>(capacity, 1))) {
  nodes_.assign(2 * padded_ - 1, std::numeric_limits<double>::infinity());
}

void MinTree::set(std::size_t index, double value) {
  std::size_t node = padded_ - 1 + index;
  nodes_[node] = value;
  while (node != 0) {
    node = (node - 1) / 2;
    nodes_[node] = std::min(nodes_[2 * node + 1], nodes_[2 * node + 2]);
  }
}

}  // namespace detail

ReplayBuffer::ReplayBuffer(const ReplayConfig& config)
    : config_(config),
      priorities_(config.capacity),
      inverse_(config.capacity),
      min_leaf_(config.capacity) {
  if (config.state_dim == 0 || config.action_dim == 0) {
    throw std::invalid_argument("ReplayBuffer: state and action dimensions must be positive");
  }
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw std::invalid_argument("ReplayBuffer: alpha must lie in [0, 1]");
  }
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) {
    throw std::invalid_argument("ReplayBuffer: beta must lie in [0, 1]");
  }
  if (config.mode == PriorityMode::Proportional && !(config.mu > 0.0)) {
    throw std::invalid_argument("ReplayBuffer: mu must be positive in proportional mode");
  }
  const auto cap = static_cast<Eigen::Index>(config.capacity);
  states_.setZero(static_cast<Eigen::Index>(config.state_dim), cap);
  next_states_.setZero(static_cast<Eigen::Index>(config.state_dim), cap);
  actions_.setZero(static_cast<Eigen::Index>(config.action_dim), cap);
  rewards_.assign(config.capacity, 0.0);
  dones_.assign(config.capacity, 0);
  abs_td_.assign(config.capacity, 0.0);
  inverse_scratch_.reserve(config.capacity);
}

double ReplayBuffer::leaf_from_abs_td(double abs_td) const {
  const double scaled = std::pow(abs_td, config_.alpha);
  if (config_.mode == PriorityMode::Clipped) return std::max(scaled, 1.0);
  return scaled + config_.mu;
}

void ReplayBuffer::write_leaf(std::size_t index, double abs_td) {
  abs_td_[index] = abs_td;
  const double leaf = leaf_from_abs_td(abs_td);
  priorities_.set(index, leaf);
  if (config_.mode == PriorityMode::Proportional) min_leaf_.set(index, leaf);
  ++priority_version_;
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<std::size_t>(t.state.size()) != config_.state_dim ||
      static_cast<std::size_t>(t.next_state.size()) != config_.state_dim ||
      static_cast<std::size_t>(t.action.size()) != config_.action_dim) {
    throw std::invalid_argument("ReplayBuffer::push: transition dimensions do not match buffer");
  }
  const auto col = static_cast<Eigen::Index>(write_head_);
  states_.col(col) = t.state;
  actions_.col(col) = t.action;
  next_states_.col(col) = t.next_state;
  rewards_[write_head_] = t.reward;
  dones_[write_head_] = t.done ? 1 : 0;
  write_leaf(write_head_, kInitialPriority);

  write_head_ = (write_head_ + 1) % config_.capacity;
  count_ = std::min(count_ + 1, config_.capacity);
}

void ReplayBuffer::require_nonempty(const char* op) const {
  if (count_ == 0) {
    throw std::logic_error(std::string("ReplayBuffer::") + op + ": buffer is empty");
  }
}

SampleBatch ReplayBuffer::gather(std::vector<std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  SampleBatch batch;
  batch.states.resize(states_.rows(), n);
  batch.actions.resize(actions_.rows(), n);
  batch.next_states.resize(next_states_.rows(), n);
  batch.rewards.resize(n);
  batch.dones.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(k)]);
    batch.states.col(k) = states_.col(i);
    batch.actions.col(k) = actions_.col(i);
    batch.next_states.col(k) = next_states_.col(i);
    batch.rewards(k) = rewards_[static_cast<std::size_t>(i)];
    batch.dones(k) = dones_[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  batch.weights.assign(indices.size(), 1.0);
  batch.indices = std::move(indices);
  return batch;
}

SampleBatch ReplayBuffer::sample_uniform(std::size_t n, Rng& rng) const {
  require_nonempty("sample_uniform");
  std::uniform_int_distribution<std::size_t> pick(0, count_ - 1);
  std::vector<std::size_t> indices(n);
  for (auto& i : indices) i = pick(rng);
  return gather(std::move(indices));
}

SampleBatch ReplayBuffer::sample_prioritized(std::size_t n, Rng& rng) const {
  require_nonempty("sample_prioritized");
  auto batch = gather(priorities_.stratified_sample(n, rng));
  if (config_.mode == PriorityMode::Proportional) {
    batch.weights = importance_weights(batch.indices);
  }
  return batch;
}

void ReplayBuffer::rebuild_inverse() {
  require_nonempty("rebuild_inverse");
  if (config_.mode != PriorityMode::Clipped) {
    throw std::logic_error("ReplayBuffer::rebuild_inverse: requires clipped priorities");
  }
  const double* leaves = priorities_.nodes().data() + (priorities_.padded_capacity() - 1);
  const double p_max = *std::max_element(leaves, leaves + count_);
  inverse_scratch_.resize(count_);
  for (std::size_t i = 0; i < count_; ++i) inverse_scratch_[i] = p_max / leaves[i];
  inverse_.assign(inverse_scratch_);
  inverse_version_ = priority_version_;
  inverse_built_ = true;
}

SampleBatch ReplayBuffer::sample_inverse(std::size_t n, Rng& rng) const {
  require_nonempty("sample_inverse");
  if (!inverse_fresh()) {
    throw std::logic_error(
        "ReplayBuffer::sample_inverse: inverse tree is stale; call rebuild_inverse() after the "
        "last priority update");
  }
  return gather(inverse_.stratified_sample(n, rng));
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> indices,
                                     std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) {
    throw std::invalid_argument("ReplayBuffer::update_priorities: length mismatch");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= count_) {
      throw std::out_of_range("ReplayBuffer::update_priorities: index " +
                              std::to_string(indices[k]) + " not stored");
    }
    if (!std::isfinite(td_errors[k])) {
      throw std::invalid_argument("ReplayBuffer::update_priorities: non-finite TD error");
    }
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    write_leaf(indices[k], std::abs(td_errors[k]));
  }
}

std::vector<double> ReplayBuffer::per_probabilities() const {
  require_nonempty("per_probabilities");
  if (config_.mode != PriorityMode::Proportional) {
    throw std::logic_error("ReplayBuffer::per_probabilities: requires proportional mode");
  }
  std::vector<double> p(count_);
  double sum = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    p[i] = std::pow(abs_td_[i], config_.alpha) + config_.mu;
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<double> ReplayBuffer::importance_weights(std::span<const std::size_t> indices) const {
  if (config_.mode != PriorityMode::Proportional) {
    throw std::logic_error("ReplayBuffer::importance_weights: requires proportional mode");
  }
  require_nonempty("importance_weights");
  const double total = priorities_.total();
  const double n = static_cast<double>(count_);
  const double beta = config_.beta;
  // The largest raw weight belongs to the least likely stored transition.
  const double max_weight = std::pow(1.0 / (n * (min_leaf_.min() / total)), beta);
  std::vector<double> w;
  w.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= count_) throw std::out_of_range("ReplayBuffer::importance_weights: index not stored");
    const double p = priorities_.get(i) / total;
    w.push_back(std::min(1.0, std::pow(1.0 / (n * p), beta) / max_weight));
  }
  return w;
}

double ReplayBuffer::sampling_probability(std::size_t index) const {
  require_nonempty("sampling_probability");
  if (index >= count_) throw std::out_of_range("ReplayBuffer::sampling_probability");
  return priorities_.get(index) / priorities_.total();
}

double ReplayBuffer::abs_td(std::size_t index) const {
  if (index >= count_) throw std::out_of_range("ReplayBuffer::abs_td: index not stored");
  return abs_td_[index];
}

Transition ReplayBuffer::get(std::size_t index) const {
  if (index >= count_) throw std::out_of_range("ReplayBuffer::get: index not stored");
  const auto i = static_cast<Eigen::Index>(index);
  return Transition{states_.col(i), actions_.col(i), rewards_[index], next_states_.col(i),
                    dones_[index] != 0};
}

void ReplayBuffer::set_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("ReplayBuffer::set_beta: beta must lie in [0, 1]");
  }
  config_.beta = beta;
}

void ReplayBuffer::write_priority_csv(std::ostream& out) const {
  out << "index,abs_td,raw_priority,inverse_priority\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < count_; ++i) {
    out << i << ',' << abs_td_[i] << ',' << priorities_.get(i) << ',' << inverse_.get(i) << '\n';
  }
}

}  // namespace la3p
