#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "la3p/random.hpp"
#include "la3p/sum_tree.hpp"

namespace la3p {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

/// A mini-batch laid out column-wise: column k of each matrix is sample k.
struct SampleBatch {
  std::vector<std::size_t> indices;
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::RowVectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::RowVectorXd dones;  // 1.0 for terminal transitions
  std::vector<double> weights;

  std::size_t size() const { return indices.size(); }
  Transition transition(std::size_t k) const;
};

/// How TD errors are turned into sampling priorities.
enum class PriorityMode {
  /// Loss-adjusted: leaf = max(|delta|^alpha, 1). No importance weights.
  Clipped,
  /// Classic proportional: leaf = |delta|^alpha + mu, with importance weights.
  Proportional,
};

struct ReplayConfig {
  std::size_t capacity = 100000;
  std::size_t state_dim = 1;
  std::size_t action_dim = 1;
  PriorityMode mode = PriorityMode::Clipped;
  double alpha = 0.4;
  double beta = 0.4;
  double mu = 1e-4;
};

/// Linear importance-sampling exponent schedule from beta0 to 1.
struct BetaSchedule {
  double beta0 = 0.4;
  std::size_t total_steps = 1;

  double at(std::size_t step) const;
};

namespace detail {

/// Min segment tree over the same leaf layout as SumTree; unset leaves are +inf.
class MinTree {
 public:
  explicit MinTree(std::size_t capacity);
  void set(std::size_t index, double value);
  double min() const { return nodes_[0]; }

 private:
  std::size_t padded_;
  std::vector<double> nodes_;
};

}  // namespace detail

/**
 * Ring-buffer experience replay with uniform, proportional, loss-adjusted
 * and inverse prioritized sampling.
 *
 * The inverse tree is a derived view of the priority tree. Every priority
 * write bumps priority_version(); sample_inverse() refuses to run until
 * rebuild_inverse() has caught up with the latest write.
 */
class ReplayBuffer {
 public:
  /// Priority given to freshly pushed transitions (before clipping/offset).
  static constexpr double kInitialPriority = 1.0;

  explicit ReplayBuffer(const ReplayConfig& config);

  void push(const Transition& transition);

  SampleBatch sample_uniform(std::size_t n, Rng& rng) const;

  /// Stratified draw on the priority tree. In Proportional mode the batch
  /// carries normalized importance weights; otherwise all weights are 1.
  SampleBatch sample_prioritized(std::size_t n, Rng& rng) const;

  /// Recompute inverse leaves max_j p_j / p_i over all stored transitions.
  void rebuild_inverse();
  SampleBatch sample_inverse(std::size_t n, Rng& rng) const;

  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

  /// Proportional-mode sampling probabilities of every stored transition.
  std::vector<double> per_probabilities() const;
  /// Proportional-mode importance weights, normalized by the buffer-wide max.
  std::vector<double> importance_weights(std::span<const std::size_t> indices) const;

  /// Sampling probability under the priority tree of one stored transition.
  double sampling_probability(std::size_t index) const;

  double priority(std::size_t index) const { return priorities_.get(index); }
  double inverse_priority(std::size_t index) const { return inverse_.get(index); }
  double abs_td(std::size_t index) const;
  Transition get(std::size_t index) const;

  void set_beta(double beta);
  double beta() const { return config_.beta; }
  double alpha() const { return config_.alpha; }
  PriorityMode mode() const { return config_.mode; }

  std::size_t count() const { return count_; }
  std::size_t capacity() const { return config_.capacity; }
  std::size_t state_dim() const { return config_.state_dim; }
  std::size_t action_dim() const { return config_.action_dim; }

  std::uint64_t priority_version() const { return priority_version_; }
  std::uint64_t inverse_version() const { return inverse_version_; }
  bool inverse_fresh() const { return inverse_built_ && inverse_version_ == priority_version_; }

  const SumTree& priority_tree() const { return priorities_; }
  const SumTree& inverse_tree() const { return inverse_; }

  /// Debug dump: index,abs_td,raw_priority,inverse_priority
  void write_priority_csv(std::ostream& out) const;

 private:
  double leaf_from_abs_td(double abs_td) const;
  void write_leaf(std::size_t index, double abs_td);
  SampleBatch gather(std::vector<std::size_t> indices) const;
  void require_nonempty(const char* op) const;

  ReplayConfig config_;
  Eigen::MatrixXd states_;
  Eigen::MatrixXd actions_;
  Eigen::MatrixXd next_states_;
  std::vector<double> rewards_;
  std::vector<char> dones_;
  std::vector<double> abs_td_;

  SumTree priorities_;
  SumTree inverse_;
  detail::MinTree min_leaf_;
  std::vector<double> inverse_scratch_;

  std::size_t write_head_ = 0;
  std::size_t count_ = 0;
  std::uint64_t priority_version_ = 0;
  std::uint64_t inverse_version_ = 0;
  bool inverse_built_ = false;
};

}  // namespace la3p
