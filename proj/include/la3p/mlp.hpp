#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "la3p/random.hpp"

namespace la3p {

enum class OutputHead {
  Linear,      // critic head
  ScaledTanh,  // actor head: output_scale * tanh(z)
};

/// Gradients (or any per-parameter quantity) shaped like an Mlp's parameters.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  MlpGrads& operator+=(const MlpGrads& other);
  MlpGrads& operator*=(double factor);
  std::vector<double> flatten() const;
  bool all_finite() const;
};

class Mlp;
struct AdamState;

/// Activations recorded by a forward pass; only valid for the net (and the
/// parameter version) that produced it.
struct ForwardCache {
  const Mlp* owner = nullptr;
  std::uint64_t version = 0;
  std::vector<Eigen::MatrixXd> inputs;       // input to each layer
  std::vector<Eigen::MatrixXd> pre_activations;
  Eigen::MatrixXd output;
};

struct BackwardResult {
  MlpGrads params;
  Eigen::MatrixXd input_grad;
};

/**
 * Fully connected network with ReLU hidden layers and hand-written reverse
 * mode. Batches are column-major: each column of the input is one sample.
 */
class Mlp {
 public:
  /// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> layer_dims, OutputHead head, double output_scale, Rng& rng);
  /// All-zero parameters.
  Mlp(std::vector<int> layer_dims, OutputHead head, double output_scale = 1.0);

  Mlp(const Mlp& other) = default;
  // Assignment bumps the version so caches taken before it go stale.
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept;
  ~Mlp() = default;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, ForwardCache& cache) const;
  BackwardResult backward(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const;

  const std::vector<int>& layer_dims() const { return dims_; }
  std::size_t num_layers() const { return weights_.size(); }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  OutputHead head() const { return head_; }
  double output_scale() const { return output_scale_; }
  std::size_t parameter_count() const;
  std::uint64_t version() const { return version_; }

  const Eigen::MatrixXd& weight(std::size_t layer) const { return weights_.at(layer); }
  const Eigen::VectorXd& bias(std::size_t layer) const { return biases_.at(layer); }
  void set_layer(std::size_t layer, const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias);

  /// Parameters in layer order: weights row-major, then biases.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

  MlpGrads zeros_like() const;

  /// Weight snapshot: one JSON header line, then little-endian float64 data
  /// in flat_parameters() order.
  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

  friend void adam_step(Mlp& net, AdamState& state, const MlpGrads& grads);
  friend void polyak_update(Mlp& target, const Mlp& source, double zeta);

 private:
  void touch() { ++version_; }
  void check_shape_matches(const Mlp& other, const char* op) const;

  std::vector<int> dims_;
  OutputHead head_;
  double output_scale_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  std::uint64_t version_ = 0;
};

struct AdamOptions {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  MlpGrads first_moment;
  MlpGrads second_moment;
  std::uint64_t step = 0;

  AdamState(const Mlp& net, AdamOptions opts);
};

/// Bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Mlp& net, AdamState& state, const MlpGrads& grads);

/// target <- zeta * source + (1 - zeta) * target
void polyak_update(Mlp& target, const Mlp& source, double zeta);

}  // namespace la3p
