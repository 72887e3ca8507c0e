#include "la3p/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace la3p {

MlpGrads& MlpGrads::operator+=(const MlpGrads& other) {
  if (other.weights.size() != weights.size()) {
    throw std::invalid_argument("MlpGrads: layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

MlpGrads& MlpGrads::operator*=(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : biases) b *= factor;
  return *this;
}

std::vector<double> MlpGrads::flatten() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
  }
  return out;
}

bool MlpGrads::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

namespace {

void validate_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("Mlp: layer dimensions must be positive");
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_dims, OutputHead head, double output_scale)
    : dims_(std::move(layer_dims)), head_(head), output_scale_(output_scale) {
  validate_dims(dims_);
  if (!(output_scale_ > 0.0)) throw std::invalid_argument("Mlp: output scale must be positive");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(dims_[l + 1], dims_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(dims_[l + 1]));
  }
}

Mlp::Mlp(std::vector<int> layer_dims, OutputHead head, double output_scale, Rng& rng)
    : Mlp(std::move(layer_dims), head, output_scale) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::uniform_real_distribution<double> init(-bound, bound);
    auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = init(rng);
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = init(rng);
  }
}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    const auto next = std::max(version_, other.version_) + 1;
    dims_ = other.dims_;
    head_ = other.head_;
    output_scale_ = other.output_scale_;
    weights_ = other.weights_;
    biases_ = other.biases_;
    version_ = next;
  }
  return *this;
}

Mlp& Mlp::operator=(Mlp&& other) noexcept {
  if (this != &other) {
    const auto next = std::max(version_, other.version_) + 1;
    dims_ = std::move(other.dims_);
    head_ = other.head_;
    output_scale_ = other.output_scale_;
    weights_ = std::move(other.weights_);
    biases_ = std::move(other.biases_);
    version_ = next;
  }
  return *this;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  ForwardCache scratch;
  return forward(input, scratch);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, ForwardCache& cache) const {
  if (input.rows() != dims_.front()) {
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.rows()) +
                                " rows, expected " + std::to_string(dims_.front()));
  }
  cache.owner = this;
  cache.version = version_;
  cache.inputs.resize(weights_.size());
  cache.pre_activations.resize(weights_.size());

  Eigen::MatrixXd activation = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    cache.inputs[l] = std::move(activation);
    Eigen::MatrixXd z = weights_[l] * cache.inputs[l];
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) {
      activation = z.cwiseMax(0.0);
    } else if (head_ == OutputHead::ScaledTanh) {
      activation = output_scale_ * z.array().tanh();
    } else {
      activation = z;
    }
    cache.pre_activations[l] = std::move(z);
  }
  cache.output = activation;
  return activation;
}

BackwardResult Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.inputs.size() != weights_.size()) {
    throw std::logic_error("Mlp::backward: cache is stale or belongs to another network");
  }
  if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols()) {
    throw std::invalid_argument("Mlp::backward: output gradient shape mismatch");
  }

  BackwardResult res;
  res.params.weights.resize(weights_.size());
  res.params.biases.resize(weights_.size());

  Eigen::MatrixXd dz;
  if (head_ == OutputHead::ScaledTanh) {
    const auto t = cache.pre_activations.back().array().tanh();
    dz = (output_grad.array() * output_scale_ * (1.0 - t.square())).matrix();
  } else {
    dz = output_grad;
  }

  for (std::size_t l = weights_.size(); l-- > 0;) {
    res.params.weights[l].noalias() = dz * cache.inputs[l].transpose();
    res.params.biases[l] = dz.rowwise().sum();
    Eigen::MatrixXd da = weights_[l].transpose() * dz;
    if (l == 0) {
      res.input_grad = std::move(da);
    } else {
      dz = (da.array() * (cache.pre_activations[l - 1].array() > 0.0).cast<double>()).matrix();
    }
  }
  return res;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    n += static_cast<std::size_t>(dims_[l]) * static_cast<std::size_t>(dims_[l + 1]) +
         static_cast<std::size_t>(dims_[l + 1]);
  }
  return n;
}

void Mlp::set_layer(std::size_t layer, const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias) {
  if (layer >= weights_.size() || weight.rows() != weights_[layer].rows() ||
      weight.cols() != weights_[layer].cols() || bias.size() != biases_[layer].size()) {
    throw std::invalid_argument("Mlp::set_layer: shape mismatch");
  }
  weights_[layer] = weight;
  biases_[layer] = bias;
  touch();
}

std::vector<double> Mlp::flat_parameters() const {
  MlpGrads view{weights_, biases_};
  return view.flatten();
}

void Mlp::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw std::invalid_argument("Mlp::set_flat_parameters: expected " +
                                std::to_string(parameter_count()) + " values");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = values[k++];
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = values[k++];
  }
  touch();
}

MlpGrads Mlp::zeros_like() const {
  MlpGrads g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

void Mlp::check_shape_matches(const Mlp& other, const char* op) const {
  if (dims_ != other.dims_) {
    throw std::invalid_argument(std::string(op) + ": network shapes differ");
  }
}

namespace {

constexpr const char* kSnapshotFormat = "la3p-mlp-f64le";

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(bits);
  return bits;
}

}  // namespace

void Mlp::save(std::ostream& out) const {
  const auto params = flat_parameters();
  nlohmann::json header = {
      {"format", kSnapshotFormat},
      {"layer_dims", dims_},
      {"head", head_ == OutputHead::Linear ? "linear" : "scaled_tanh"},
      {"output_scale", output_scale_},
      {"count", params.size()},
  };
  out << header.dump() << '\n';
  for (double v : params) {
    std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  if (!out) throw std::runtime_error("Mlp::save: write failed");
}

Mlp Mlp::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("Mlp::load: missing header");
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != kSnapshotFormat) {
    throw std::runtime_error("Mlp::load: unknown snapshot format");
  }
  const auto dims = header.at("layer_dims").get<std::vector<int>>();
  const auto head_name = header.at("head").get<std::string>();
  const OutputHead head = head_name == "linear" ? OutputHead::Linear : OutputHead::ScaledTanh;
  Mlp net(dims, head, header.at("output_scale").get<double>());

  const auto count = header.at("count").get<std::size_t>();
  if (count != net.parameter_count()) {
    throw std::runtime_error("Mlp::load: parameter count does not match layer dims");
  }
  std::vector<double> params(count);
  for (auto& v : params) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
    if (!in) throw std::runtime_error("Mlp::load: truncated parameter data");
    v = std::bit_cast<double>(to_little_endian(bits));
  }
  net.set_flat_parameters(params);
  return net;
}

AdamState::AdamState(const Mlp& net, AdamOptions opts)
    : options(opts), first_moment(net.zeros_like()), second_moment(net.zeros_like()) {}

void adam_step(Mlp& net, AdamState& state, const MlpGrads& grads) {
  if (grads.weights.size() != net.weights_.size() ||
      state.first_moment.weights.size() != net.weights_.size()) {
    throw std::invalid_argument("adam_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    if (grads.weights[l].rows() != net.weights_[l].rows() ||
        grads.weights[l].cols() != net.weights_[l].cols() ||
        grads.biases[l].size() != net.biases_[l].size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
  }
  if (!grads.all_finite()) throw std::invalid_argument("adam_step: non-finite gradient");

  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);

  auto apply = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    param.array() -= o.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
  };
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    apply(net.weights_[l], state.first_moment.weights[l], state.second_moment.weights[l],
          grads.weights[l]);
    apply(net.biases_[l], state.first_moment.biases[l], state.second_moment.biases[l],
          grads.biases[l]);
  }
  net.touch();
}

void polyak_update(Mlp& target, const Mlp& source, double zeta) {
  target.check_shape_matches(source, "polyak_update");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("polyak_update: zeta not in [0, 1]");
  for (std::size_t l = 0; l < target.weights_.size(); ++l) {
    target.weights_[l] = zeta * source.weights_[l] + (1.0 - zeta) * target.weights_[l];
    target.biases_[l] = zeta * source.biases_[l] + (1.0 - zeta) * target.biases_[l];
  }
  target.touch();
}

}  // namespace la3p
