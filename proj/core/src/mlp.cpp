#include "latticeopt/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "latticeopt/rng.hpp"

namespace latticeopt {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weights.rows() != layer.bias.size() || layer.weights.rows() < 1 || layer.weights.cols() < 1) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has inconsistent weight/bias shapes");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(l) + " input does not match previous output");
    }
  }
  if (layers_.back().weights.rows() != 1) throw std::invalid_argument("network must have a single output");
}

Mlp Mlp::init(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("network needs input and output dimensions");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("layer dimensions must be positive");
  }
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / fan_in);
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    // Row-major fill so the draw order matches the serialized order.
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(static_cast<int>(layers_.front().weights.cols()));
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weights.rows()));
  return d;
}

int Mlp::input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols()); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

double Mlp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(x.size()) + " features, network expects " +
                                std::to_string(input_dim()));
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * a + layers_[l].bias;
    a = (l + 1 < layers_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a(0);
}

Eigen::RowVectorXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim()) throw std::invalid_argument("batch feature dimension does not match network");
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a.row(0);
}

MlpGradients mse_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  const Eigen::Index batch = inputs.cols();
  if (batch == 0) throw std::invalid_argument("empty batch");
  if (targets.size() != batch) throw std::invalid_argument("target count does not match batch size");
  if (inputs.rows() != net.input_dim()) throw std::invalid_argument("batch feature dimension does not match network");

  const auto& layers = net.layers();
  const std::size_t n_layers = layers.size();
  // activations[0] is the input; activations[l + 1] the output of layer l.
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(n_layers + 1);
  activations.push_back(inputs);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = layers[l].weights * activations.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < n_layers) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }

  const Eigen::RowVectorXd residual = activations.back().row(0) - targets.transpose();
  MlpGradients g;
  g.loss = residual.squaredNorm() / static_cast<double>(batch);
  g.weights.resize(n_layers);
  g.bias.resize(n_layers);

  Eigen::MatrixXd delta = (2.0 / static_cast<double>(batch)) * residual;
  for (std::size_t l = n_layers; l-- > 0;) {
    g.weights[l].noalias() = delta * activations[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
    // A ReLU output of exactly 0 means z <= 0, where the subgradient is 0.
    delta = back.cwiseProduct((activations[l].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

double mse(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  if (inputs.cols() != targets.size()) throw std::invalid_argument("target count does not match sample count");
  if (inputs.cols() == 0) throw std::invalid_argument("no samples");
  constexpr Eigen::Index kChunk = 1024;
  double sum = 0.0;
  for (Eigen::Index start = 0; start < inputs.cols(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, inputs.cols() - start);
    const Eigen::RowVectorXd pred = net.forward_batch(inputs.middleCols(start, len));
    sum += (pred - targets.segment(start, len).transpose()).squaredNorm();
  }
  return sum / static_cast<double>(inputs.cols());
}

Adam::Adam(const Mlp& net, AdamConfig config) : config_(config) {
  for (const auto& l : net.layers()) {
    m_w_.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    v_w_.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    m_b_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    v_b_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
}

void Adam::step(Mlp& net, const MlpGradients& grads) {
  auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || layers.size() != m_w_.size()) {
    throw std::invalid_argument("gradient does not match optimizer state");
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, m_w_[l], v_w_[l], grads.weights[l]);
    update(layers[l].bias, m_b_[l], v_b_[l], grads.bias[l]);
  }
}

}  // namespace latticeopt
