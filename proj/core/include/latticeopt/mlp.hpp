#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace latticeopt {

/// Fully connected layer: out = W in + b, W is (outputs x inputs).
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// ReLU on hidden layers, identity on the scalar output.
class Mlp {
public:
  Mlp() = default;
  /// Throws std::invalid_argument unless the layer shapes chain and end in 1 output.
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Uniform weights in +-sqrt(6 / fan_in), zero biases. Same seed, same model.
  static Mlp init(std::span<const int> dims, std::uint64_t seed);

  /// [input, hidden..., 1]
  std::vector<int> dims() const;
  int input_dim() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Throws std::invalid_argument if x.size() != input_dim().
  double forward(std::span<const double> x) const;
  /// One sample per column; returns one prediction per column.
  Eigen::RowVectorXd forward_batch(const Eigen::MatrixXd& inputs) const;

private:
  std::vector<DenseLayer> layers_;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
  /// Batch MSE at the current parameters.
  double loss = 0.0;
};

/// Exact gradient of mean((f(x) - y)^2) over the batch columns. The ReLU
/// derivative at 0 is taken as 0. Throws std::invalid_argument on an empty
/// batch or shape mismatch.
MlpGradients mse_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);

/// Mean squared error, evaluated in column chunks.
double mse(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected first and second moments.
class Adam {
public:
  Adam(const Mlp& net, AdamConfig config);

  void step(Mlp& net, const MlpGradients& grads);
  std::int64_t steps() const { return t_; }

private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
};

}  // namespace latticeopt
