#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latticeopt/dataset.hpp"
#include "latticeopt/features.hpp"
#include "latticeopt/mlp.hpp"

namespace latticeopt {

inline constexpr std::array<int, 3> kDefaultHiddenLayers{900, 600, 300};
inline constexpr int kModelFormatVersion = 1;

/// Compliance regressor: feature pipeline metadata plus network weights.
struct SurrogateModel {
  FeaturePipeline pipeline;
  Mlp net;
};

struct FeatureConfig {
  /// Filter combination size; 0 feeds raw member bits.
  int n_m = 2;
  /// Number of features kept after F-statistic ranking; all when unset.
  std::optional<std::size_t> top_k;
  double conv_weight = 0.25;
};

struct TrainConfig {
  int batch_size = 200;
  int epochs = 100;
  AdamConfig adam;
  double split = 0.75;
  std::uint64_t seed = 0;
  std::vector<int> hidden{kDefaultHiddenLayers.begin(), kDefaultHiddenLayers.end()};
};

struct EpochLoss {
  int epoch = 0;
  /// Sample-weighted mean of the minibatch losses seen during the epoch.
  double train_mse = 0.0;
  /// Held-out MSE after the epoch.
  double test_mse = 0.0;
};

struct TrainResult {
  SurrogateModel model;
  std::vector<EpochLoss> history;
  SelectionResult selection;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Dense design matrix, one sample per column, for the given rows.
Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> rows, const FeaturePipeline& pipeline);
Eigen::VectorXd target_vector(const Dataset& data, std::span<const std::size_t> rows);

/// Seeded split, F-statistic selection on the training rows only, then
/// minibatch Adam on the raw compliance targets.
/// Throws std::invalid_argument if the training split is smaller than one batch.
TrainResult train(const Dataset& data, const FeatureConfig& features, const TrainConfig& config);

/// Throws std::invalid_argument unless x.m() is the model's m or 2m.
double predict(const SurrogateModel& model, const UnitTopology& x);
std::vector<double> predict_batch(const SurrogateModel& model, std::span<const UnitTopology> xs);

/// MSE of the model over every row (or the given rows) of a dataset.
double evaluate_mse(const SurrogateModel& model, const Dataset& data);
double evaluate_mse(const SurrogateModel& model, const Dataset& data, std::span<const std::size_t> rows);

/// JSON with 17-digit reals. load throws ParseError on malformed input or an
/// unsupported format_version.
void save_model(std::ostream& out, const SurrogateModel& model);
void save_model(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_model(std::istream& in, const std::string& source = "<stream>");
SurrogateModel load_model(const std::filesystem::path& path);

/// CSV "epoch,train_mse,test_mse".
void save_loss_history(std::ostream& out, std::span<const EpochLoss> history);
void save_loss_history(const std::filesystem::path& path, std::span<const EpochLoss> history);

}  // namespace latticeopt
