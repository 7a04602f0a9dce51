#include "latticeopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include "json.hpp"

#include "latticeopt/rng.hpp"
#include "latticeopt/text_io.hpp"

namespace latticeopt {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(v[i - 1], v[j]);
  }
}

Eigen::MatrixXd full_feature_matrix(const Dataset& data, std::span<const std::size_t> rows,
                                    const FeaturePipeline& pipeline) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pipeline.full_dim()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const std::vector<double> f = full_features(data.rows[rows[c]].bits, pipeline);
    x.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  return x;
}

void check_dataset_grid(const SurrogateModel& model, const Dataset& data) {
  if (data.meta.m != model.pipeline.m && data.meta.m != 2 * model.pipeline.m) {
    throw std::invalid_argument(fmt::format("dataset m={} is incompatible with a model for m={}", data.meta.m,
                                            model.pipeline.m));
  }
}

}  // namespace

Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> rows, const FeaturePipeline& pipeline) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pipeline.selected.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const std::vector<double> f = features_for_prediction(data.rows[rows[c]].bits, pipeline);
    x.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  return x;
}

Eigen::VectorXd target_vector(const Dataset& data, std::span<const std::size_t> rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) y(static_cast<Eigen::Index>(c)) = data.rows[rows[c]].compliance;
  return y;
}

TrainResult train(const Dataset& data, const FeatureConfig& features, const TrainConfig& config) {
  if (data.rows.empty()) throw std::invalid_argument("training dataset is empty");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(config.split > 0.0 && config.split < 1.0)) throw std::invalid_argument("split fraction must be in (0, 1)");
  if (config.epochs < 0) throw std::invalid_argument("epoch count must be >= 0");
  for (const auto& row : data.rows) {
    if (row.bits.m() != data.meta.m) throw std::invalid_argument("dataset rows disagree with dataset m");
  }

  const std::size_t n = data.rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(config.seed, 0));
  shuffle(order, split_rng);
  const auto n_train = static_cast<std::size_t>(std::llround(config.split * static_cast<double>(n)));
  if (n_train < static_cast<std::size_t>(config.batch_size)) {
    throw std::invalid_argument(fmt::format("training split has {} samples, fewer than one batch of {}", n_train,
                                            config.batch_size));
  }
  if (n_train >= n) throw std::invalid_argument("split leaves no test samples");

  TrainResult result;
  result.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  result.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  FeaturePipeline pipeline;
  pipeline.m = data.meta.m;
  pipeline.n_m = features.n_m;
  pipeline.conv_weight = features.conv_weight;
  if (features.n_m != 0) FilterBank check(features.n_m);
  const std::size_t k_total = pipeline.full_dim();

  const Eigen::MatrixXd full_train = full_feature_matrix(data, result.train_rows, pipeline);
  const Eigen::VectorXd y_train = target_vector(data, result.train_rows);

  if (features.top_k) {
    result.selection = select_top_k(f_scores(full_train.transpose(), y_train), *features.top_k);
    result.selection.n = n_train;
    pipeline.selected = result.selection.selected;
    std::sort(pipeline.selected.begin(), pipeline.selected.end());
  } else {
    pipeline.selected.resize(k_total);
    std::iota(pipeline.selected.begin(), pipeline.selected.end(), 0);
    result.selection.selected = pipeline.selected;
    result.selection.k_total = k_total;
    result.selection.n = n_train;
  }

  const Eigen::MatrixXd x_train = full_train(pipeline.selected, Eigen::all);
  const Eigen::MatrixXd x_test = feature_matrix(data, result.test_rows, pipeline);
  const Eigen::VectorXd y_test = target_vector(data, result.test_rows);

  std::vector<int> dims;
  dims.push_back(static_cast<int>(pipeline.selected.size()));
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(1);
  Mlp net = Mlp::init(dims, derive_seed(config.seed, 2));
  Adam adam(net, config.adam);

  Rng batch_rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> positions(n_train);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(positions, batch_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t len = std::min(batch, n_train - start);
      const std::span<const std::size_t> idx(positions.data() + start, len);
      Eigen::MatrixXd xb(x_train.rows(), static_cast<Eigen::Index>(len));
      Eigen::VectorXd yb(static_cast<Eigen::Index>(len));
      for (std::size_t b = 0; b < len; ++b) {
        xb.col(static_cast<Eigen::Index>(b)) = x_train.col(static_cast<Eigen::Index>(idx[b]));
        yb(static_cast<Eigen::Index>(b)) = y_train(static_cast<Eigen::Index>(idx[b]));
      }
      const MlpGradients g = mse_gradients(net, xb, yb);
      loss_sum += g.loss * static_cast<double>(len);
      adam.step(net, g);
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(n_train), mse(net, x_test, y_test)});
  }

  result.model = SurrogateModel{std::move(pipeline), std::move(net)};
  return result;
}

double predict(const SurrogateModel& model, const UnitTopology& x) {
  return model.net.forward(features_for_prediction(x, model.pipeline));
}

std::vector<double> predict_batch(const SurrogateModel& model, std::span<const UnitTopology> xs) {
  Eigen::MatrixXd inputs(model.net.input_dim(), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t c = 0; c < xs.size(); ++c) {
    const std::vector<double> f = features_for_prediction(xs[c], model.pipeline);
    if (static_cast<Eigen::Index>(f.size()) != inputs.rows()) {
      throw std::invalid_argument("model feature selection does not match network input");
    }
    inputs.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  const Eigen::RowVectorXd pred = xs.empty() ? Eigen::RowVectorXd() : model.net.forward_batch(inputs);
  return {pred.data(), pred.data() + pred.size()};
}

double evaluate_mse(const SurrogateModel& model, const Dataset& data) {
  std::vector<std::size_t> rows(data.rows.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return evaluate_mse(model, data, rows);
}

double evaluate_mse(const SurrogateModel& model, const Dataset& data, std::span<const std::size_t> rows) {
  check_dataset_grid(model, data);
  if (rows.empty()) throw std::invalid_argument("no rows to evaluate");
  return mse(model.net, feature_matrix(data, rows, model.pipeline), target_vector(data, rows));
}

void save_model(std::ostream& out, const SurrogateModel& model) {
  const auto& p = model.pipeline;
  fmt::memory_buffer buf;
  auto it = std::back_inserter(buf);
  fmt::format_to(it, "{{\n  \"format_version\": {},\n  \"m\": {},\n  \"n_m\": {},\n  \"conv_weight\": {},\n",
                 kModelFormatVersion, p.m, p.n_m, format_real(p.conv_weight));
  fmt::format_to(it, "  \"selected_indices\": [{}],\n", fmt::join(p.selected, ", "));
  fmt::format_to(it, "  \"layer_dims\": [{}],\n  \"layers\": [\n", fmt::join(model.net.dims(), ", "));
  const auto& layers = model.net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    fmt::format_to(it, "    {{\n      \"weights\": [");
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        fmt::format_to(it, "{}{:.17g}", (r == 0 && c == 0) ? "" : ",", w(r, c));
      }
    }
    fmt::format_to(it, "],\n      \"biases\": [");
    for (Eigen::Index r = 0; r < layers[l].bias.size(); ++r) {
      fmt::format_to(it, "{}{:.17g}", r == 0 ? "" : ",", layers[l].bias(r));
    }
    fmt::format_to(it, "]\n    }}{}\n", l + 1 < layers.size() ? "," : "");
  }
  fmt::format_to(it, "  ]\n}}\n");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void save_model(const std::filesystem::path& path, const SurrogateModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(out, model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SurrogateModel load_model(std::istream& in, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, std::string("malformed model JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError(source, 0, fmt::format("unsupported format_version {} (expected {})", version, kModelFormatVersion));
    }
    SurrogateModel model;
    model.pipeline.m = j.at("m").get<int>();
    model.pipeline.n_m = j.at("n_m").get<int>();
    model.pipeline.conv_weight = j.at("conv_weight").get<double>();
    model.pipeline.selected = j.at("selected_indices").get<std::vector<int>>();
    if (model.pipeline.m < 1) throw ParseError(source, 0, "model m must be >= 1");
    if (model.pipeline.n_m != 0) FilterBank check(model.pipeline.n_m);
    const auto full = static_cast<int>(model.pipeline.full_dim());
    for (int idx : model.pipeline.selected) {
      if (idx < 0 || idx >= full) throw ParseError(source, 0, fmt::format("selected index {} out of range", idx));
    }

    const auto dims = j.at("layer_dims").get<std::vector<int>>();
    const auto& layers_json = j.at("layers");
    if (dims.size() < 2 || layers_json.size() + 1 != dims.size()) {
      throw ParseError(source, 0, "layer_dims does not match the number of layers");
    }
    if (dims.front() != static_cast<int>(model.pipeline.selected.size())) {
      throw ParseError(source, 0, "input dimension does not match selected_indices");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < layers_json.size(); ++l) {
      const auto w = layers_json[l].at("weights").get<std::vector<double>>();
      const auto b = layers_json[l].at("biases").get<std::vector<double>>();
      const int rows = dims[l + 1];
      const int cols = dims[l];
      if (rows < 1 || cols < 1 || w.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
          b.size() != static_cast<std::size_t>(rows)) {
        throw ParseError(source, 0, fmt::format("layer {} has the wrong number of parameters", l));
      }
      DenseLayer layer;
      layer.weights =
          Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), rows, cols);
      layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
      layers.push_back(std::move(layer));
    }
    model.net = Mlp(std::move(layers));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, std::string("invalid model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, std::string("invalid model file: ") + e.what());
  }
}

SurrogateModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return load_model(in, path.string());
}

void save_loss_history(std::ostream& out, std::span<const EpochLoss> history) {
  out << "epoch,train_mse,test_mse\n";
  for (const auto& e : history) out << e.epoch << ',' << format_real(e.train_mse) << ',' << format_real(e.test_mse) << '\n';
}

void save_loss_history(const std::filesystem::path& path, std::span<const EpochLoss> history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_loss_history(out, history);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace latticeopt
