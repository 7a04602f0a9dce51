#include "latticeopt/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace latticeopt {
namespace {

void combinations(int n, int k, int start, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == k) {
    out.push_back(current);
    return;
  }
  for (int i = start; i < n; ++i) {
    current.push_back(i);
    combinations(n, k, i + 1, current, out);
    current.pop_back();
  }
}

template <typename Value>
SubregionMatrix assemble(int m, Value&& value) {
  SubregionMatrix x0(static_cast<Eigen::Index>(m) * m, kSubregionSize);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto members = incident_members(m, i, j);
      const Eigen::Index row = static_cast<Eigen::Index>(j) * m + i;
      for (int s = 0; s < kSubregionSize; ++s) x0(row, s) = value(members[static_cast<std::size_t>(s)]);
    }
  }
  return x0;
}

std::vector<double> flatten(const Eigen::MatrixXd& x) {
  std::vector<double> out(static_cast<std::size_t>(x.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out.data(), x.rows(), x.cols()) = x;
  return out;
}

}  // namespace

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

FilterBank::FilterBank(int n_m) : n_m_(n_m) {
  if (n_m < 2 || n_m >= kSubregionSize) {
    throw std::invalid_argument("filter combination size must satisfy 2 <= n_m < 8, got " + std::to_string(n_m));
  }
  std::vector<int> current;
  combinations(kSubregionSize, n_m, 0, current, combinations_);
  matrix_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(combinations_.size()), kSubregionSize);
  for (std::size_t r = 0; r < combinations_.size(); ++r) {
    for (int c : combinations_[r]) matrix_(static_cast<Eigen::Index>(r), c) = 1.0;
  }
}

SubregionMatrix subregion_matrix(const UnitTopology& x) {
  return assemble(x.m(), [&](std::size_t k) { return x[k] ? 1.0 : 0.0; });
}

SubregionMatrix subregion_matrix(const ChannelArray& a) {
  return assemble(a.m, [&](std::size_t k) { return a.values[k]; });
}

std::vector<double> hard_filter(const SubregionMatrix& x0, const FilterBank& bank) {
  if (!(x0.array() == 0.0 || x0.array() == 1.0).all()) {
    throw std::invalid_argument("hard filter needs a binary subregion matrix");
  }
  const Eigen::MatrixXd sums = x0 * bank.matrix().transpose();
  const double n_m = bank.n_m();
  return flatten(sums.unaryExpr([n_m](double s) { return std::floor(s / n_m); }));
}

double soft_step(double pair_sum, int n_m) { return 1.0 / (1.0 + std::exp(-10.0 * (pair_sum - 0.75 * n_m))); }

std::vector<double> soft_filter(const SubregionMatrix& x0, const FilterBank& bank) {
  const Eigen::MatrixXd sums = x0 * bank.matrix().transpose();
  const int n_m = bank.n_m();
  return flatten(sums.unaryExpr([n_m](double s) { return soft_step(s, n_m); }));
}

ChannelArray coarsen(const ChannelArray& a, double weight) {
  if (a.m < 2 || a.m % 2 != 0) {
    throw std::invalid_argument("coarsening needs an even grid size, got " + std::to_string(a.m));
  }
  if (a.values.size() != static_cast<std::size_t>(kChannels) * a.m * a.m) {
    throw std::invalid_argument("channel array shape does not match its grid size");
  }
  const int m = a.m / 2;
  ChannelArray out(m);
  for (int c = 0; c < kChannels; ++c) {
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const double sum = a.at(c, 2 * j, 2 * i) + a.at(c, 2 * j, 2 * i + 1) + a.at(c, 2 * j + 1, 2 * i) +
                           a.at(c, 2 * j + 1, 2 * i + 1);
        out.at(c, j, i) = weight * sum;
      }
    }
  }
  return out;
}

std::vector<double> f_scores(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) {
  const Eigen::Index n = features.rows();
  const Eigen::Index k = features.cols();
  if (n < 3) throw std::invalid_argument("F-statistic needs at least 3 samples");
  if (targets.size() != n) throw std::invalid_argument("feature rows and target count differ");
  if (k < 1) throw std::invalid_argument("no features to score");
  const double dof = static_cast<double>(n - k - 1) / static_cast<double>(k);
  if (!(dof > 0.0)) {
    throw std::invalid_argument("F-statistic needs more samples than features + 1 (n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ")");
  }

  const Eigen::VectorXd y = targets.array() - targets.mean();
  const double syy = y.squaredNorm();
  const Eigen::RowVectorXd means = features.colwise().mean();

  std::vector<double> scores(static_cast<std::size_t>(k), 0.0);
  constexpr double kMaxR2 = 1.0 - 1e-12;
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd xc = features.col(c).array() - means(c);
    const double sxx = xc.squaredNorm();
    if (sxx == 0.0 || syy == 0.0) continue;
    const double sxy = xc.dot(y);
    const double r2 = std::min(sxy * sxy / (sxx * syy), kMaxR2);
    scores[static_cast<std::size_t>(c)] = r2 / (1.0 - r2) * dof;
  }
  return scores;
}

SelectionResult select_top_k(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size()) {
    throw std::out_of_range("cannot select " + std::to_string(k) + " of " + std::to_string(scores.size()) +
                            " features");
  }
  SelectionResult r;
  r.scores.assign(scores.begin(), scores.end());
  r.k_total = scores.size();
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  order.resize(k);
  r.selected = std::move(order);
  return r;
}

std::size_t FeaturePipeline::full_dim() const {
  const auto nodes = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
  return filtered() ? nodes * binomial(kSubregionSize, n_m) : static_cast<std::size_t>(kChannels) * nodes;
}

std::vector<double> full_features(const UnitTopology& x, const FeaturePipeline& pipeline) {
  if (x.m() == pipeline.m) {
    if (!pipeline.filtered()) {
      std::vector<double> raw(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) raw[k] = x[k] ? 1.0 : 0.0;
      return raw;
    }
    return hard_filter(subregion_matrix(x), FilterBank(pipeline.n_m));
  }
  if (x.m() == 2 * pipeline.m) {
    const ChannelArray coarse = coarsen(to_channel_array(x), pipeline.conv_weight);
    if (!pipeline.filtered()) return coarse.values;
    return soft_filter(subregion_matrix(coarse), FilterBank(pipeline.n_m));
  }
  throw std::invalid_argument("topology m=" + std::to_string(x.m()) + " is incompatible with a model for m=" +
                              std::to_string(pipeline.m) + " (expected m or 2m)");
}

std::vector<double> features_for_prediction(const UnitTopology& x, const FeaturePipeline& pipeline) {
  const std::vector<double> full = full_features(x, pipeline);
  std::vector<double> out;
  out.reserve(pipeline.selected.size());
  for (int idx : pipeline.selected) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= full.size()) {
      throw std::invalid_argument("selected feature index " + std::to_string(idx) + " out of range");
    }
    out.push_back(full[static_cast<std::size_t>(idx)]);
  }
  return out;
}

}  // namespace latticeopt
