#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "latticeopt/lattice.hpp"

namespace latticeopt {

/// One row per periodic node (j*m + i), columns in incident_members order.
using SubregionMatrix = Eigen::Matrix<double, Eigen::Dynamic, kSubregionSize, Eigen::RowMajor>;

/// All 8-bit masks with exactly n_m ones, ordered lexicographically by their
/// ascending index tuples: (0,1), (0,2), ..., (6,7) for n_m = 2.
class FilterBank {
public:
  /// Throws std::invalid_argument unless 2 <= n_m < 8.
  explicit FilterBank(int n_m);

  int n_m() const { return n_m_; }
  std::size_t size() const { return combinations_.size(); }
  const std::vector<int>& combination(std::size_t row) const { return combinations_[row]; }
  /// The C(8, n_m) x 8 binary matrix C.
  const Eigen::MatrixXd& matrix() const { return matrix_; }

private:
  int n_m_;
  std::vector<std::vector<int>> combinations_;
  Eigen::MatrixXd matrix_;
};

std::size_t binomial(int n, int k);

SubregionMatrix subregion_matrix(const UnitTopology& x);
/// Same assembly applied to real-valued channel entries.
SubregionMatrix subregion_matrix(const ChannelArray& a);

/// floor(X0 C^T / n_m), flattened subregion-major. Entry is 1 iff every member
/// of the combination is present. Throws std::invalid_argument on non-binary X0.
std::vector<double> hard_filter(const SubregionMatrix& x0, const FilterBank& bank);

/// Sigmoid relaxation of the hard filter.
double soft_step(double pair_sum, int n_m);
/// soft_step(X0 C^T) elementwise, flattened subregion-major.
std::vector<double> soft_filter(const SubregionMatrix& x0, const FilterBank& bank);

/// Channel-preserving 2x2 stride-2 convolution with a uniform kernel weight.
/// Throws std::invalid_argument if the grid size is odd.
ChannelArray coarsen(const ChannelArray& a, double weight);

/// Univariate F-statistic per feature column: r^2 / (1 - r^2) * (n - k - 1) / k
/// with r the Pearson correlation against the targets. Constant columns score 0;
/// r^2 is clamped to 1 - 1e-12. Throws std::invalid_argument if n < 3, if the
/// shapes disagree or if n - k - 1 <= 0.
std::vector<double> f_scores(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets);

struct SelectionResult {
  std::vector<double> scores;
  /// Descending score, ascending index on ties.
  std::vector<int> selected;
  std::size_t n = 0;
  std::size_t k_total = 0;
};

/// Throws std::out_of_range unless 1 <= k <= scores.size().
SelectionResult select_top_k(std::span<const double> scores, std::size_t k);

/// How a topology becomes a network input. n_m == 0 feeds raw member bits.
struct FeaturePipeline {
  int m = 0;
  int n_m = 2;
  double conv_weight = 0.25;
  std::vector<int> selected;

  bool filtered() const { return n_m > 0; }
  /// Length before selection: m^2 C(8, n_m), or 4 m^2 unfiltered.
  std::size_t full_dim() const;
};

/// Unselected feature vector. x.m() == m uses the hard filter on the bits;
/// x.m() == 2m coarsens the channel array and applies the soft filter.
/// Throws std::invalid_argument for any other resolution.
std::vector<double> full_features(const UnitTopology& x, const FeaturePipeline& pipeline);

/// full_features projected onto pipeline.selected.
std::vector<double> features_for_prediction(const UnitTopology& x, const FeaturePipeline& pipeline);

}  // namespace latticeopt
