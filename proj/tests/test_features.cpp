#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "latticeopt/features.hpp"
#include "test_util.hpp"

using namespace latticeopt;
using latticeopt::testing::random_topology;

TEST_SUITE_BEGIN("features");

namespace {

// Pearson r^2 by the textbook two-pass formula.
double r_squared(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return sab * sab / (saa * sbb);
}

std::vector<int> ranking(const std::vector<double>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
  return idx;
}

}  // namespace

TEST_CASE("filter bank enumerates combinations lexicographically") {
  const FilterBank b2(2);
  CHECK(b2.size() == 28);
  CHECK(b2.combination(0) == std::vector<int>{0, 1});
  CHECK(b2.combination(1) == std::vector<int>{0, 2});
  CHECK(b2.combination(27) == std::vector<int>{6, 7});
  CHECK(b2.matrix().rows() == 28);
  CHECK(b2.matrix().rowwise().sum().minCoeff() == 2.0);
  CHECK(FilterBank(3).size() == 56);
  CHECK(FilterBank(7).size() == 8);
  CHECK_THROWS_AS(FilterBank(1), std::invalid_argument);
  CHECK_THROWS_AS(FilterBank(8), std::invalid_argument);
  CHECK(binomial(8, 4) == 70);
}

TEST_CASE("subregion matrix") {
  const SubregionMatrix g = subregion_matrix(UnitTopology::ground(4));
  CHECK(g.rows() == 16);
  CHECK(g.minCoeff() == 1.0);
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const UnitTopology x = random_topology(4, rng);
    const SubregionMatrix s = subregion_matrix(x);
    CHECK(s.sum() == doctest::Approx(2.0 * static_cast<double>(x.count())));
    for (int node = 0; node < 16; ++node) {
      const auto inc = incident_members(4, node % 4, node / 4);
      for (int k = 0; k < kSubregionSize; ++k) CHECK(s(node, k) == (x[inc[k]] ? 1.0 : 0.0));
    }
    const SubregionMatrix sr = subregion_matrix(to_channel_array(x));
    CHECK(sr == s);
  }
}

TEST_CASE("hard filter equals the AND of each combination") {
  Rng rng(12);
  for (int n_m : {2, 3, 5}) {
    const FilterBank bank(n_m);
    for (int t = 0; t < 50; ++t) {
      const UnitTopology x = random_topology(4, rng, 0.6);
      const SubregionMatrix s = subregion_matrix(x);
      const std::vector<double> f = hard_filter(s, bank);
      REQUIRE(f.size() == 16 * bank.size());
      for (int node = 0; node < 16; ++node) {
        for (std::size_t c = 0; c < bank.size(); ++c) {
          bool all = true;
          for (int member : bank.combination(c)) all = all && s(node, member) == 1.0;
          CHECK(f[node * bank.size() + c] == (all ? 1.0 : 0.0));
        }
      }
    }
  }
}

TEST_CASE("hard filter on single rows") {
  const FilterBank bank(2);
  SubregionMatrix row(1, 8);
  row.setOnes();
  auto f = hard_filter(row, bank);
  CHECK(std::count(f.begin(), f.end(), 1.0) == 28);
  row.setZero();
  row(0, 4) = 1.0;
  f = hard_filter(row, bank);
  CHECK(std::count(f.begin(), f.end(), 1.0) == 0);
  row(0, 4) = 0.0;
  row(0, 0) = row(0, 1) = 1.0;
  f = hard_filter(row, bank);
  CHECK(f[0] == 1.0);
  CHECK(std::count(f.begin(), f.end(), 1.0) == 1);
  row(0, 2) = 0.5;
  CHECK_THROWS_AS(hard_filter(row, bank), std::invalid_argument);
}

TEST_CASE("soft step values") {
  CHECK(soft_step(2.0, 2) == doctest::Approx(0.993307).epsilon(1e-6));
  CHECK(soft_step(1.0, 2) == doctest::Approx(0.006693).epsilon(1e-4));
  CHECK(soft_step(1.5, 2) == 0.5);
  CHECK(soft_step(2.25, 3) == 0.5);
  CHECK(soft_step(2.0, 2) == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))).epsilon(1e-15));
}

TEST_CASE("soft filter tracks the hard filter on binary input") {
  Rng rng(6);
  const FilterBank bank(2);
  for (int t = 0; t < 20; ++t) {
    const UnitTopology x = random_topology(4, rng);
    const auto hard = hard_filter(subregion_matrix(x), bank);
    const auto soft = soft_filter(subregion_matrix(to_channel_array(x)), bank);
    REQUIRE(hard.size() == soft.size());
    for (std::size_t k = 0; k < hard.size(); ++k) CHECK(std::abs(hard[k] - soft[k]) < 1e-2);
  }
}

TEST_CASE("coarsen") {
  const ChannelArray ones = to_channel_array(UnitTopology::ground(8));
  const ChannelArray c = coarsen(ones, 0.25);
  CHECK(c.m == 4);
  CHECK(std::all_of(c.values.begin(), c.values.end(), [](double v) { return v == 1.0; }));
  const ChannelArray z = coarsen(ones, 0.0);
  CHECK(std::all_of(z.values.begin(), z.values.end(), [](double v) { return v == 0.0; }));

  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const UnitTopology x = random_topology(4, rng);
    CHECK(coarsen(to_channel_array(refine(x)), 0.25).values == to_channel_array(x).values);
  }
  // Per-channel 2x2 block sums.
  ChannelArray a(4);
  for (std::size_t k = 0; k < a.values.size(); ++k) a.values[k] = static_cast<double>(k % 7);
  const ChannelArray s = coarsen(a, 1.0);
  for (int ch = 0; ch < kChannels; ++ch) {
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        const double sum = a.at(ch, 2 * j, 2 * i) + a.at(ch, 2 * j, 2 * i + 1) + a.at(ch, 2 * j + 1, 2 * i) +
                           a.at(ch, 2 * j + 1, 2 * i + 1);
        CHECK(s.at(ch, j, i) == sum);
      }
    }
  }
  CHECK_THROWS_AS(coarsen(ChannelArray(3), 0.25), std::invalid_argument);
}

TEST_CASE("F scores rank like squared correlation") {
  Rng rng(31);
  Eigen::MatrixXd f(50, 5);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    y(i) = rng.uniform01();
    for (int k = 0; k < 5; ++k) f(i, k) = rng.uniform01() + 0.3 * k * y(i);
  }
  const auto scores = f_scores(f, y);
  std::vector<double> r2(5);
  for (int k = 0; k < 5; ++k) r2[k] = r_squared(f.col(k), y);
  CHECK(ranking(scores) == ranking(r2));
  for (int k = 0; k < 5; ++k) {
    CHECK(scores[k] == doctest::Approx(r2[k] / (1.0 - r2[k]) * (50.0 - 5.0 - 1.0) / 5.0).epsilon(1e-10));
  }

  Eigen::MatrixXd g(10, 2);
  Eigen::VectorXd t(10);
  for (int i = 0; i < 10; ++i) {
    t(i) = i * 0.5;
    g(i, 0) = t(i);
    g(i, 1) = 3.0;
  }
  const auto s2 = f_scores(g, t);
  CHECK(std::isfinite(s2[0]));
  CHECK(s2[0] > 1e9);
  CHECK(s2[1] == 0.0);

  CHECK_THROWS_AS(f_scores(Eigen::MatrixXd(2, 1), Eigen::VectorXd(2)), std::invalid_argument);
  CHECK_THROWS_AS(f_scores(Eigen::MatrixXd(10, 2), Eigen::VectorXd(9)), std::invalid_argument);
  CHECK_THROWS_AS(f_scores(Eigen::MatrixXd(5, 4), Eigen::VectorXd(5)), std::invalid_argument);
}

TEST_CASE("top-k selection") {
  const std::vector<double> s{3.0, 1.0, 3.0};
  CHECK(select_top_k(s, 2).selected == std::vector<int>{0, 2});
  CHECK(select_top_k(s, 3).selected == std::vector<int>{0, 2, 1});
  CHECK_THROWS_AS(select_top_k(s, 0), std::out_of_range);
  CHECK_THROWS_AS(select_top_k(s, 4), std::out_of_range);

  Rng rng(40);
  std::vector<double> scores(448);
  for (auto& v : scores) v = std::floor(rng.uniform01() * 50.0);
  const auto a = select_top_k(scores, 340);
  std::vector<double> scaled = scores;
  for (auto& v : scaled) v *= 7.5;
  CHECK(select_top_k(scaled, 340).selected == a.selected);
  CHECK(a.selected == select_top_k(scores, 340).selected);
  CHECK(a.selected.size() == 340);
}

TEST_CASE("feature pipeline") {
  FeaturePipeline p;
  p.m = 4;
  p.n_m = 2;
  CHECK(p.full_dim() == 448);
  p.selected.resize(340);
  std::iota(p.selected.begin(), p.selected.end(), 50);

  Rng rng(3);
  const UnitTopology x = random_topology(4, rng);
  const auto full = full_features(x, p);
  const auto sel = features_for_prediction(x, p);
  REQUIRE(sel.size() == 340);
  for (std::size_t k = 0; k < sel.size(); ++k) CHECK(sel[k] == full[50 + k]);

  const auto fine = features_for_prediction(random_topology(8, rng), p);
  CHECK(fine.size() == 340);
  CHECK(std::all_of(fine.begin(), fine.end(), [](double v) { return v > 0.0 && v < 1.0; }));

  CHECK_THROWS_AS(full_features(random_topology(3, rng), p), std::invalid_argument);

  FeaturePipeline raw;
  raw.m = 4;
  raw.n_m = 0;
  CHECK(raw.full_dim() == 64);
  const auto bits = full_features(x, raw);
  for (std::size_t k = 0; k < bits.size(); ++k) CHECK(bits[k] == (x[k] ? 1.0 : 0.0));
}

TEST_SUITE_END();
