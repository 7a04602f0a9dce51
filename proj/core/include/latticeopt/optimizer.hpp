#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "latticeopt/fem.hpp"
#include "latticeopt/lattice.hpp"
#include "latticeopt/rng.hpp"

namespace latticeopt {

/// g = compliance + lambda * max(volume - v_c, 0)
double penalized_objective(double compliance, double volume, double lambda, double v_c);

/// Picks a periodic node uniformly, a flip count uniformly in 1..n_v and
/// flips that many distinct members among the node's incident members.
/// Throws std::invalid_argument unless 1 <= n_v <= 8.
UnitTopology neighbor(const UnitTopology& x, Rng& rng, int n_v);

/// Metropolis rule: 1 if candidate < previous, else exp((previous - candidate) / (T s)).
/// At T == 0 a non-improving candidate gets 0.
double transition_probability(double candidate, double previous, double temperature, double scale);

enum class SearchMode { Anneal, Local };

struct SAConfig {
  double lambda = 10.0;
  double v_c = 0.26;
  /// Cooling coefficient a: T <- a T every `period` iterations.
  double cooling = 0.88;
  int steps = 50;
  int period = 640;
  int max_flips = 3;
  /// Gate threshold decrement on a pass / increment on a rejection.
  double w_d = 0.001;
  double w_i = 0.0003;
  std::uint64_t seed = 0;
  bool gate = true;
  SearchMode mode = SearchMode::Anneal;

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
  /// p * n_s when annealing, p for local search.
  std::int64_t iteration_budget() const;
};

/// Result of one true structural analysis. No compliance means unstable.
struct Evaluation {
  double volume = 0.0;
  std::optional<double> compliance;
};

using Evaluator = std::function<Evaluation(const UnitTopology&)>;
/// Predicted compliance; the exact volume penalty is added by the optimizer.
using Predictor = std::function<double(const UnitTopology&)>;

/// Frame analysis of the tiled structure; compliance above `threshold`
/// counts as unstable.
Evaluator fem_evaluator(const GridSpec& spec, double threshold = std::numeric_limits<double>::infinity());

struct Solution {
  UnitTopology x;
  double compliance = 0.0;
  double volume = 0.0;
  double objective = 0.0;
};

struct SAHistoryRow {
  std::int64_t iter = 0;
  /// Temperature after this iteration.
  double temperature = 0.0;
  /// Gate threshold after this iteration.
  double gate_threshold = 0.0;
  bool analyzed = false;
  double y_current = 0.0;
  /// Best feasible objective so far; NaN until a feasible solution is seen.
  double best_feasible_g = 0.0;
};

struct SAResult {
  /// Best analyzed solution with volume <= v_c.
  std::optional<Solution> best_feasible;
  /// Best analyzed solution by penalized objective.
  Solution best_penalized;
  Solution final_state;
  /// Analyses performed by the iterations (the initial analysis is not counted).
  std::int64_t analysis_count = 0;
  std::int64_t iteration_count = 0;
  double initial_objective = 0.0;
  double scale = 0.0;
  std::vector<SAHistoryRow> history;
};

/// Surrogate-gated simulated annealing. With cfg.gate the predictor must be
/// set; a candidate is analyzed only if its predicted objective is below the
/// adaptive threshold. Local mode runs `period` iterations at T = 0.
/// Throws std::invalid_argument if the initial solution is unstable or the
/// configuration is invalid.
SAResult run(const UnitTopology& initial, const SAConfig& cfg, const Evaluator& evaluate,
             const Predictor& predict = {});

/// JSON with the config echo, best_feasible (null if none), best_penalized,
/// analysis_count and iteration_count. Reals use 17 significant digits.
void save_result(std::ostream& out, const SAResult& result, const SAConfig& cfg);
void save_result(const std::filesystem::path& path, const SAResult& result, const SAConfig& cfg);
/// CSV "iter,T,c,analyzed,y_current,best_feasible_g"; best_feasible_g is nan
/// until a feasible solution has been analyzed.
void save_history(std::ostream& out, const SAResult& result);
void save_history(const std::filesystem::path& path, const SAResult& result);

struct BruteForceResult {
  Solution best_penalized;
  std::optional<Solution> best_feasible;
  std::size_t evaluated = 0;
  std::size_t stable = 0;
};

/// Exhaustive search over all 2^(4 m^2) topologies. Throws std::invalid_argument for m > 2.
BruteForceResult brute_force(int m, const GridSpec& spec, double lambda, double v_c,
                             double threshold = std::numeric_limits<double>::infinity(), unsigned workers = 0);

}  // namespace latticeopt
