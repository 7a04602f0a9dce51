#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "latticeopt/lattice.hpp"

namespace latticeopt {

using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// Global 6x6 stiffness of a 2-node Euler-Bernoulli frame element with DOFs
/// (u_a, v_a, theta_a, u_b, v_b, theta_b). `angle` is the member direction
/// measured from the global x axis. A released end carries no moment: its
/// rotation is condensed out and the corresponding row/column is zero.
/// Throws std::invalid_argument if length <= 0.
Matrix6 element_stiffness(double length, const SectionProps& section, double angle,
                          bool release_a = false, bool release_b = false);

enum class SolveStatus { Stable, Unstable };

struct NodeDisplacement {
  double u = 0.0;
  double v = 0.0;
  double theta = 0.0;
};

struct SupportReaction {
  int node = 0;
  double fx = 0.0;
  double fy = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Unstable;
  /// F^T u in N*m; present iff status is Stable.
  std::optional<double> compliance;
  /// Per model node; empty when unstable. Rotation is 0 at pin joints.
  std::vector<NodeDisplacement> displacements;
  std::vector<SupportReaction> reactions;

  bool stable() const { return status == SolveStatus::Stable; }
};

/// Relative pivot tolerance of the factorization: a pivot below
/// kPivotTolerance * mean(diag K) marks the structure as a mechanism.
inline constexpr double kPivotTolerance = 1e-10;

/// Linear static analysis under the model's horizontal loads.
SolveResult solve_compliance(const FrameModel& model);

/// Screening cut for dataset generation, N*m.
inline constexpr double kDefaultScreeningThreshold = 5.0;

struct Analysis {
  double volume = 0.0;
  SolveResult result;

  bool stable() const { return result.stable(); }
};

/// Volume plus screened compliance of unit x. Unstable if the factorization
/// fails or the compliance exceeds `threshold`.
Analysis analyze(const UnitTopology& x, const GridSpec& spec, double threshold,
                 const TilingOptions& options = {});

}  // namespace latticeopt
