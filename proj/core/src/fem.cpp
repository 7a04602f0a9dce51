#include "latticeopt/fem.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace latticeopt {
namespace {

void condense_rotation(Matrix6& k, int r) {
  const double pivot = k(r, r);
  if (pivot <= 0.0) return;
  const Eigen::Matrix<double, 6, 1> col = k.col(r);
  k.noalias() -= col * col.transpose() / pivot;
  k.row(r).setZero();
  k.col(r).setZero();
}

}  // namespace

Matrix6 element_stiffness(double length, const SectionProps& section, double angle, bool release_a,
                          bool release_b) {
  if (!(length > 0.0)) throw std::invalid_argument("element length must be positive");
  const double L = length;
  const double ea = section.youngs_modulus * section.area / L;
  const double ei = section.youngs_modulus * section.second_moment;
  const double k12 = 12.0 * ei / (L * L * L);
  const double k6 = 6.0 * ei / (L * L);
  const double k4 = 4.0 * ei / L;
  const double k2 = 2.0 * ei / L;

  Matrix6 local;
  // clang-format off
  local <<  ea,   0.0,  0.0, -ea,   0.0,  0.0,
            0.0,  k12,  k6,   0.0, -k12,  k6,
            0.0,  k6,   k4,   0.0, -k6,   k2,
           -ea,   0.0,  0.0,  ea,   0.0,  0.0,
            0.0, -k12, -k6,   0.0,  k12, -k6,
            0.0,  k6,   k2,   0.0, -k6,   k4;
  // clang-format on
  if (release_a) condense_rotation(local, 2);
  if (release_b) condense_rotation(local, 5);

  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Matrix6 t = Matrix6::Zero();
  for (int end = 0; end < 2; ++end) {
    const int o = 3 * end;
    t(o, o) = c;
    t(o, o + 1) = s;
    t(o + 1, o) = -s;
    t(o + 1, o + 1) = c;
    t(o + 2, o + 2) = 1.0;
  }
  Matrix6 global = t.transpose() * local * t;
  // Exact symmetry regardless of rounding in the triple product.
  return 0.5 * (global + global.transpose());
}

SolveResult solve_compliance(const FrameModel& model) {
  const auto n_nodes = model.nodes.size();
  SolveResult out;
  if (model.elements.empty() || model.supports.empty()) return out;

  // DOF map: -1 marks a constrained or absent DOF.
  std::vector<std::array<int, 3>> dof(n_nodes, {0, 0, 0});
  for (std::size_t n = 0; n < n_nodes; ++n) {
    if (model.nodes[n].hinged) dof[n][2] = -1;
  }
  for (int s : model.supports) {
    dof[static_cast<std::size_t>(s)][0] = -1;
    dof[static_cast<std::size_t>(s)][1] = -1;
  }
  int n_dof = 0;
  for (auto& d : dof) {
    for (int& k : d) {
      if (k == 0) k = n_dof++;
    }
  }
  if (n_dof == 0) return out;

  std::vector<Matrix6> element_k;
  element_k.reserve(model.elements.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(model.elements.size() * 36);
  for (const auto& e : model.elements) {
    const auto& na = model.nodes[static_cast<std::size_t>(e.a)];
    const auto& nb = model.nodes[static_cast<std::size_t>(e.b)];
    const double dx = nb.x - na.x;
    const double dy = nb.y - na.y;
    element_k.push_back(element_stiffness(std::hypot(dx, dy), e.section, std::atan2(dy, dx), na.hinged, nb.hinged));
    const Matrix6& ke = element_k.back();
    std::array<int, 6> map{};
    for (int r = 0; r < 3; ++r) {
      map[static_cast<std::size_t>(r)] = dof[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(r)];
      map[static_cast<std::size_t>(r + 3)] = dof[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < 6; ++r) {
      const int gr = map[static_cast<std::size_t>(r)];
      if (gr < 0) continue;
      for (int c = 0; c < 6; ++c) {
        const int gc = map[static_cast<std::size_t>(c)];
        if (gc < 0) continue;
        triplets.emplace_back(gr, gc, ke(r, c));
      }
    }
  }

  Eigen::SparseMatrix<double> k(n_dof, n_dof);
  k.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n_dof);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    if (dof[n][0] >= 0) f(dof[n][0]) += model.loads[n];
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(k);
  if (ldlt.info() != Eigen::Success) return out;
  const double mean_diag = k.diagonal().mean();
  if (!(ldlt.vectorD().minCoeff() > kPivotTolerance * mean_diag)) return out;

  const Eigen::VectorXd u = ldlt.solve(f);
  if (ldlt.info() != Eigen::Success || !u.allFinite()) return out;

  out.status = SolveStatus::Stable;
  out.compliance = f.dot(u);
  out.displacements.resize(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    auto value = [&](int d) { return d >= 0 ? u(d) : 0.0; };
    out.displacements[n] = {value(dof[n][0]), value(dof[n][1]), value(dof[n][2])};
  }

  // Reactions: internal element forces accumulated at supported nodes.
  std::vector<int> support_slot(n_nodes, -1);
  for (int s : model.supports) {
    support_slot[static_cast<std::size_t>(s)] = static_cast<int>(out.reactions.size());
    out.reactions.push_back({s, 0.0, 0.0});
  }
  for (std::size_t i = 0; i < model.elements.size(); ++i) {
    const auto& e = model.elements[i];
    const int sa = support_slot[static_cast<std::size_t>(e.a)];
    const int sb = support_slot[static_cast<std::size_t>(e.b)];
    if (sa < 0 && sb < 0) continue;
    Eigen::Matrix<double, 6, 1> ue;
    const auto& da = out.displacements[static_cast<std::size_t>(e.a)];
    const auto& db = out.displacements[static_cast<std::size_t>(e.b)];
    ue << da.u, da.v, da.theta, db.u, db.v, db.theta;
    const Eigen::Matrix<double, 6, 1> fe = element_k[i] * ue;
    if (sa >= 0) {
      out.reactions[static_cast<std::size_t>(sa)].fx += fe(0);
      out.reactions[static_cast<std::size_t>(sa)].fy += fe(1);
    }
    if (sb >= 0) {
      out.reactions[static_cast<std::size_t>(sb)].fx += fe(3);
      out.reactions[static_cast<std::size_t>(sb)].fy += fe(4);
    }
  }
  for (auto& r : out.reactions) r.fx -= model.loads[static_cast<std::size_t>(r.node)];
  return out;
}

Analysis analyze(const UnitTopology& x, const GridSpec& spec, double threshold, const TilingOptions& options) {
  Analysis a;
  a.volume = unit_volume(x, spec);
  a.result = solve_compliance(instantiate_global(x, spec, options));
  if (a.result.stable() && !(*a.result.compliance <= threshold)) {
    a.result.status = SolveStatus::Unstable;
    a.result.compliance.reset();
  }
  return a;
}

}  // namespace latticeopt
