#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vicsek/geometry/skeleton.hpp"
#include "vicsek/mesh/mesh.hpp"
#include "vicsek/mesh/norms.hpp"

namespace vicsek {

/// The level-n skeleton at the origin, i.e. the copy of V^(n) inside the ambient system.
inline int origin_skeleton(const CableSystem& X, int n) {
  if (n < 0 || n > X.level()) throw DomainError("skeleton level out of range");
  return X.skeleton_of_cable(0, n);
}

/// Harmonic tent of the level-k skeleton s: 1 at its center, 0 at its corners,
/// linear on the half-diagonals and constant on branches; 0 outside.
inline Eigen::VectorXd skeleton_tent(const Mesh& mesh, int k, int s) {
  const auto& X = mesh.system();
  const Subset diag = diagonal_subset(X, k, s);
  const CablePoint z0 = skeleton_center(X, k, s);
  const double R = static_cast<double>(pow3(k));
  DistanceField to_diag(X, diag);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    CablePoint p = mesh.point(i);
    if (X.skeleton_of_cable(p.cable, k) != s) continue;
    double d = tree_distance(X, z0, to_diag.nearest(p).second);
    v[i] = std::max(0.0, 1.0 - d / R);
  }
  return v;
}

/// g_n: the tent of the copy of V^(n) at the origin of a larger ambient system.
inline MeshFunction build_gn(std::shared_ptr<const Mesh> mesh, int n) {
  if (mesh->system().level() <= n) throw DomainError("g_n needs an ambient level above n");
  Eigen::VectorXd v = skeleton_tent(*mesh, n, origin_skeleton(mesh->system(), n));
  return {std::move(mesh), std::move(v)};
}

/// Max |(K g)_v| over mesh nodes of V^(n) other than its center and corners.
inline double gn_harmonic_residual(const MeshFunction& g, int n) {
  const Mesh& mesh = *g.mesh;
  const auto& X = mesh.system();
  const int s = origin_skeleton(X, n);
  const auto& W = X.skeletons(n)[s];
  std::vector<char> skip(mesh.num_nodes(), 0);
  skip[W.center] = 1;
  for (int z : W.corners) skip[z] = 1;
  const int inside = static_cast<int>(X.skeleton_cables(n, s).size());
  auto KD = assemble(mesh);
  Eigen::VectorXd r = KD.K * g.values;
  double res = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (skip[i]) continue;
    const auto& nb = mesh.neighbors(i);
    bool in = std::all_of(nb.begin(), nb.end(),
                          [&](const Mesh::Link& l) { return mesh.segment_cable(l.segment) < inside; });
    if (in) res = std::max(res, std::abs(r[i]));
  }
  return res;
}

/// U_{4n}: the central (n-1)-skeleton of V^(n), centered at z_0.
inline Subset central_core_copy(const CableSystem& X, int n) {
  if (n < 1) throw DomainError("central copy needs n >= 1");
  const int z0 = X.skeletons(n)[origin_skeleton(X, n)].center;
  for (int s : X.skeletons_at_vertex(z0, n - 1))
    if (X.skeletons(n - 1)[s].center == z0) return skeleton_subset(X, n - 1, s);
  throw ContractError("no central copy found");
}

/// Nodal indicator of a subset (1 on nodes lying in S).
inline Eigen::VectorXd indicator(const Mesh& mesh, const Subset& S) {
  Eigen::VectorXd v(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) v[i] = S.contains(mesh.system(), mesh.point(i));
  return v;
}

/// Min of u over mesh nodes lying in S.
inline double min_over(const Mesh& mesh, const Eigen::VectorXd& u, const Subset& S) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (S.contains(mesh.system(), mesh.point(i))) m = std::min(m, u[i]);
  return m;
}

}  // namespace vicsek
