#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "vicsek/geometry/metric.hpp"
#include "vicsek/mesh/mesh.hpp"

namespace vicsek {

struct CoverBall {
  int center;     // mesh node
  double radius;  // d(center, F) / 3
  double gap;     // d(center, F)
};

/// Whitney-type covering of an open set given by a node mask: Omega is the
/// union of B(x, h) over masked nodes, F its complement.
struct Covering {
  std::vector<CoverBall> balls;
  std::vector<char> omega;
  std::vector<double> gap;                 // d(x, F) per node
  std::vector<std::vector<int>> touching;  // intersecting balls, self excluded
  int overlap = 0;                         // max number of balls meeting one ball, itself included
  double comparability = 1.0;              // max radius ratio of intersecting balls

  static constexpr double kSmallRadius = 8.0;
  bool is_big(int i) const { return balls[i].radius > kSmallRadius; }
  bool in_J(int i) const { return balls[i].radius >= 9.0 * comparability * comparability; }
};

/// Hop distance (times h) from every node to the nearest unmasked node.
inline std::vector<double> gap_to_complement(const Mesh& mesh, const std::vector<char>& omega) {
  const int n = mesh.num_nodes();
  std::vector<int> hops(n, -1), queue;
  for (int i = 0; i < n; ++i)
    if (!omega[i]) {
      hops[i] = 0;
      queue.push_back(i);
    }
  if (queue.empty()) throw DomainError("Whitney covering needs a nonempty complement");
  for (std::size_t k = 0; k < queue.size(); ++k) {
    int u = queue[k];
    for (const auto& l : mesh.neighbors(u))
      if (hops[l.node] < 0) {
        hops[l.node] = hops[u] + 1;
        queue.push_back(l.node);
      }
  }
  std::vector<double> gap(n);
  for (int i = 0; i < n; ++i) gap[i] = hops[i] * mesh.h();
  return gap;
}

/// Greedy Vitali selection of B(x, d(x,F)/30) by decreasing radius with
/// lexicographic tie-break; emits the tenfold balls B(x, d(x,F)/3).
inline Covering whitney_cover(const Mesh& mesh, const std::vector<char>& omega) {
  const auto& X = mesh.system();
  const int n = mesh.num_nodes();
  if (static_cast<int>(omega.size()) != n) throw ContractError("mask size mismatch");
  Covering cov;
  cov.omega = omega;
  cov.gap = gap_to_complement(mesh, omega);

  std::vector<int> cand;
  std::vector<std::vector<double>> coord(n);
  for (int i = 0; i < n; ++i)
    if (omega[i]) {
      cand.push_back(i);
      coord[i] = coordinates(X, mesh.point(i));
    }
  if (cand.empty()) throw DomainError("Whitney covering of an empty set");
  std::sort(cand.begin(), cand.end(), [&](int a, int b) {
    if (cov.gap[a] != cov.gap[b]) return cov.gap[a] > cov.gap[b];
    return coord[a] < coord[b];
  });

  std::vector<CablePoint> pts;
  std::vector<double> small_r;
  for (int x : cand) {
    CablePoint p = mesh.point(x);
    double r = cov.gap[x] / 30.0;
    bool free = true;
    for (std::size_t j = 0; j < pts.size() && free; ++j)
      if (tree_distance(X, p, pts[j]) < r + small_r[j]) free = false;
    if (!free) continue;
    pts.push_back(p);
    small_r.push_back(r);
    cov.balls.push_back({x, cov.gap[x] / 3.0, cov.gap[x]});
  }

  const int m = static_cast<int>(cov.balls.size());
  cov.touching.assign(m, {});
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (tree_distance(X, pts[i], pts[j]) < cov.balls[i].radius + cov.balls[j].radius) {
        cov.touching[i].push_back(j);
        cov.touching[j].push_back(i);
        double ratio = cov.balls[i].radius / cov.balls[j].radius;
        cov.comparability = std::max({cov.comparability, ratio, 1.0 / ratio});
      }
  for (int i = 0; i < m; ++i)
    cov.overlap = std::max(cov.overlap, static_cast<int>(cov.touching[i].size()) + 1);
  return cov;
}

/// Mesh nodes at distance < r from node c, with their distances.
inline std::vector<std::pair<int, double>> nodes_within(const Mesh& mesh, int c, double r) {
  std::vector<std::pair<int, double>> out{{c, 0.0}};
  std::vector<int> hops{0};
  std::vector<int> from{-1};
  const double h = mesh.h();
  for (std::size_t k = 0; k < out.size(); ++k) {
    int u = out[k].first;
    int d = hops[k];
    if ((d + 1) * h >= r) continue;
    for (const auto& l : mesh.neighbors(u)) {
      if (l.node == from[k]) continue;
      out.push_back({l.node, (d + 1) * h});
      hops.push_back(d + 1);
      from.push_back(u);
    }
  }
  return out;
}

}  // namespace vicsek
