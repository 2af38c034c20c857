#pragma once

#include <cmath>
#include <vector>

#include "vicsek/geometry/metric.hpp"

namespace vicsek {

inline Subset skeleton_subset(const CableSystem& X, int k, int s) {
  return Subset::of_cables(X.skeleton_cables(k, s));
}

inline Subset diagonal_subset(const CableSystem& X, int k, int s) {
  return Subset::of_cables(X.skeletons(k)[s].diagonal);
}

inline CablePoint skeleton_center(const CableSystem& X, int k, int s) {
  return point_at_vertex(X, X.skeletons(k)[s].center);
}

/// A k-skeleton is the closed ball of radius 3^k about its center.
inline double distance_to_skeleton(const CableSystem& X, const CablePoint& x, int k, int s) {
  double d = tree_distance(X, x, skeleton_center(X, k, s)) - static_cast<double>(pow3(k));
  return std::max(0.0, d);
}

/// Level-k skeletons meeting the open ball B(x, r).
inline std::vector<int> skeletons_meeting(const CableSystem& X, const CablePoint& x, double r,
                                          int k) {
  std::vector<int> out;
  const auto& level = X.skeletons(k);
  const double R = static_cast<double>(pow3(k));
  auto d = distances_from(X, x);
  for (std::size_t s = 0; s < level.size(); ++s)
    if (d[level[s].center] - R < r) out.push_back(static_cast<int>(s));
  return out;
}

inline void require_inside(const CableSystem& X, const CablePoint& x, double r) {
  if (tree_distance(X, x, point_at_vertex(X, X.attachment())) < r)
    throw MarginError("ball reaches the truncation boundary", X.level() + 1);
}

struct SkeletonRef {
  int level;
  int index;
};

/// An n-skeleton inside B(x, r), n = floor(log3(r/2)), for r > 2.
inline SkeletonRef skeleton_in_ball(const CableSystem& X, const CablePoint& x, double r) {
  if (!(r > 2.0)) throw DomainError("skeleton_in_ball needs r > 2");
  int n = static_cast<int>(std::floor(std::log(r / 2.0) / std::log(3.0) + 1e-12));
  while (n > 0 && 2.0 * pow3(n) > r) --n;
  if (n > X.level()) throw MarginError("ball larger than the truncated system", n);
  auto cx = canonical(X, x);
  int v = vertex_at(X, cx);
  if (v < 0) return {n, X.skeleton_of_cable(cx.cable, n)};
  for (int s : X.skeletons_at_vertex(v, n)) {
    bool corner = false;
    for (int z : X.skeletons(n)[s].corners) corner |= z == v;
    if (!corner || 2.0 * pow3(n) < r) return {n, s};
  }
  if (n == 0) throw DomainError("no 0-skeleton fits in the ball");
  return {n - 1, X.skeletons_at_vertex(v, n - 1).front()};
}

/// Smallest skeleton containing the closed ball of radius r about x.
inline SkeletonRef ball_in_skeleton(const CableSystem& X, const CablePoint& x, double r) {
  if (!(r > 0.0)) throw DomainError("ball radius must be positive");
  auto cx = canonical(X, x);
  auto d = distances_from(X, cx);
  int v = vertex_at(X, cx);
  for (int k = 0; k <= X.level(); ++k) {
    std::vector<int> cands =
        v < 0 ? std::vector<int>{X.skeleton_of_cable(cx.cable, k)} : X.skeletons_at_vertex(v, k);
    for (int s : cands) {
      bool ok = true;
      for (int z : X.skeletons(k)[s].corners) {
        bool exit = X.degree(z) > 1 || z == X.attachment();
        if (exit && d[z] < r) ok = false;
      }
      if (ok) return {k, s};
    }
  }
  throw MarginError("ball not contained in the truncated system", X.level() + 1);
}

struct Soul {
  Subset carrier;  // closure of the skeleton diagonals inside the ball
  Subset host;     // the ball itself
  int level;
  std::vector<int> skeletons;
};

inline int soul_level(double r, double c, int order) {
  double scale = order == 1 ? 8.0 * c : 8.0 * c * c;
  int n = static_cast<int>(std::floor(std::log(r / scale) / std::log(3.0) + 1e-12));
  return std::max(n, 0);
}

/// Diagonals of the soul-level skeletons meeting B(x, r), clipped to the
/// closed ball. order 1 gives the soul, order 2 the second-order soul.
inline Soul soul_adapted(const CableSystem& X, const CablePoint& x, double r, double c,
                         int order = 1) {
  if (!(r > 8.0)) throw DomainError("souls are defined for radius > 8");
  if (!(c >= 1.0)) throw DomainError("comparability constant must be >= 1");
  if (order != 1 && order != 2) throw DomainError("soul order must be 1 or 2");
  require_inside(X, x, r);
  Soul s;
  s.level = soul_level(r, c, order);
  s.host = ball(X, x, r);
  s.skeletons = skeletons_meeting(X, x, r, s.level);
  std::vector<int> cables;
  for (int w : s.skeletons)
    for (int cab : X.skeletons(s.level)[w].diagonal) cables.push_back(cab);
  s.carrier = Subset::of_cables(cables).intersect(s.host);
  return s;
}

/// Points of U at distance >= 1 from its complement.
inline Subset inner_core(const CableSystem& X, const Subset& U) {
  DistanceField rest(X, U.complement(X));
  std::vector<Segment> core;
  for (const auto& g : U.segments()) {
    double da = rest.vertex_distance(X.cable(g.cable).a);
    double db = rest.vertex_distance(X.cable(g.cable).b);
    double lo = std::max(g.lo, 1.0 - da), hi = std::min(g.hi, db);
    if (hi > lo) core.push_back({g.cable, lo, hi});
  }
  return Subset::from_segments(std::move(core));
}

struct CentralCopies {
  std::vector<Subset> copies;  // central copy first, then corner copies
  Subset core;                 // points of the central copy at distance >= 1 from its complement
};

/// Copies of V^(k) inside V^(k+1) other than the one at the origin. At k = 0
/// every copy is V^(1) itself.
inline CentralCopies central_copies(const CableSystem& X, int k) {
  if (k < 0 || k + 1 > X.level()) throw DomainError("central_copies needs level >= k+1");
  const int N = X.dimension();
  CentralCopies out;
  const std::int64_t R = pow3(k);
  std::vector<LatticePoint> centers{LatticePoint(N, 3 * R)};
  for (int e = 1; e < (1 << N); ++e) {
    LatticePoint p(N);
    for (int i = 0; i < N; ++i) p[i] = (e >> i & 1) ? 5 * R : R;
    centers.push_back(p);
  }
  for (const auto& c : centers) {
    if (k == 0) {
      out.copies.push_back(skeleton_subset(X, 1, X.skeleton_of_cable(0, 1)));
      continue;
    }
    int v = *X.find_vertex(c);
    out.copies.push_back(skeleton_subset(X, k, X.skeletons_at_vertex(v, k).front()));
  }
  out.core = inner_core(X, out.copies.front());
  return out;
}

}  // namespace vicsek
