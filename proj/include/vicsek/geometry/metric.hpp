#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "vicsek/geometry/subset.hpp"

namespace vicsek {

inline double tree_distance(const CableSystem& X, const CablePoint& x, const CablePoint& y) {
  check_point(X, x);
  check_point(X, y);
  if (x.cable == y.cable) return std::abs(x.t - y.t);
  const auto& cx = X.cable(x.cable);
  const auto& cy = X.cable(y.cable);
  const double ox[2] = {x.t, 1.0 - x.t};
  const double oy[2] = {y.t, 1.0 - y.t};
  const int ex[2] = {cx.a, cx.b};
  const int ey[2] = {cy.a, cy.b};
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      best = std::min(best, ox[i] + X.vertex_distance(ex[i], ey[j]) + oy[j]);
  return best;
}

/// Ordered points along the unique geodesic: x, the vertices crossed, y.
inline std::vector<CablePoint> geodesic(const CableSystem& X, const CablePoint& x,
                                        const CablePoint& y) {
  check_point(X, x);
  check_point(X, y);
  if (x.cable == y.cable) return {canonical(X, x), canonical(X, y)};
  const auto& cx = X.cable(x.cable);
  const auto& cy = X.cable(y.cable);
  const double ox[2] = {x.t, 1.0 - x.t};
  const double oy[2] = {y.t, 1.0 - y.t};
  const int ex[2] = {cx.a, cx.b};
  const int ey[2] = {cy.a, cy.b};
  double best = std::numeric_limits<double>::infinity();
  int bi = 0, bj = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double d = ox[i] + X.vertex_distance(ex[i], ey[j]) + oy[j];
      if (d < best - 1e-12) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  std::vector<CablePoint> out{canonical(X, x)};
  for (int v : X.vertex_path(ex[bi], ey[bj])) {
    auto p = point_at_vertex(X, v);
    if (!same_point(X, p, out.back())) out.push_back(p);
  }
  auto last = canonical(X, y);
  if (!same_point(X, last, out.back())) out.push_back(last);
  return out;
}

/// Distances from a point to every vertex.
inline std::vector<double> distances_from(const CableSystem& X, const CablePoint& x) {
  check_point(X, x);
  const auto& c = X.cable(x.cable);
  auto da = X.vertex_distances(c.a);
  auto db = X.vertex_distances(c.b);
  std::vector<double> d(da.size());
  for (std::size_t v = 0; v < d.size(); ++v)
    d[v] = std::min(x.t + da[v], 1.0 - x.t + db[v]);
  return d;
}

/// Open ball B(x, r), stored as its closure.
inline Subset ball(const CableSystem& X, const CablePoint& x, double r) {
  if (!(r > 0.0)) throw DomainError("ball radius must be positive");
  auto d = distances_from(X, x);
  std::vector<Segment> segs;
  for (int c = 0; c < X.num_cables(); ++c) {
    if (c == x.cable) {
      if (x.t - r < 1.0 && x.t + r > 0.0) segs.push_back({c, x.t - r, x.t + r});
      continue;
    }
    double da = d[X.cable(c).a], db = d[X.cable(c).b];
    if (r > da) segs.push_back({c, 0.0, std::min(1.0, r - da)});
    if (r > db) segs.push_back({c, std::max(0.0, 1.0 - (r - db)), 1.0});
  }
  return Subset::from_segments(std::move(segs));
}

inline double volume(const CableSystem& X, const CablePoint& x, double r) {
  return ball(X, x, r).measure();
}

inline std::vector<std::pair<double, double>> volume_growth(const CableSystem& X,
                                                            const CablePoint& x,
                                                            const std::vector<double>& radii) {
  auto d = distances_from(X, x);
  std::vector<std::pair<double, double>> out;
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("ball radius must be positive");
    double m = 0.0;
    for (int c = 0; c < X.num_cables(); ++c) {
      if (c == x.cable) {
        m += std::min(1.0, x.t + r) - std::max(0.0, x.t - r);
        continue;
      }
      double da = d[X.cable(c).a], db = d[X.cable(c).b];
      double in_a = std::clamp(r - da, 0.0, 1.0), in_b = std::clamp(r - db, 0.0, 1.0);
      m += std::min(1.0, in_a + in_b);
    }
    out.emplace_back(r, m);
  }
  return out;
}

}  // namespace vicsek
