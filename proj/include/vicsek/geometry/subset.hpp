#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

#include "vicsek/geometry/cable_system.hpp"

namespace vicsek {

/// Closed piece [lo, hi] of a cable, in offsets from endpoint a.
struct Segment {
  int cable;
  double lo;
  double hi;
};

/// Finite union of closed cable segments. Sets are identified with their
/// closures; measure-zero pieces are dropped.
class Subset {
 public:
  Subset() = default;

  static Subset from_segments(std::vector<Segment> segs) {
    Subset s;
    for (auto& g : segs) {
      g.lo = std::clamp(g.lo, 0.0, 1.0);
      g.hi = std::clamp(g.hi, 0.0, 1.0);
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) {
      return x.cable != y.cable ? x.cable < y.cable : x.lo < y.lo;
    });
    for (const auto& g : segs) {
      if (g.hi - g.lo <= kEps) continue;
      if (!s.segs_.empty() && s.segs_.back().cable == g.cable &&
          g.lo <= s.segs_.back().hi + kEps) {
        s.segs_.back().hi = std::max(s.segs_.back().hi, g.hi);
      } else {
        s.segs_.push_back(g);
      }
    }
    for (auto& g : s.segs_) {
      if (g.lo < kEps) g.lo = 0.0;
      if (g.hi > 1.0 - kEps) g.hi = 1.0;
    }
    return s;
  }

  static Subset whole(const CableSystem& X) {
    std::vector<Segment> segs;
    for (int c = 0; c < X.num_cables(); ++c) segs.push_back({c, 0.0, 1.0});
    return from_segments(std::move(segs));
  }

  static Subset of_cables(const std::vector<int>& cables) {
    std::vector<Segment> segs;
    for (int c : cables) segs.push_back({c, 0.0, 1.0});
    return from_segments(std::move(segs));
  }

  const std::vector<Segment>& segments() const { return segs_; }
  bool empty() const { return segs_.empty(); }

  double measure() const {
    double m = 0.0;
    for (const auto& g : segs_) m += g.hi - g.lo;
    return m;
  }

  std::vector<int> full_cables() const {
    std::vector<int> out;
    for (const auto& g : segs_)
      if (g.lo == 0.0 && g.hi == 1.0) out.push_back(g.cable);
    return out;
  }

  std::vector<Segment> partial_segments() const {
    std::vector<Segment> out;
    for (const auto& g : segs_)
      if (!(g.lo == 0.0 && g.hi == 1.0)) out.push_back(g);
    return out;
  }

  /// Segments lying on cable c, as an index range into segments().
  std::pair<std::size_t, std::size_t> on_cable(int c) const {
    auto lo = std::lower_bound(segs_.begin(), segs_.end(), c,
                               [](const Segment& g, int v) { return g.cable < v; });
    auto hi = std::upper_bound(segs_.begin(), segs_.end(), c,
                               [](int v, const Segment& g) { return v < g.cable; });
    return {static_cast<std::size_t>(lo - segs_.begin()),
            static_cast<std::size_t>(hi - segs_.begin())};
  }

  bool contains(const CableSystem& X, const CablePoint& p) const {
    check_point(X, p);
    int v = vertex_at(X, p);
    if (v >= 0) {
      for (int c : X.incident(v)) {
        double t = X.cable(c).a == v ? 0.0 : 1.0;
        if (contains_on_cable(c, t)) return true;
      }
      return false;
    }
    return contains_on_cable(p.cable, p.t);
  }

  bool contains_on_cable(int c, double t) const {
    auto [b, e] = on_cable(c);
    for (auto i = b; i < e; ++i)
      if (segs_[i].lo - kEps <= t && t <= segs_[i].hi + kEps) return true;
    return false;
  }

  Subset unite(const Subset& o) const {
    auto segs = segs_;
    segs.insert(segs.end(), o.segs_.begin(), o.segs_.end());
    return from_segments(std::move(segs));
  }

  Subset intersect(const Subset& o) const {
    std::vector<Segment> out;
    for (const auto& g : segs_) {
      auto [b, e] = o.on_cable(g.cable);
      for (auto i = b; i < e; ++i) {
        double lo = std::max(g.lo, o.segs_[i].lo), hi = std::min(g.hi, o.segs_[i].hi);
        if (hi > lo) out.push_back({g.cable, lo, hi});
      }
    }
    return from_segments(std::move(out));
  }

  /// Closure of this minus o.
  Subset subtract(const Subset& o) const {
    std::vector<Segment> out;
    for (const auto& g : segs_) {
      double cur = g.lo;
      auto [b, e] = o.on_cable(g.cable);
      for (auto i = b; i < e; ++i) {
        const auto& h = o.segs_[i];
        if (h.hi <= cur || h.lo >= g.hi) continue;
        if (h.lo > cur) out.push_back({g.cable, cur, h.lo});
        cur = std::max(cur, h.hi);
      }
      if (cur < g.hi) out.push_back({g.cable, cur, g.hi});
    }
    return from_segments(std::move(out));
  }

  Subset complement(const CableSystem& X) const { return whole(X).subtract(*this); }

  static constexpr double kEps = 1e-12;

 private:
  std::vector<Segment> segs_;
};

/// In a tree, connected subsets are exactly the geodesically convex ones.
inline bool is_connected(const CableSystem& X, const Subset& S) {
  const auto& segs = S.segments();
  if (segs.empty()) return false;
  std::vector<int> parent(segs.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<int> first_at(X.num_vertices(), -1);
  auto touch = [&](int v, int i) {
    if (first_at[v] < 0)
      first_at[v] = i;
    else
      parent[find(i)] = find(first_at[v]);
  };
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].lo == 0.0) touch(X.cable(segs[i].cable).a, static_cast<int>(i));
    if (segs[i].hi == 1.0) touch(X.cable(segs[i].cable).b, static_cast<int>(i));
  }
  int roots = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) roots += find(static_cast<int>(i)) == static_cast<int>(i);
  return roots == 1;
}

/// Distance to a closed subset together with the nearest point, for every
/// point of X. Built once by a Dijkstra sweep over vertices.
class DistanceField {
 public:
  DistanceField(const CableSystem& X, const Subset& S) : X_(&X), S_(S) {
    if (S.empty()) throw ContractError("distance to an empty set");
    const int V = X.num_vertices();
    dist_.assign(V, std::numeric_limits<double>::infinity());
    near_.assign(V, CablePoint{});
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    auto relax = [&](int v, double d, CablePoint p) {
      if (d < dist_[v]) {
        dist_[v] = d;
        near_[v] = p;
        pq.push({d, v});
      }
    };
    for (const auto& g : S.segments()) {
      relax(X.cable(g.cable).a, g.lo, {g.cable, g.lo});
      relax(X.cable(g.cable).b, 1.0 - g.hi, {g.cable, g.hi});
    }
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist_[u]) continue;
      for (int c : X.incident(u)) relax(X.other_end(c, u), d + 1.0, near_[u]);
    }
  }

  double vertex_distance(int v) const { return dist_[v]; }

  std::pair<double, CablePoint> nearest(const CablePoint& p) const {
    check_point(*X_, p);
    const auto& cab = X_->cable(p.cable);
    double best = p.t + dist_[cab.a];
    CablePoint q = near_[cab.a];
    if (1.0 - p.t + dist_[cab.b] < best) {
      best = 1.0 - p.t + dist_[cab.b];
      q = near_[cab.b];
    }
    auto [b, e] = S_.on_cable(p.cable);
    for (auto i = b; i < e; ++i) {
      const auto& g = S_.segments()[i];
      if (g.lo <= p.t && p.t <= g.hi) return {0.0, p};
      if (p.t < g.lo && g.lo - p.t < best) {
        best = g.lo - p.t;
        q = {p.cable, g.lo};
      }
      if (p.t > g.hi && p.t - g.hi < best) {
        best = p.t - g.hi;
        q = {p.cable, g.hi};
      }
    }
    return {best, q};
  }

  double distance(const CablePoint& p) const { return nearest(p).first; }

 private:
  const CableSystem* X_;
  Subset S_;
  std::vector<double> dist_;
  std::vector<CablePoint> near_;
};

/// Nearest-point projection onto a closed convex subset.
inline CablePoint project_onto(const CableSystem& X, const Subset& S, const CablePoint& p) {
  if (!is_connected(X, S)) throw ContractError("projection target is not convex");
  return canonical(X, DistanceField(X, S).nearest(p).second);
}

}  // namespace vicsek
