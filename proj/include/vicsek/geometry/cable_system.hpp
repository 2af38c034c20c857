#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "vicsek/error.hpp"

namespace vicsek {

/// Integer coordinates scaled by sqrt(N), so every cable is a +-1 step in
/// each coordinate and has length one in the cable metric.
using LatticePoint = std::vector<std::int64_t>;

struct LatticeHash {
  std::size_t operator()(const LatticePoint& p) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto c : p) {
      h ^= static_cast<std::uint64_t>(c);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Endpoint a is the center of the 0-skeleton holding the cable, b its corner.
struct Cable {
  int a;
  int b;
};

/// Point on cable `cable` at arc-length offset t in [0,1] from endpoint a.
struct CablePoint {
  int cable = 0;
  double t = 0.0;
};

struct Skeleton {
  int level = 0;
  int center = -1;
  std::vector<int> corners;
  int parent = -1;
  std::vector<int> diagonal;  // cable ids of the great diagonals
};

inline std::int64_t pow3(int k) {
  std::int64_t r = 1;
  for (int i = 0; i < k; ++i) r *= 3;
  return r;
}

class CableSystem {
 public:
  int dimension() const { return dim_; }
  int level() const { return level_; }
  int num_vertices() const { return static_cast<int>(coords_.size()); }
  int num_cables() const { return static_cast<int>(cables_.size()); }
  double measure() const { return static_cast<double>(cables_.size()); }

  const LatticePoint& vertex(int v) const { return coords_[v]; }
  const std::vector<LatticePoint>& vertices() const { return coords_; }
  const Cable& cable(int c) const { return cables_[c]; }
  const std::vector<Cable>& cables() const { return cables_; }
  const std::vector<int>& incident(int v) const { return incident_[v]; }
  int degree(int v) const { return static_cast<int>(incident_[v].size()); }

  int other_end(int c, int v) const {
    return cables_[c].a == v ? cables_[c].b : cables_[c].a;
  }

  std::optional<int> find_vertex(const LatticePoint& p) const {
    auto it = index_.find(p);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<int> find_cable(int u, int v) const {
    for (int c : incident_[u])
      if (other_end(c, u) == v) return c;
    return std::nullopt;
  }

  const std::vector<Skeleton>& skeletons(int k) const {
    if (k < 0 || k > level_) throw DomainError("skeleton level out of range");
    return skeletons_[k];
  }

  /// Index of the unique level-k skeleton whose cables include cable c.
  int skeleton_of_cable(int c, int k) const {
    if (k < 0 || k > level_) throw DomainError("skeleton level out of range");
    int s = cross_of_cable_[c];
    for (int j = 0; j < k; ++j) s = skeletons_[j][s].parent;
    return s;
  }

  /// Level-k skeletons containing vertex v (one, or several at shared corners).
  std::vector<int> skeletons_at_vertex(int v, int k) const {
    std::vector<int> out;
    for (int c : incident_[v]) {
      int s = skeleton_of_cable(c, k);
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Cables of a level-k skeleton: copies are laid out contiguously, so
  /// skeleton s owns the id range [s C_k, (s+1) C_k) with C_k = 2^N (2^N+1)^k.
  std::vector<int> skeleton_cables(int k, int s) const {
    const int per = cables_per_skeleton(k);
    std::vector<int> out(per);
    for (int i = 0; i < per; ++i) out[i] = s * per + i;
    return out;
  }

  int cables_per_skeleton(int k) const {
    int per = 1 << dim_;
    for (int j = 0; j < k; ++j) per *= (1 << dim_) + 1;
    return per;
  }

  /// Leaf corner at the origin.
  int origin() const { return origin_; }
  /// Far corner (2*3^n,...): the only point where V^(n) meets the rest of X.
  int attachment() const { return attachment_; }

  int depth(int v) const { return depth_[v]; }

  int lca(int u, int v) const {
    if (depth_[u] < depth_[v]) std::swap(u, v);
    int diff = depth_[u] - depth_[v];
    for (int j = 0; diff; ++j, diff >>= 1)
      if (diff & 1) u = up_[j][u];
    if (u == v) return u;
    for (int j = static_cast<int>(up_.size()) - 1; j >= 0; --j) {
      if (up_[j][u] != up_[j][v]) {
        u = up_[j][u];
        v = up_[j][v];
      }
    }
    return up_[0][u];
  }

  int vertex_distance(int u, int v) const {
    return depth_[u] + depth_[v] - 2 * depth_[lca(u, v)];
  }

  /// Vertex sequence of the unique path from u to v.
  std::vector<int> vertex_path(int u, int v) const {
    int w = lca(u, v);
    std::vector<int> head, tail;
    for (int x = u; x != w; x = up_[0][x]) head.push_back(x);
    for (int x = v; x != w; x = up_[0][x]) tail.push_back(x);
    head.push_back(w);
    head.insert(head.end(), tail.rbegin(), tail.rend());
    return head;
  }

  std::vector<int> vertex_distances(int source) const {
    std::vector<int> d(coords_.size(), -1);
    std::vector<int> queue{source};
    d[source] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      int u = queue[i];
      for (int c : incident_[u]) {
        int w = other_end(c, u);
        if (d[w] < 0) {
          d[w] = d[u] + 1;
          queue.push_back(w);
        }
      }
    }
    return d;
  }

  friend CableSystem build_vicsek(int N, int n, double budget);

 private:
  int add_vertex(const LatticePoint& p) {
    auto [it, inserted] = index_.emplace(p, static_cast<int>(coords_.size()));
    if (inserted) {
      coords_.push_back(p);
      incident_.emplace_back();
    }
    return it->second;
  }

  void add_cable(int a, int b) {
    int c = static_cast<int>(cables_.size());
    cables_.push_back({a, b});
    incident_[a].push_back(c);
    incident_[b].push_back(c);
  }

  void finalize();

  int dim_ = 0;
  int level_ = 0;
  int origin_ = -1;
  int attachment_ = -1;
  std::vector<LatticePoint> coords_;
  std::unordered_map<LatticePoint, int, LatticeHash> index_;
  std::vector<Cable> cables_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<Skeleton>> skeletons_;
  std::vector<int> cross_of_cable_;
  std::vector<int> depth_;
  std::vector<std::vector<int>> up_;
};

/// Vicsek cable system V^(n) in dimension N. Vertex and cable ids of V^(k)
/// are a prefix of those of V^(n) for k <= n (the origin copy comes first).
inline CableSystem build_vicsek(int N, int n, double budget = 2e7) {
  if (N < 2 || n < 0) throw DomainError("build_vicsek needs N >= 2, n >= 0");
  const int corners = 1 << N;
  if (N * std::pow(corners + 1.0, n) > budget)
    throw SizeError("cable system exceeds the memory budget");

  CableSystem X;
  X.dim_ = N;
  X.level_ = n;

  auto corner_point = [&](int bits, std::int64_t scale) {
    LatticePoint p(N);
    for (int i = 0; i < N; ++i) p[i] = (bits >> i & 1) ? scale : 0;
    return p;
  };

  int center = X.add_vertex(LatticePoint(N, 1));
  Skeleton s0;
  s0.center = center;
  for (int e = 0; e < corners; ++e) {
    int z = X.add_vertex(corner_point(e, 2));
    s0.corners.push_back(z);
    X.add_cable(center, z);
  }
  X.skeletons_.push_back({s0});

  for (int L = 0; L < n; ++L) {
    const std::int64_t step = 2 * pow3(L);
    std::vector<LatticePoint> offsets;
    for (int e = 0; e < corners; ++e) offsets.push_back(corner_point(e, 2 * step));
    offsets.push_back(LatticePoint(N, step));

    const auto old_coords = X.coords_;
    const auto old_cables = X.cables_;
    const auto old_skel = X.skeletons_;
    X.coords_.clear();
    X.index_.clear();
    X.cables_.clear();
    X.incident_.clear();
    X.skeletons_.assign(L + 2, {});

    for (std::size_t i = 0; i < offsets.size(); ++i) {
      std::vector<int> map(old_coords.size());
      for (std::size_t v = 0; v < old_coords.size(); ++v) {
        LatticePoint p = old_coords[v];
        for (int d = 0; d < N; ++d) p[d] += offsets[i][d];
        map[v] = X.add_vertex(p);
      }
      for (const auto& c : old_cables) X.add_cable(map[c.a], map[c.b]);
      for (int k = 0; k <= L; ++k) {
        for (const auto& w : old_skel[k]) {
          Skeleton s;
          s.level = k;
          s.center = map[w.center];
          for (int z : w.corners) s.corners.push_back(map[z]);
          s.parent = k < L ? static_cast<int>(i * old_skel[k + 1].size()) + w.parent : 0;
          X.skeletons_[k].push_back(std::move(s));
        }
      }
    }
    Skeleton top;
    top.level = L + 1;
    top.center = *X.find_vertex(LatticePoint(N, 3 * pow3(L)));
    for (int e = 0; e < corners; ++e)
      top.corners.push_back(*X.find_vertex(corner_point(e, 2 * pow3(L + 1))));
    X.skeletons_[L + 1].push_back(top);
  }
  X.finalize();
  return X;
}

inline void CableSystem::finalize() {
  const int N = dim_;
  origin_ = *find_vertex(LatticePoint(N, 0));
  attachment_ = *find_vertex(LatticePoint(N, 2 * pow3(level_)));

  std::vector<int> cross_at(coords_.size(), -1);
  for (std::size_t s = 0; s < skeletons_[0].size(); ++s)
    cross_at[skeletons_[0][s].center] = static_cast<int>(s);
  cross_of_cable_.resize(cables_.size());
  for (std::size_t c = 0; c < cables_.size(); ++c)
    cross_of_cable_[c] = cross_at[cables_[c].a];

  for (auto& level : skeletons_) {
    for (auto& w : level) {
      const auto& c = coords_[w.center];
      const std::int64_t len = pow3(w.level);
      for (int z : w.corners) {
        LatticePoint dir(N);
        for (int d = 0; d < N; ++d) dir[d] = coords_[z][d] > c[d] ? 1 : -1;
        LatticePoint p = c;
        int u = w.center;
        for (std::int64_t j = 0; j < len; ++j) {
          for (int d = 0; d < N; ++d) p[d] += dir[d];
          int v = *find_vertex(p);
          w.diagonal.push_back(*find_cable(u, v));
          u = v;
        }
      }
    }
  }

  const int V = num_vertices();
  std::vector<int> parent(V, -1);
  depth_.assign(V, -1);
  std::vector<int> order{0};
  depth_[0] = 0;
  parent[0] = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    int u = order[i];
    for (int c : incident_[u]) {
      int w = other_end(c, u);
      if (depth_[w] < 0) {
        depth_[w] = depth_[u] + 1;
        parent[w] = u;
        order.push_back(w);
      }
    }
  }
  int levels = 1;
  while ((1 << levels) < V) ++levels;
  up_.assign(levels, parent);
  for (int j = 1; j < levels; ++j)
    for (int v = 0; v < V; ++v) up_[j][v] = up_[j - 1][up_[j - 1][v]];
}

inline void check_point(const CableSystem& X, const CablePoint& p) {
  if (p.cable < 0 || p.cable >= X.num_cables() || !(p.t >= 0.0 && p.t <= 1.0))
    throw DomainError("point does not lie on the cable system");
}

/// Vertex id if p sits at a cable endpoint, -1 otherwise.
inline int vertex_at(const CableSystem& X, const CablePoint& p) {
  if (p.t == 0.0) return X.cable(p.cable).a;
  if (p.t == 1.0) return X.cable(p.cable).b;
  return -1;
}

inline CablePoint point_at_vertex(const CableSystem& X, int v) {
  int c = *std::min_element(X.incident(v).begin(), X.incident(v).end());
  return {c, X.cable(c).a == v ? 0.0 : 1.0};
}

/// Vertex points get a unique representation; interior points are unchanged.
inline CablePoint canonical(const CableSystem& X, const CablePoint& p) {
  check_point(X, p);
  int v = vertex_at(X, p);
  return v < 0 ? p : point_at_vertex(X, v);
}

inline bool same_point(const CableSystem& X, const CablePoint& p, const CablePoint& q) {
  auto a = canonical(X, p), b = canonical(X, q);
  return a.cable == b.cable && a.t == b.t;
}

/// Scaled lattice coordinates of a point.
inline std::vector<double> coordinates(const CableSystem& X, const CablePoint& p) {
  const auto& a = X.vertex(X.cable(p.cable).a);
  const auto& b = X.vertex(X.cable(p.cable).b);
  std::vector<double> x(a.size());
  for (std::size_t d = 0; d < a.size(); ++d)
    x[d] = static_cast<double>(a[d]) + p.t * static_cast<double>(b[d] - a[d]);
  return x;
}

}  // namespace vicsek
