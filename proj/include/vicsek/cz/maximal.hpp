#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vicsek/mesh/mesh.hpp"

namespace vicsek {

/// Uncentered maximal function of a piecewise-constant density (one value per
/// segment), over balls centered at mesh nodes with radii h*2^k. Returns one
/// value per node. Cost is one breadth-first sweep per center.
inline Eigen::VectorXd maximal_function(const Mesh& mesh, const Eigen::VectorXd& w) {
  if (w.size() != mesh.num_segments()) throw ContractError("density must live on segments");
  if ((w.array() < 0.0).any()) throw DomainError("maximal function needs w >= 0");
  const int n = mesh.num_nodes();
  const double h = mesh.h();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  std::vector<int> layer(n, -1), queue;
  std::vector<double> lmass, lint;
  queue.reserve(n);
  for (int c = 0; c < n; ++c) {
    queue.assign(1, c);
    layer[c] = 0;
    lmass.assign(1, 0.0);
    lint.assign(1, 0.0);
    for (std::size_t i = 0; i < queue.size(); ++i) {
      int u = queue[i];
      for (const auto& l : mesh.neighbors(u)) {
        if (layer[l.node] >= 0) continue;
        int d = layer[u] + 1;
        layer[l.node] = d;
        queue.push_back(l.node);
        if (static_cast<int>(lmass.size()) <= d) {
          lmass.push_back(0.0);
          lint.push_back(0.0);
        }
        lmass[d] += h;
        lint[d] += h * w[l.segment];
      }
    }
    const int depth = static_cast<int>(lmass.size()) - 1;
    // Ball of radius h*2^k holds every segment whose far node has layer <= 2^k.
    std::vector<double> avg;
    double m = 0.0, I = 0.0;
    int next = 0;
    for (int k = 0;; ++k) {
      int lim = std::min(depth, 1 << k);
      for (; next <= lim; ++next) {
        m += lmass[next];
        I += lint[next];
      }
      avg.push_back(m > 0.0 ? I / m : 0.0);
      if ((1 << k) > depth) break;
    }
    for (int k = static_cast<int>(avg.size()) - 2; k >= 0; --k) avg[k] = std::max(avg[k], avg[k + 1]);
    for (int x : queue) {
      int l = layer[x], k = 0;
      while ((1 << k) <= l) ++k;  // smallest k with 2^k > l
      if (k < static_cast<int>(avg.size())) out[x] = std::max(out[x], avg[k]);
      layer[x] = -1;
    }
  }
  return out;
}

/// Nodal version: the density on a segment is the mean of its end values.
inline MeshFunction maximal_function(const MeshFunction& w) {
  Eigen::VectorXd seg(w.mesh->num_segments());
  for (int s = 0; s < w.mesh->num_segments(); ++s) {
    auto [a, b] = w.mesh->segment_nodes(s);
    seg[s] = 0.5 * (w.values[a] + w.values[b]);
  }
  return {w.mesh, maximal_function(*w.mesh, seg)};
}

}  // namespace vicsek
