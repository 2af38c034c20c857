#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "vicsek/mesh/mesh.hpp"

namespace vicsek {

/// Elimination order of the mesh graph, which is a tree: K + zD factors as
/// L diag L^T with L sharing the sparsity of K, so factor and solve are O(n).
struct TreeStructure {
  explicit TreeStructure(const Mesh& mesh) {
    const int n = mesh.num_nodes();
    const double w = 1.0 / mesh.h();
    parent.assign(n, -1);
    weight.assign(n, 0.0);
    kdiag = Eigen::VectorXd::Zero(n);
    mass = mesh.mass();
    std::vector<bool> seen(n, false);
    order.reserve(n);
    order.push_back(0);
    seen[0] = true;
    for (std::size_t i = 0; i < order.size(); ++i) {
      int u = order[i];
      for (const auto& l : mesh.neighbors(u)) {
        kdiag[u] += w;
        if (!seen[l.node]) {
          seen[l.node] = true;
          parent[l.node] = u;
          weight[l.node] = w;
          order.push_back(l.node);
        }
      }
    }
  }

  std::vector<int> order;      // root first
  std::vector<int> parent;     // -1 at the root
  std::vector<double> weight;  // -K(v, parent(v))
  Eigen::VectorXd kdiag;
  Eigen::VectorXd mass;
};

/// LDL^T of K + zD. With pinned = true the root is pinned to zero, which
/// solves the singular z = 0 system for right-hand sides of zero sum.
template <class Scalar>
class TreeLDL {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TreeLDL(const TreeStructure& t, Scalar z, bool pinned = false) : t_(&t), pinned_(pinned) {
    d_ = t.kdiag.template cast<Scalar>() + z * t.mass.template cast<Scalar>();
    for (std::size_t i = t.order.size(); i-- > 1;) {
      int v = t.order[i];
      d_[t.parent[v]] -= t.weight[v] * t.weight[v] / d_[v];
    }
  }

  Vec solve(const Vec& b) const {
    const auto& t = *t_;
    Vec y = b;
    for (std::size_t i = t.order.size(); i-- > 1;) {
      int v = t.order[i];
      y[t.parent[v]] += t.weight[v] * y[v] / d_[v];
    }
    Vec x(y.size());
    const int root = t.order[0];
    x[root] = pinned_ ? Scalar(0) : y[root] / d_[root];
    for (std::size_t i = 1; i < t.order.size(); ++i) {
      int v = t.order[i];
      x[v] = (y[v] + t.weight[v] * x[t.parent[v]]) / d_[v];
    }
    return x;
  }

 private:
  const TreeStructure* t_;
  bool pinned_;
  Vec d_;
};

}  // namespace vicsek
