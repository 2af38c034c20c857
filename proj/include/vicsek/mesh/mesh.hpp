#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "vicsek/geometry/subset.hpp"

namespace vicsek {

/// Uniform P1 mesh with M segments per cable. Vertex nodes keep their vertex
/// ids; interior node j (1..M-1) of cable c is V + c(M-1) + j - 1.
class Mesh {
 public:
  Mesh(std::shared_ptr<const CableSystem> X, int M) : X_(std::move(X)), M_(M) {
    if (M < 1) throw DomainError("mesh needs at least one segment per cable");
    const int V = X_->num_vertices(), C = X_->num_cables();
    n_ = V + C * (M - 1);
    mass_ = Eigen::VectorXd::Zero(n_);
    nbrs_.assign(n_, {});
    const double h = this->h();
    for (int s = 0; s < C * M; ++s) {
      auto [u, v] = segment_nodes(s);
      mass_[u] += h / 2;
      mass_[v] += h / 2;
      nbrs_[u].push_back({v, s});
      nbrs_[v].push_back({u, s});
    }
  }

  const CableSystem& system() const { return *X_; }
  std::shared_ptr<const CableSystem> system_ptr() const { return X_; }
  int per_cable() const { return M_; }
  double h() const { return 1.0 / M_; }
  int num_nodes() const { return n_; }
  int num_segments() const { return X_->num_cables() * M_; }

  /// Node at position j (0..M) along cable c.
  int node(int c, int j) const {
    if (j == 0) return X_->cable(c).a;
    if (j == M_) return X_->cable(c).b;
    return X_->num_vertices() + c * (M_ - 1) + j - 1;
  }

  std::pair<int, int> segment_nodes(int s) const {
    int c = s / M_, j = s % M_;
    return {node(c, j), node(c, j + 1)};
  }

  int segment_cable(int s) const { return s / M_; }

  CablePoint point(int i) const {
    const int V = X_->num_vertices();
    if (i < V) return point_at_vertex(*X_, i);
    int k = i - V;
    return {k / (M_ - 1), static_cast<double>(k % (M_ - 1) + 1) / M_};
  }

  /// Node sitting exactly at p, or -1.
  int node_at(const CablePoint& p) const {
    check_point(*X_, p);
    double x = p.t * M_;
    double j = std::round(x);
    if (std::abs(x - j) > 1e-9) return -1;
    return node(p.cable, static_cast<int>(j));
  }

  double value_at(const Eigen::VectorXd& u, const CablePoint& p) const {
    check_point(*X_, p);
    double x = p.t * M_;
    int j = std::min(static_cast<int>(std::floor(x)), M_ - 1);
    double s = x - j;
    return (1 - s) * u[node(p.cable, j)] + s * u[node(p.cable, j + 1)];
  }

  const Eigen::VectorXd& mass() const { return mass_; }

  struct Link {
    int node;
    int segment;
  };
  const std::vector<Link>& neighbors(int i) const { return nbrs_[i]; }

  /// Graph distance in segments (multiply by h for the metric distance).
  std::vector<int> hop_distances(int source) const {
    std::vector<int> d(n_, -1);
    std::vector<int> queue{source};
    d[source] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      int u = queue[i];
      for (const auto& l : nbrs_[u])
        if (d[l.node] < 0) {
          d[l.node] = d[u] + 1;
          queue.push_back(l.node);
        }
    }
    return d;
  }

  Eigen::VectorXd sample(const std::function<double(const CablePoint&)>& f) const {
    Eigen::VectorXd u(n_);
    for (int i = 0; i < n_; ++i) u[i] = f(point(i));
    return u;
  }

 private:
  std::shared_ptr<const CableSystem> X_;
  int M_;
  int n_ = 0;
  Eigen::VectorXd mass_;
  std::vector<std::vector<Link>> nbrs_;
};

inline std::shared_ptr<const Mesh> discretize(std::shared_ptr<const CableSystem> X, int M,
                                              double budget = 5e7) {
  if (M < 1) throw DomainError("mesh needs at least one segment per cable");
  if (static_cast<double>(X->num_cables()) * M > budget)
    throw SizeError("mesh exceeds the memory budget");
  return std::make_shared<const Mesh>(std::move(X), M);
}

struct MeshFunction {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd values;

  MeshFunction() = default;
  MeshFunction(std::shared_ptr<const Mesh> m, Eigen::VectorXd v)
      : mesh(std::move(m)), values(std::move(v)) {
    if (values.size() != mesh->num_nodes()) throw ContractError("mesh function size mismatch");
  }
  static MeshFunction zero(std::shared_ptr<const Mesh> m) {
    auto n = m->num_nodes();
    return {std::move(m), Eigen::VectorXd::Zero(n)};
  }

  double operator()(const CablePoint& p) const { return mesh->value_at(values, p); }

  MeshFunction operator+(const MeshFunction& o) const { return {mesh, values + o.values}; }
  MeshFunction operator-(const MeshFunction& o) const { return {mesh, values - o.values}; }
  MeshFunction operator*(double s) const { return {mesh, values * s}; }
};

/// Stiffness matrix K and lumped mass diagonal D.
struct StiffnessPair {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd D;
};

inline StiffnessPair assemble(const Mesh& mesh) {
  const double w = 1.0 / mesh.h();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * mesh.num_segments());
  for (int s = 0; s < mesh.num_segments(); ++s) {
    auto [u, v] = mesh.segment_nodes(s);
    trips.emplace_back(u, u, w);
    trips.emplace_back(v, v, w);
    trips.emplace_back(u, v, -w);
    trips.emplace_back(v, u, -w);
  }
  StiffnessPair out;
  out.K.resize(mesh.num_nodes(), mesh.num_nodes());
  out.K.setFromTriplets(trips.begin(), trips.end());
  out.D = mesh.mass();
  return out;
}

/// Slope on every segment, oriented from endpoint a to endpoint b of its cable.
inline Eigen::VectorXd gradient(const Mesh& mesh, const Eigen::VectorXd& u) {
  Eigen::VectorXd g(mesh.num_segments());
  const double w = 1.0 / mesh.h();
  for (int s = 0; s < mesh.num_segments(); ++s) {
    auto [a, b] = mesh.segment_nodes(s);
    g[s] = (u[b] - u[a]) * w;
  }
  return g;
}

inline Eigen::VectorXd gradient(const MeshFunction& u) { return gradient(*u.mesh, u.values); }

}  // namespace vicsek
