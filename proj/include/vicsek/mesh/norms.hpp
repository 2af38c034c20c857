#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "vicsek/geometry/subset.hpp"
#include "vicsek/mesh/mesh.hpp"

namespace vicsek {

/// Calls f(segment, s0, s1) for every part [s0, s1] (fractions of the
/// segment) of the mesh lying in S, or for every whole segment when S is null.
inline void for_each_piece(const Mesh& mesh, const Subset* S,
                           const std::function<void(int, double, double)>& f) {
  const int M = mesh.per_cable();
  if (!S) {
    for (int s = 0; s < mesh.num_segments(); ++s) f(s, 0.0, 1.0);
    return;
  }
  for (const auto& g : S->segments()) {
    int j0 = std::max(0, static_cast<int>(std::floor(g.lo * M)));
    int j1 = std::min(M, static_cast<int>(std::ceil(g.hi * M)));
    for (int j = j0; j < j1; ++j) {
      double s0 = std::max(g.lo * M - j, 0.0), s1 = std::min(g.hi * M - j, 1.0);
      if (s1 > s0) f(g.cable * M + j, s0, s1);
    }
  }
}

/// Integral of |linear|^p over an interval of length L with end values a, b.
inline double linear_power_integral(double a, double b, double L, double p) {
  if (a * b < 0.0) {
    double f = a / (a - b);
    return (f * L * std::pow(std::abs(a), p) + (1 - f) * L * std::pow(std::abs(b), p)) / (p + 1);
  }
  a = std::abs(a);
  b = std::abs(b);
  double m = std::max(a, b);
  if (m == 0.0) return 0.0;
  if (std::abs(b - a) > 1e-4 * m)
    return L * (std::pow(b, p + 1) - std::pow(a, p + 1)) / ((p + 1) * (b - a));
  static const double x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                              0.8611363115940526};
  static const double w[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                              0.3478548451374538};
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += w[i] * std::pow(a + (b - a) * (x[i] + 1) / 2, p);
  return L * acc / 2;
}

inline double power_integral(const Mesh& mesh, const Eigen::VectorXd& u, double p,
                             const Subset* S = nullptr) {
  if (!(p >= 1.0)) throw DomainError("p must be >= 1");
  double acc = 0.0, h = mesh.h();
  for_each_piece(mesh, S, [&](int s, double s0, double s1) {
    auto [a, b] = mesh.segment_nodes(s);
    double ua = u[a] + s0 * (u[b] - u[a]), ub = u[a] + s1 * (u[b] - u[a]);
    acc += linear_power_integral(ua, ub, (s1 - s0) * h, p);
  });
  return acc;
}

inline double lp_norm(const Mesh& mesh, const Eigen::VectorXd& u, double p,
                      const Subset* S = nullptr) {
  if (std::isinf(p)) {
    double m = 0.0;
    for_each_piece(mesh, S, [&](int s, double s0, double s1) {
      auto [a, b] = mesh.segment_nodes(s);
      m = std::max({m, std::abs(u[a] + s0 * (u[b] - u[a])), std::abs(u[a] + s1 * (u[b] - u[a]))});
    });
    return m;
  }
  return std::pow(power_integral(mesh, u, p, S), 1.0 / p);
}

inline double lp_norm(const MeshFunction& u, double p, const Subset* S = nullptr) {
  return lp_norm(*u.mesh, u.values, p, S);
}

/// Integral of |g|^p for a piecewise-constant per-segment field g.
inline double segment_power_integral(const Mesh& mesh, const Eigen::VectorXd& g, double p,
                                     const Subset* S = nullptr) {
  if (!(p >= 1.0)) throw DomainError("p must be >= 1");
  double acc = 0.0, h = mesh.h();
  for_each_piece(mesh, S, [&](int s, double s0, double s1) {
    acc += (s1 - s0) * h * std::pow(std::abs(g[s]), p);
  });
  return acc;
}

inline double segment_lp_norm(const Mesh& mesh, const Eigen::VectorXd& g, double p,
                              const Subset* S = nullptr) {
  if (std::isinf(p)) {
    double m = 0.0;
    for_each_piece(mesh, S, [&](int s, double, double) { m = std::max(m, std::abs(g[s])); });
    return m;
  }
  return std::pow(segment_power_integral(mesh, g, p, S), 1.0 / p);
}

inline double lp_norm_gradient(const MeshFunction& u, double p, const Subset* S = nullptr) {
  return segment_lp_norm(*u.mesh, gradient(u), p, S);
}

inline double integral(const Mesh& mesh, const Eigen::VectorXd& u, const Subset* S = nullptr) {
  double acc = 0.0, h = mesh.h();
  for_each_piece(mesh, S, [&](int s, double s0, double s1) {
    auto [a, b] = mesh.segment_nodes(s);
    double ua = u[a] + s0 * (u[b] - u[a]), ub = u[a] + s1 * (u[b] - u[a]);
    acc += (s1 - s0) * h * (ua + ub) / 2;
  });
  return acc;
}

inline double subset_measure(const Mesh& mesh, const Subset* S) {
  if (!S) return mesh.system().measure();
  return S->measure();
}

inline double mean_over(const Mesh& mesh, const Eigen::VectorXd& u, const Subset& S) {
  double m = S.measure();
  if (!(m > 0.0)) throw DomainError("mean over a null set");
  return integral(mesh, u, &S) / m;
}

inline double mean_over(const MeshFunction& u, const Subset& S) {
  return mean_over(*u.mesh, u.values, S);
}

/// Extension constant along fibers of the nearest-point projection onto gamma.
inline MeshFunction radial_extend(std::shared_ptr<const Mesh> mesh, const Subset& gamma,
                                  const std::function<double(const CablePoint&)>& f) {
  const auto& X = mesh->system();
  if (!is_connected(X, gamma)) throw ContractError("radial extension needs a convex carrier");
  DistanceField field(X, gamma);
  Eigen::VectorXd v(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i) v[i] = f(field.nearest(mesh->point(i)).second);
  return {std::move(mesh), std::move(v)};
}

inline MeshFunction radial_extend(const MeshFunction& on_gamma, const Subset& gamma) {
  return radial_extend(on_gamma.mesh, gamma,
                       [&](const CablePoint& p) { return on_gamma(p); });
}

}  // namespace vicsek
