#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <random>

#include "vicsek/experiments/gn.hpp"
#include "vicsek/spectral/calculus.hpp"
#include "vicsek/spectral/scaling.hpp"

namespace vicsek {

namespace detail {

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// Lanczos with full reorthogonalization; grows the Krylov space until the
/// top Ritz value settles. Returns {value, Ritz vector}.
inline std::pair<double, Eigen::VectorXd> top_eigenpair(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op, int n,
    std::uint64_t seed, double rtol = 1e-12) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  const int cap = std::min(n, 400);
  Eigen::MatrixXd Q(n, cap);
  std::vector<double> a, b;
  Q.col(0) = v.normalized();
  double prev = 0.0;
  for (int j = 0; j < cap; ++j) {
    Eigen::VectorXd w = op(Q.col(j));
    a.push_back(Q.col(j).dot(w));
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    b.push_back(w.norm());
    const int m = j + 1;
    if (m % 10 == 0 || m == cap || b.back() < 1e-14 * std::abs(a.back())) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = a[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = b[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      double top = es.eigenvalues()[m - 1];
      bool done = std::abs(top - prev) <= rtol * top || m == cap || b.back() < 1e-14 * std::abs(a.back());
      if (done) return {top, Q.leftCols(m) * es.eigenvectors().col(m - 1)};
      prev = top;
    }
    Q.col(j + 1) = w / b.back();
  }
  throw SolverError("Lanczos exhausted its budget");
}

}  // namespace detail

/// Best constants C with int_V |f - c(f)|^2 <= C int_V |grad f|^2, where V is
/// a standalone V^(n) and c(f) the mean over its diagonals; the second
/// constant has the integral over the diagonals on the left.
struct PoincareConstants {
  int n = 0;
  int M = 0;
  double whole = 0.0;
  double diag = 0.0;
  std::string method;
  Eigen::VectorXd extremal;  // maximizer for the whole-space form
};

/// Weights w with w.f = mean of f over the diagonals (exact for P1 functions).
inline Eigen::VectorXd diagonal_mean_weights(const Mesh& mesh, const Subset& diag) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(mesh.num_nodes());
  for_each_piece(mesh, &diag, [&](int s, double s0, double s1) {
    auto [a, b] = mesh.segment_nodes(s);
    double L = (s1 - s0) * mesh.h();
    w[a] += L * (1.0 - (s0 + s1) / 2);
    w[b] += L * (s0 + s1) / 2;
  });
  return w / w.sum();
}

/// Lumped mass of the diagonal segments only.
inline Eigen::VectorXd diagonal_mass(const Mesh& mesh, const Subset& diag) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_nodes());
  for_each_piece(mesh, &diag, [&](int s, double s0, double s1) {
    auto [a, b] = mesh.segment_nodes(s);
    m[a] += (s1 - s0) * mesh.h() / 2;
    m[b] += (s1 - s0) * mesh.h() / 2;
  });
  return m;
}

/// Constrained extremal problem: maximize f'Wf / f'Kf over w.f = 0.
/// Dense route: orthonormal basis of {w.f = 0} from one Householder
/// reflection, then a generalized symmetric eigenproblem.
inline std::pair<double, Eigen::VectorXd> constrained_extremal_dense(
    const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& W, const Eigen::VectorXd& w) {
  const Eigen::Index n = w.size();
  Eigen::MatrixXd wm = w;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(wm);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Z = Q.rightCols(n - 1);
  Eigen::MatrixXd A = Z.transpose() * (K * Z);
  Eigen::MatrixXd B = Z.transpose() * W.asDiagonal() * Z;
  A = (A + A.transpose()) / 2;
  B = (B + B.transpose()) / 2;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(B, A);
  if (es.info() != Eigen::Success) throw SolverError("dense constrained eigenproblem failed");
  return {es.eigenvalues()[n - 2], Z * es.eigenvectors().col(n - 2)};
}

/// Iterative route: Lanczos on W^{1/2} G W^{1/2}, G the Green operator of K
/// on {w.f = 0}, applied through the pinned tree factorization.
inline std::pair<double, Eigen::VectorXd> constrained_extremal_iterative(
    const Mesh& mesh, const Eigen::VectorXd& W, const Eigen::VectorXd& w, std::uint64_t seed) {
  TreeStructure tree(mesh);
  TreeLDL<double> fac(tree, 0.0, true);
  Eigen::VectorXd sw = W.cwiseSqrt();
  auto G = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd r = b - w * b.sum();
    Eigen::VectorXd f = fac.solve(r);
    return Eigen::VectorXd(f.array() - w.dot(f));
  };
  auto op = [&](const Eigen::VectorXd& y) {
    return Eigen::VectorXd(sw.cwiseProduct(G(sw.cwiseProduct(y))));
  };
  auto [val, y] = detail::top_eigenpair(op, mesh.num_nodes(), seed);
  return {val, G(sw.cwiseProduct(y))};
}

inline PoincareConstants poincare_skeleton_constant(int n, int M, int dense_limit = 2500,
                                                    std::uint64_t seed = 1) {
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, n));
  auto mesh = discretize(X, M);
  auto KD = assemble(*mesh);
  Subset diag = diagonal_subset(*X, n, 0);
  Eigen::VectorXd w = diagonal_mean_weights(*mesh, diag);
  Eigen::VectorXd Wd = diagonal_mass(*mesh, diag);
  PoincareConstants out;
  out.n = n;
  out.M = M;
  if (mesh->num_nodes() <= dense_limit) {
    out.method = "dense";
    std::tie(out.whole, out.extremal) = constrained_extremal_dense(KD.K, KD.D, w);
    out.diag = constrained_extremal_dense(KD.K, Wd, w).first;
  } else {
    out.method = "lanczos";
    std::tie(out.whole, out.extremal) = constrained_extremal_iterative(*mesh, KD.D, w, seed);
    out.diag = constrained_extremal_iterative(*mesh, Wd, w, seed).first;
  }
  return out;
}

/// Ratio int_V |f - c(f)|^q / int_V |grad f|^q for one function on a
/// standalone V^(n) mesh (c(f) the diagonal mean).
inline double poincare_ratio(const Mesh& mesh, const Eigen::VectorXd& f, double q) {
  const auto& X = mesh.system();
  Subset diag = diagonal_subset(X, X.level(), 0);
  double c = mean_over(mesh, f, diag);
  Eigen::VectorXd d = f.array() - c;
  double g = segment_power_integral(mesh, gradient(mesh, f), q);
  return g > 0.0 ? power_integral(mesh, d, q) / g : 0.0;
}

/// Empirical sup of poincare_ratio over the fixed test family: the tent, the
/// q = 2 extremal function, radial extensions of diagonal profiles and
/// heat-smoothed noise.
inline double poincare_empirical(int n, int M, double q, const Eigen::VectorXd& extremal,
                                 int noise_samples, std::uint64_t seed) {
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, n));
  auto mesh = discretize(X, M);
  std::vector<Eigen::VectorXd> family{skeleton_tent(*mesh, n, 0), extremal};
  Subset diag = diagonal_subset(*X, n, 0);
  const double R = static_cast<double>(pow3(n));
  const CablePoint z0 = skeleton_center(*X, n, 0);
  for (double k : {0.5, 1.0, 2.0}) {
    auto f = radial_extend(mesh, diag, [&](const CablePoint& p) {
      auto x = coordinates(*X, p);
      return std::sin(k * std::numbers::pi * (x[0] - x[1]) / (2 * R)) +
             tree_distance(*X, z0, p) / R;
    });
    family.push_back(f.values);
  }
  ResolventCalculus calc(mesh);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int i = 0; i < noise_samples; ++i) {
    Eigen::VectorXd xi(mesh->num_nodes());
    for (auto& v : xi) v = nd(rng);
    family.push_back(calc.heat(xi, std::pow(R, 1.0 + vicsek_alpha()) / 10));
  }
  double sup = 0.0;
  for (const auto& f : family) sup = std::max(sup, poincare_ratio(*mesh, f, q));
  return sup;
}

}  // namespace vicsek
