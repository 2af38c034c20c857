#pragma once

#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "vicsek/mesh/mesh.hpp"
#include "vicsek/spectral/tree_solver.hpp"

namespace vicsek {

/// Eigenpairs of K phi = lambda D phi, ascending, with D-orthonormal columns.
struct EigenBasis {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd mass;
  bool complete = true;
  double max_residual = 0.0;

  int size() const { return static_cast<int>(values.size()); }

  Eigen::VectorXd coefficients(const Eigen::VectorXd& f) const {
    return vectors.transpose() * mass.cwiseProduct(f);
  }
};

namespace detail {

inline double relative_residual(const StiffnessPair& KD, const Eigen::VectorXd& phi, double lam) {
  Eigen::VectorXd r = KD.K * phi - lam * KD.D.cwiseProduct(phi);
  return r.norm() / std::max(1.0, lam * KD.D.cwiseProduct(phi).norm());
}

inline EigenBasis dense_eigen(const StiffnessPair& KD) {
  const int n = static_cast<int>(KD.D.size());
  Eigen::VectorXd s = KD.D.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd A = Eigen::MatrixXd(KD.K);
  A = s.asDiagonal() * A * s.asDiagonal();
  Eigen::VectorXd w(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, A.data(), n, w.data());
  if (info != 0) throw SolverError("dsyevd failed with info " + std::to_string(info));
  EigenBasis b;
  b.values = w;
  b.vectors = s.asDiagonal() * A;
  b.mass = KD.D;
  b.complete = true;
  return b;
}

inline EigenBasis lanczos_eigen(const Mesh& mesh, const StiffnessPair& KD, int k,
                                std::uint64_t seed) {
  const int n = static_cast<int>(KD.D.size());
  TreeStructure tree(mesh);
  double lmax = (2.0 * tree.kdiag.cwiseQuotient(tree.mass)).maxCoeff();
  const double sigma = 1e-10 * lmax;
  TreeLDL<double> fac(tree, sigma);
  const auto& D = KD.D;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);

  for (int m = std::min(n, 2 * k + 40);; m = std::min(n, m + m / 2)) {
    Eigen::MatrixXd Q(n, m);
    Eigen::VectorXd alpha(m), beta(m);
    Q.col(0) = v / std::sqrt(v.dot(D.cwiseProduct(v)));
    int steps = m;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd w = fac.solve(D.cwiseProduct(Q.col(j)));
      alpha[j] = Q.col(j).dot(D.cwiseProduct(w));
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd c = Q.leftCols(j + 1).transpose() * D.cwiseProduct(w);
        w -= Q.leftCols(j + 1) * c;
      }
      beta[j] = std::sqrt(w.dot(D.cwiseProduct(w)));
      if (j + 1 == m) break;
      if (beta[j] < 1e-14 * std::abs(alpha[j])) {
        steps = j + 1;
        break;
      }
      Q.col(j + 1) = w / beta[j];
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const int take = std::min(k, steps);
    EigenBasis b;
    b.values.resize(take);
    b.vectors.resize(n, take);
    b.mass = D;
    b.complete = take == n;
    for (int i = 0; i < take; ++i) {
      int col = steps - 1 - i;  // largest theta <-> smallest lambda
      b.values[i] = 1.0 / es.eigenvalues()[col] - sigma;
      Eigen::VectorXd phi = Q.leftCols(steps) * es.eigenvectors().col(col);
      b.vectors.col(i) = phi / std::sqrt(phi.dot(D.cwiseProduct(phi)));
      b.max_residual =
          std::max(b.max_residual, relative_residual(KD, b.vectors.col(i), b.values[i]));
    }
    if (b.max_residual < 1e-8 || steps < m || m == n) {
      if (b.max_residual > 1e-6) throw SolverError("Lanczos did not converge");
      return b;
    }
  }
}

}  // namespace detail

/// Dense decomposition up to dense_limit nodes, shift-invert Lanczos for the
/// k_max lowest pairs above it (k_max is then required).
inline EigenBasis eigendecompose(const Mesh& mesh, const StiffnessPair& KD, int k_max = -1,
                                 int dense_limit = 6000, std::uint64_t seed = 1) {
  const int n = static_cast<int>(KD.D.size());
  if (n <= dense_limit) {
    auto b = detail::dense_eigen(KD);
    if (k_max > 0 && k_max < n) {
      b.values.conservativeResize(k_max);
      b.vectors.conservativeResize(Eigen::NoChange, k_max);
      b.complete = false;
    }
    for (int i = 0; i < b.size(); i += std::max(1, b.size() / 64))
      b.max_residual = std::max(b.max_residual,
                                detail::relative_residual(KD, b.vectors.col(i), b.values[i]));
    return b;
  }
  if (k_max <= 0) throw SizeError("mesh above the dense limit needs k_max");
  return detail::lanczos_eigen(mesh, KD, k_max, seed);
}

}  // namespace vicsek
