#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vicsek/spectral/calculus.hpp"
#include "vicsek/spectral/eigen_basis.hpp"
#include "vicsek/spectral/resolution.hpp"
#include "vicsek/spectral/scaling.hpp"
#include "vicsek/spectral/tree_solver.hpp"

using namespace vicsek;

namespace {

std::shared_ptr<const Mesh> make(int n, int M) {
  return discretize(std::make_shared<const CableSystem>(build_vicsek(2, n)), M);
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(Eigen, StarSpectrum) {
  // centre mass 2, tip masses 1/2, unit weights: tip-antisymmetric modes give 2, centre-vs-tips gives 4
  auto mesh = make(0, 1);
  auto b = eigendecompose(*mesh, assemble(*mesh));
  ASSERT_EQ(b.size(), 5);
  const double expect[5] = {0.0, 2.0, 2.0, 2.0, 4.0};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(b.values[i], expect[i], 1e-12);
}

TEST(Eigen, MassOrthonormal) {
  auto mesh = make(1, 3);
  auto KD = assemble(*mesh);
  auto b = eigendecompose(*mesh, KD);
  Eigen::MatrixXd G = b.vectors.transpose() * KD.D.asDiagonal() * b.vectors;
  EXPECT_LT((G - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(b.max_residual, 1e-10);
  EXPECT_TRUE(b.complete);
}

TEST(Eigen, LanczosMatchesDense) {
  auto mesh = make(2, 2);
  auto KD = assemble(*mesh);
  auto dense = eigendecompose(*mesh, KD);
  auto lan = eigendecompose(*mesh, KD, 8, 0, 5);
  EXPECT_FALSE(lan.complete);
  ASSERT_GE(lan.size(), 8);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(lan.values[i], dense.values[i], 1e-8 * std::max(1.0, dense.values[i]));
  EXPECT_THROW(eigendecompose(*mesh, KD, -1, 0), SizeError);
}

TEST(TreeSolver, ShiftedSolve) {
  auto mesh = make(2, 3);
  auto KD = assemble(*mesh);
  TreeStructure tree(*mesh);
  Eigen::VectorXd b = random_vector(mesh->num_nodes(), 4);
  for (double z : {0.01, 1.0, 50.0}) {
    TreeLDL<double> fac(tree, z);
    Eigen::VectorXd x = fac.solve(b);
    Eigen::VectorXd r = KD.K * x + z * KD.D.cwiseProduct(x) - b;
    EXPECT_LT(r.norm(), 1e-10 * b.norm()) << z;
  }
}

TEST(TreeSolver, PinnedSingularSolve) {
  auto mesh = make(2, 2);
  auto KD = assemble(*mesh);
  TreeStructure tree(*mesh);
  Eigen::VectorXd b = random_vector(mesh->num_nodes(), 6);
  b.array() -= b.mean();
  TreeLDL<double> fac(tree, 0.0, true);
  Eigen::VectorXd x = fac.solve(b);
  EXPECT_LT((KD.K * x - b).norm(), 1e-9 * b.norm());
}

TEST(TreeSolver, ComplexShift) {
  auto mesh = make(1, 4);
  auto KD = assemble(*mesh);
  TreeStructure tree(*mesh);
  using C = std::complex<double>;
  const C z(0.3, 2.0);
  TreeLDL<C> fac(tree, z);
  Eigen::VectorXcd b = random_vector(mesh->num_nodes(), 8).cast<C>();
  Eigen::VectorXcd x = fac.solve(b);
  Eigen::VectorXcd r = KD.K.cast<C>() * x + z * KD.D.cast<C>().cwiseProduct(x) - b;
  EXPECT_LT(r.norm(), 1e-10 * b.norm());
}

class CalculusAgreement : public ::testing::Test {
 protected:
  void SetUp() override {
    mesh = make(2, 2);
    dense = std::make_unique<SpectralCalculus>(mesh);
    res = std::make_unique<ResolventCalculus>(mesh);
    f = random_vector(mesh->num_nodes(), 10);
  }
  std::shared_ptr<const Mesh> mesh;
  std::unique_ptr<SpectralCalculus> dense;
  std::unique_ptr<ResolventCalculus> res;
  Eigen::VectorXd f;
};

TEST_F(CalculusAgreement, Heat) {
  for (double t : {0.05, 1.0, 20.0, 400.0}) {
    EXPECT_LT(rel(res->heat(f, t), dense->heat(f, t)), 1e-8) << t;
    EXPECT_LT(rel(res->heat_dt(f, t), dense->heat_dt(f, t)), 1e-7) << t;
  }
}

TEST_F(CalculusAgreement, Powers) {
  for (double s : {0.25, 0.5, 0.594, 0.9, 1.5, -0.3, -0.7}) {
    Eigen::VectorXd d = dense->power(f, s);
    EXPECT_LT(rel(res->power(f, s), d), 1e-7) << s;
  }
  EXPECT_LT(rel(res->frac_heat(f, 0.55), dense->frac_heat(f, 0.55)), 1e-7);
}

TEST_F(CalculusAgreement, SmallestEigenvalue) {
  // a safe lower estimate, within a factor of two of the true first eigenvalue
  const double l1 = dense->smallest_positive_eigenvalue();
  EXPECT_LE(res->smallest_positive_eigenvalue(), l1);
  EXPECT_GE(res->smallest_positive_eigenvalue(), 0.5 * l1 * (1 - 1e-8));
  EXPECT_GE(res->largest_eigenvalue_bound(), dense->basis().values.maxCoeff() * (1 - 1e-12));
}

TEST_F(CalculusAgreement, SemigroupAndGenerator) {
  const Calculus& c = *res;
  EXPECT_LT(rel(c.heat(c.heat(f, 0.7), 1.8), c.heat(f, 2.5)), 1e-8);
  EXPECT_NEAR(c.heat(f, 3.0).dot(mesh->mass()), f.dot(mesh->mass()), 1e-8 * f.cwiseAbs().sum());
  EXPECT_LT(rel(c.heat_dt(f, 1.0), -c.laplacian(c.heat(f, 1.0))), 1e-7);
  EXPECT_LT(rel(c.power(c.power(f, 0.5), 0.5), c.laplacian(f)), 1e-7);
  EXPECT_LT(rel(c.power(c.power(f, 0.3), -0.3), c.mean_zero(f)), 1e-7);
  EXPECT_NEAR(c.mean_zero(f).dot(mesh->mass()), 0.0, 1e-10);
}

TEST_F(CalculusAgreement, HeatKernelSymmetricAndPositive) {
  for (int x : {0, 17, 150})
    for (int y : {3, 90})
      EXPECT_NEAR(res->heat_kernel(x, y, 2.0), res->heat_kernel(y, x, 2.0), 1e-9);
  Eigen::VectorXd p = res->heat(res->delta(40), 0.5);
  EXPECT_GT(p.minCoeff(), -1e-10);
  EXPECT_NEAR(p.dot(mesh->mass()), 1.0, 1e-9);
}

TEST(Calculus, RejectsBadArguments) {
  auto mesh = make(1, 1);
  SpectralCalculus c(mesh);
  Eigen::VectorXd f = Eigen::VectorXd::Ones(mesh->num_nodes());
  EXPECT_THROW(c.heat(f, -1.0), DomainError);
  EXPECT_THROW(c.power(f, -1.5), DomainError);
  EXPECT_THROW(c.frac_heat(f, 0.0), DomainError);
  EXPECT_THROW(c.quasi_riesz(f, 1.0), DomainError);
}

TEST(Resolution, EigenmodeClosedForm) {
  // on an eigenfunction the time integral collapses to lambda^g e^{-lambda}
  auto mesh = make(1, 2);
  SpectralCalculus c(mesh);
  const auto& b = c.basis();
  for (int k : {1, 5, 20}) {
    Eigen::VectorXd phi = b.vectors.col(k);
    double lam = b.values[k];
    for (double g : {0.3, 0.5, 0.8}) {
      auto parts = resolution_split(c, phi, g, 4.0, 1e-10);
      Eigen::VectorXd sum = parts.small + parts.T + parts.U;
      EXPECT_LT(rel(sum, phi * std::pow(lam, g) * std::exp(-lam)), 1e-7) << k << " " << g;
    }
  }
  EXPECT_THROW(time_integral(c, Eigen::VectorXd::Ones(mesh->num_nodes()), 1.2, 0.0, 1.0), DomainError);
}

TEST(Scaling, ExponentsAndThreshold) {
  const double a = vicsek_alpha();
  EXPECT_NEAR(a, std::log(5.0) / std::log(3.0), 1e-15);
  EXPECT_NEAR(2 * a / (a + 1), 1.18863, 1e-5);
  EXPECT_NEAR(p_star(0.5, a), 2.0, 1e-12);
  EXPECT_NEAR(p_star(0.55, a), 1.30708, 1e-5);
  EXPECT_EQ(p_star(a / (a + 1), a), 1.0);
  EXPECT_EQ(p_star(0.65, a), 1.0);
  EXPECT_TRUE(std::isinf(p_star(1.0 / (a + 1), a)));
  EXPECT_TRUE(std::isinf(p_star(0.3, a)));
  // continuity at the upper end
  EXPECT_NEAR(p_star(a / (a + 1) - 1e-9, a), 1.0, 1e-6);
}

TEST(Scaling, ProfileInverseAndUpsilon) {
  ScalingProfile S;
  for (double r : {0.01, 0.5, 1.0, 3.0, 250.0}) EXPECT_NEAR(S.Psi_inverse(S.Psi(r)), r, 1e-12 * r);
  ScalingProfile C(vicsek_alpha(), ScalingProfile::Variant::Classical);
  EXPECT_NEAR(C.Psi(0.5), 0.25, 1e-15);
  EXPECT_NEAR(S.Phi(9.0), 25.0, 1e-12);
  // interior maximum at s* = (beta t / R)^{1/(beta-1)} > 1
  const double R = 1.0, t = 10.0, beta = S.beta;
  double s = std::pow(beta * t / R, 1.0 / (beta - 1.0));
  EXPECT_NEAR(S.Upsilon(R, t), (R / s) * (1.0 - 1.0 / beta), 1e-8);
}

TEST(Scaling, ScalarQuasiRieszCheck) {
  for (double eps : {0.1, 0.3, 0.5}) EXPECT_TRUE(scalar_rr2_check(eps).bounded) << eps;
  for (double eps : {0.6, 0.9}) EXPECT_FALSE(scalar_rr2_check(eps).bounded) << eps;
  EXPECT_NEAR(scalar_rr2_check(0.7).left_slope, -0.2, 1e-6);
  EXPECT_THROW(scalar_rr2_check(1.0), DomainError);
}
