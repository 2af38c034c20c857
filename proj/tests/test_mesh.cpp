#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "vicsek/geometry/skeleton.hpp"
#include "vicsek/mesh/io.hpp"
#include "vicsek/mesh/mesh.hpp"
#include "vicsek/mesh/norms.hpp"

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

}  // namespace

TEST(Mesh, NodeNumbering) {
  auto mesh = make(1, 4);
  const auto& X = mesh->system();
  const int V = X.num_vertices();
  EXPECT_EQ(mesh->num_nodes(), V + X.num_cables() * 3);
  for (int c = 0; c < X.num_cables(); ++c) {
    EXPECT_EQ(mesh->node(c, 0), X.cable(c).a);
    EXPECT_EQ(mesh->node(c, 4), X.cable(c).b);
    for (int j = 1; j < 4; ++j) {
      int i = mesh->node(c, j);
      EXPECT_EQ(i, V + c * 3 + j - 1);
      EXPECT_EQ(mesh->point(i).cable, c);
      EXPECT_DOUBLE_EQ(mesh->point(i).t, j / 4.0);
      EXPECT_EQ(mesh->node_at({c, j / 4.0}), i);
    }
  }
  EXPECT_EQ(mesh->node_at({0, 0.1}), -1);
}

TEST(Mesh, LumpedMassIsTheMeasure) {
  for (int M : {1, 2, 5}) {
    auto mesh = make(2, M);
    EXPECT_NEAR(mesh->mass().sum(), 100.0, 1e-10);
  }
  auto star = make(0, 1);
  EXPECT_DOUBLE_EQ(star->mass()[star->system().skeletons(0)[0].center], 2.0);
  for (int v = 0; v < 5; ++v)
    if (star->system().degree(v) == 1) { EXPECT_DOUBLE_EQ(star->mass()[v], 0.5); }
}

TEST(Mesh, RejectsBadResolution) {
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, 1));
  EXPECT_THROW(discretize(X, 0), DomainError);
  EXPECT_THROW(discretize(X, 100000000), SizeError);
}

TEST(Mesh, StiffnessAnnihilatesConstants) {
  auto mesh = make(2, 3);
  auto KD = assemble(*mesh);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(mesh->num_nodes());
  EXPECT_LT((KD.K * one).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SparseMatrix<double> T = KD.K.transpose();
  EXPECT_LT((KD.K - T).norm(), 1e-12);
}

TEST(Mesh, GreenIdentity) {
  auto mesh = make(2, 3);
  auto KD = assemble(*mesh);
  Eigen::VectorXd u = random_vector(mesh->num_nodes(), 1), v = random_vector(mesh->num_nodes(), 2);
  Eigen::VectorXd gu = gradient(*mesh, u), gv = gradient(*mesh, v);
  double lhs = u.dot(KD.K * v);
  double rhs = mesh->h() * gu.dot(gv);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(rhs));
}

TEST(Mesh, EnergyOfACoordinate) {
  // the first coordinate changes by 1 along every cable, so |u'| = 1 everywhere
  for (int n : {0, 1, 2}) {
    auto mesh = make(n, 3);
    Eigen::VectorXd u = mesh->sample([&](const CablePoint& p) { return coordinates(mesh->system(), p)[0]; });
    auto KD = assemble(*mesh);
    EXPECT_NEAR(u.dot(KD.K * u), mesh->system().measure(), 1e-10);
    EXPECT_NEAR(gradient(*mesh, u).cwiseAbs().minCoeff(), 1.0, 1e-12);
  }
  auto star = make(0, 1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(5);
  u[star->system().skeletons(0)[0].center] = 2.0;
  auto KD = assemble(*star);
  EXPECT_DOUBLE_EQ(u.dot(KD.K * u), 16.0);
}

TEST(Mesh, Interpolation) {
  auto mesh = make(1, 4);
  Eigen::VectorXd u = random_vector(mesh->num_nodes(), 3);
  const int c = 6;
  double a = u[mesh->node(c, 1)], b = u[mesh->node(c, 2)];
  EXPECT_NEAR(mesh->value_at(u, {c, 0.25 + 0.25 * 0.3}), 0.7 * a + 0.3 * b, 1e-12);
  EXPECT_NEAR(mesh->value_at(u, {c, 1.0}), u[mesh->node(c, 4)], 1e-12);
}

TEST(Norms, ConstantFunction) {
  auto mesh = make(1, 2);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(mesh->num_nodes());
  for (double p : {1.0, 1.5, 2.0, 3.0})
    EXPECT_NEAR(lp_norm(*mesh, one, p), std::pow(20.0, 1.0 / p), 1e-10);
  EXPECT_NEAR(lp_norm(*mesh, one, std::numeric_limits<double>::infinity()), 1.0, 1e-15);
  EXPECT_NEAR(integral(*mesh, one), 20.0, 1e-12);
}

TEST(Norms, ExactOnLinearPieces) {
  // one segment per cable; u is -1/2 at the center and 1/2 at the tips, so it changes sign inside every cable
  auto mesh = make(0, 1);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(5, 0.5);
  u[mesh->system().skeletons(0)[0].center] = -0.5;
  for (double p : {1.0, 1.3, 2.0, 4.0}) {
    double exact = 4.0 * 2.0 * std::pow(0.5, p + 1.0) / (p + 1.0);
    EXPECT_NEAR(power_integral(*mesh, u, p), exact, 1e-12) << p;
  }
  // nearly constant pieces take the quadrature branch
  Eigen::VectorXd w = u * 1e-7;
  w.array() += 1.0;
  for (double p : {1.5, 2.5}) {
    const double e = 0.5e-7;
    EXPECT_NEAR(power_integral(*mesh, w, p), 4.0 * (1.0 + p * (p - 1.0) * e * e / 6.0), 1e-12);
  }
}

TEST(Norms, RestrictedToSubsets) {
  auto mesh = make(1, 2);
  const auto& X = mesh->system();
  Eigen::VectorXd u = mesh->sample([&](const CablePoint& p) { return coordinates(X, p)[1]; });
  Subset S = Subset::from_segments({{3, 0.1, 0.7}});
  // u is affine along cable 3 with unit slope
  double y0 = coordinates(X, {3, 0.1})[1], y1 = coordinates(X, {3, 0.7})[1];
  EXPECT_NEAR(integral(*mesh, u, &S), 0.6 * (y0 + y1) / 2, 1e-12);
  EXPECT_NEAR(mean_over(*mesh, u, S), (y0 + y1) / 2, 1e-12);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(mesh->num_nodes());
  EXPECT_NEAR(lp_norm(*mesh, one, 2.0, &S), std::sqrt(0.6), 1e-12);
  EXPECT_THROW(mean_over(*mesh, u, Subset()), DomainError);
}

TEST(Norms, GradientNorm) {
  auto mesh = make(1, 4);
  MeshFunction u{mesh, mesh->sample([&](const CablePoint& p) { return 3.0 * coordinates(mesh->system(), p)[0]; })};
  EXPECT_NEAR(lp_norm_gradient(u, 2.0), 3.0 * std::sqrt(20.0), 1e-10);
  EXPECT_NEAR(lp_norm_gradient(u, 1.0), 60.0, 1e-10);
}

TEST(Norms, RadialExtensionIsConstantOnBranches) {
  auto mesh = make(2, 2);
  const auto& X = mesh->system();
  Subset diag = diagonal_subset(X, 2, 0);
  auto u = radial_extend(mesh, diag, [&](const CablePoint& p) { return coordinates(X, p)[0]; });
  DistanceField field(X, diag);
  for (int i = 0; i < mesh->num_nodes(); ++i) {
    auto q = field.nearest(mesh->point(i)).second;
    EXPECT_NEAR(u.values[i], coordinates(X, q)[0], 1e-12);
  }
  Subset broken = Subset::from_segments({{0, 0.0, 1.0}, {90, 0.0, 1.0}});
  EXPECT_THROW(radial_extend(mesh, broken, [](const CablePoint&) { return 0.0; }), ContractError);
}

TEST(Io, CsvRoundTrip) {
  auto mesh = make(1, 3);
  MeshFunction u{mesh, random_vector(mesh->num_nodes(), 9)};
  std::stringstream ss;
  write_csv(ss, u);
  auto v = read_csv(ss, mesh);
  EXPECT_EQ((u.values - v.values).cwiseAbs().maxCoeff(), 0.0);
  std::stringstream partial("node,value\n0,1\n");
  EXPECT_THROW(read_csv(partial, mesh), ContractError);
  std::stringstream bad("node,value\n100000,1\n");
  EXPECT_THROW(read_csv(bad, mesh), ContractError);
}
