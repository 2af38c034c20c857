#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vicsek/cz/decompose.hpp"
#include "vicsek/cz/maximal.hpp"
#include "vicsek/cz/partition.hpp"
#include "vicsek/cz/whitney.hpp"
#include "vicsek/experiments/gn.hpp"

using namespace vicsek;

namespace {

std::shared_ptr<const Mesh> make(int n, int M) {
  return discretize(std::make_shared<const CableSystem>(build_vicsek(2, n)), M);
}

// Brute force: average over every ball B(c, h 2^k) and spread it to the nodes the ball contains.
Eigen::VectorXd brute_maximal(const Mesh& mesh, const Eigen::VectorXd& w) {
  const int n = mesh.num_nodes();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    auto hop = mesh.hop_distances(c);
    int depth = *std::max_element(hop.begin(), hop.end());
    for (int R = 1;; R *= 2) {
      double m = 0.0, I = 0.0;
      for (int s = 0; s < mesh.num_segments(); ++s) {
        auto [a, b] = mesh.segment_nodes(s);
        if (std::max(hop[a], hop[b]) <= R) {
          m += mesh.h();
          I += mesh.h() * w[s];
        }
      }
      for (int x = 0; x < n; ++x)
        if (hop[x] < R) out[x] = std::max(out[x], I / m);
      if (R > depth) break;
    }
  }
  return out;
}

std::vector<char> ball_mask(const Mesh& mesh, int center, double r) {
  auto hop = mesh.hop_distances(center);
  std::vector<char> m(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) m[i] = hop[i] * mesh.h() < r;
  return m;
}

}  // namespace

TEST(Maximal, ConstantDensity) {
  auto mesh = make(2, 2);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(mesh->num_segments(), 3.5);
  EXPECT_LT((maximal_function(*mesh, w).array() - 3.5).abs().maxCoeff(), 1e-12);
}

TEST(Maximal, MatchesBruteForce) {
  auto mesh = make(1, 3);
  std::mt19937 rng(2);
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd w(mesh->num_segments());
  for (auto& x : w) x = e(rng);
  Eigen::VectorXd fast = maximal_function(*mesh, w), slow = brute_maximal(*mesh, w);
  EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Maximal, DominatesAdjacentAverage) {
  auto mesh = make(2, 2);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(mesh->num_segments());
  for (auto& x : w) x = u(rng);
  Eigen::VectorXd Mw = maximal_function(*mesh, w);
  for (int i = 0; i < mesh->num_nodes(); ++i) {
    double s = 0.0;
    for (const auto& l : mesh->neighbors(i)) s += w[l.segment];
    EXPECT_GE(Mw[i] + 1e-12, s / mesh->neighbors(i).size());
  }
  Eigen::VectorXd neg = -w;
  EXPECT_THROW(maximal_function(*mesh, neg), DomainError);
}

TEST(Whitney, BallsStayInsideAndCover) {
  auto mesh = make(4, 1);
  const int center = mesh->system().skeletons(3)[0].center;
  auto omega = ball_mask(*mesh, center, 20.0);
  Covering cov = whitney_cover(*mesh, omega);
  ASSERT_FALSE(cov.balls.empty());
  const auto& X = mesh->system();
  std::vector<char> covered(mesh->num_nodes(), 0);
  for (const auto& B : cov.balls) {
    EXPECT_TRUE(omega[B.center]);
    EXPECT_NEAR(B.radius, B.gap / 3.0, 1e-15);
    auto hop = mesh->hop_distances(B.center);
    for (int i = 0; i < mesh->num_nodes(); ++i)
      if (hop[i] * mesh->h() < B.radius) {
        EXPECT_TRUE(omega[i]);
        covered[i] = 1;
      }
  }
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (omega[i]) { EXPECT_TRUE(covered[i]) << i; }
  // the selected small balls are disjoint
  for (std::size_t i = 0; i < cov.balls.size(); ++i)
    for (std::size_t j = i + 1; j < cov.balls.size(); ++j) {
      double d = tree_distance(X, mesh->point(cov.balls[i].center), mesh->point(cov.balls[j].center));
      EXPECT_GE(d + 1e-12, (cov.balls[i].gap + cov.balls[j].gap) / 30.0);
    }
  EXPECT_GE(cov.comparability, 1.0);
  EXPECT_GE(cov.overlap, 1);
}

TEST(Whitney, DegenerateMasks) {
  auto mesh = make(1, 1);
  std::vector<char> none(mesh->num_nodes(), 0), all(mesh->num_nodes(), 1);
  EXPECT_THROW(whitney_cover(*mesh, none), DomainError);
  EXPECT_THROW(whitney_cover(*mesh, all), DomainError);
  EXPECT_THROW(whitney_cover(*mesh, std::vector<char>(3, 1)), ContractError);
}

TEST(Partition, BumpShape) {
  EXPECT_EQ(bump(0.0), 1.0);
  EXPECT_EQ(bump(0.25), 1.0);
  EXPECT_EQ(bump(0.75), 0.0);
  EXPECT_EQ(bump(2.0), 0.0);
  EXPECT_NEAR(bump(0.5), 0.5, 1e-15);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double t = 0.25 + 0.5 * i / 10000.0, dt = 1e-7;
    worst = std::max(worst, std::abs(bump(t + dt) - bump(t)) / dt);
  }
  EXPECT_NEAR(worst, kBumpSlope, 1e-4);
}

TEST(Partition, SumsToOneOnOmega) {
  auto mesh = make(4, 1);
  const int center = mesh->system().skeletons(3)[0].center;
  auto omega = ball_mask(*mesh, center, 40.0);
  Covering cov = whitney_cover(*mesh, omega);
  PartitionOfUnity pu = build_partition(*mesh, cov);
  ASSERT_EQ(pu.parts.size(), cov.balls.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(mesh->num_nodes());
  for (const auto& part : pu.parts)
    for (std::size_t k = 0; k < part.nodes.size(); ++k) {
      EXPECT_GE(part.chi[k], 0.0);
      EXPECT_LE(part.chi[k], 1.0 + 1e-15);
      sum[part.nodes[k]] += part.chi[k];
    }
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (omega[i]) { EXPECT_NEAR(sum[i], 1.0, 1e-12) << i; }
  auto pc = check_partition(*mesh, cov, pu);
  EXPECT_LE(pc.sum_error, 1e-12);
  EXPECT_TRUE(pc.range_ok);
  EXPECT_TRUE(pc.support_ok);
  EXPECT_LE(pc.max_grad_radius, pc.grad_bound);
  EXPECT_EQ(pc.j_violations, 0);
}

class Decomposition : public ::testing::Test {
 protected:
  void SetUp() override {
    mesh = make(3, 2);
    u = build_gn(mesh, 2);
    Mw = gradient_maximal(u, 2.0);
    top = std::sqrt(Mw.maxCoeff());
  }
  std::shared_ptr<const Mesh> mesh;
  MeshFunction u;
  Eigen::VectorXd Mw;
  double top = 0.0;
};

TEST_F(Decomposition, EmptyLevelSet) {
  auto cz = cz_decompose(u, 1.01 * top, 2.0, &Mw);
  EXPECT_TRUE(cz.report.omega_empty);
  EXPECT_TRUE(cz.cover.balls.empty());
  EXPECT_EQ((cz.g.values - u.values).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(cz_decompose(u, 0.0), DomainError);
  EXPECT_THROW(cz_decompose(u, 1.0, 2.5), DomainError);
}

TEST_F(Decomposition, Reconstruction) {
  for (double fr : {0.8, 0.5}) {
    auto cz = cz_decompose(u, fr * top, 2.0, &Mw);
    ASSERT_FALSE(cz.report.omega_empty);
    Eigen::VectorXd sum = cz.g.values;
    for (std::size_t i = 0; i < cz.b.size(); ++i)
      for (std::size_t k = 0; k < cz.b[i].size(); ++k) sum[cz.partition.parts[i].nodes[k]] += cz.b[i][k];
    EXPECT_LT((sum - u.values).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(cz.report.all());
    EXPECT_TRUE(cz.report.b_support_ok);
    EXPECT_EQ(cz.balls.size(), cz.cover.balls.size());
    // g agrees with u off Omega
    for (int i = 0; i < mesh->num_nodes(); ++i)
      if (!cz.cover.omega[i]) { EXPECT_EQ(cz.g.values[i], u.values[i]); }
  }
}

TEST_F(Decomposition, LevelSetIsTheMaximalSuperlevel) {
  const double lambda = 0.5 * top;
  auto omega = level_set(*mesh, Mw, lambda, 2.0);
  for (int i = 0; i < mesh->num_nodes(); ++i) EXPECT_EQ(static_cast<bool>(omega[i]), Mw[i] > std::pow(lambda, 2.0));
}

TEST_F(Decomposition, MeasureBoundedByEnergy) {
  // weak-type bound: lambda^q m(Omega) <= C ||grad u||_q^q with a modest constant
  auto cz = cz_decompose(u, 0.5 * top, 2.0, &Mw);
  EXPECT_GT(cz.report.measure_ratio, 0.0);
  EXPECT_LT(cz.report.measure_ratio, 1e3);
  EXPECT_LT(cz.report.grad_g_q_ratio, 10.0);
}
