#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vicsek/experiments/analysis.hpp"
#include "vicsek/experiments/fits.hpp"
#include "vicsek/experiments/gn.hpp"
#include "vicsek/experiments/poincare.hpp"

using namespace vicsek;

namespace {

std::shared_ptr<const Mesh> make(int n, int M) {
  return discretize(std::make_shared<const CableSystem>(build_vicsek(2, n)), M);
}

}  // namespace

TEST(Fits, ExactLine) {
  std::vector<double> x{0, 1, 2, 3, 4}, y;
  for (double v : x) y.push_back(1.5 - 0.25 * v);
  auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, -0.25, 1e-14);
  EXPECT_NEAR(f.intercept, 1.5, 1e-14);
  EXPECT_NEAR(f.rms_residual, 0.0, 1e-14);
  EXPECT_EQ(f.points, 5);
  EXPECT_THROW(fit_line({1.0}, {2.0}), DomainError);
}

TEST(Fits, HandComputedLeastSquares) {
  // x = 0,1,2, y = 0,2,1: slope 1/2, intercept 1/2, residuals -1/2, 1, -1/2
  auto f = fit_line({0, 1, 2}, {0, 2, 1});
  EXPECT_NEAR(f.slope, 0.5, 1e-14);
  EXPECT_NEAR(f.intercept, 0.5, 1e-14);
  EXPECT_NEAR(f.rms_residual, std::sqrt(0.5), 1e-14);
}

TEST(Fits, CommonSlopeIgnoresIntercepts) {
  std::vector<std::vector<double>> xs{{0, 1, 2}, {5, 6, 7, 8}}, ys(2);
  for (double v : xs[0]) ys[0].push_back(3.0 + 2.0 * v);
  for (double v : xs[1]) ys[1].push_back(-7.0 + 2.0 * v);
  auto f = fit_common_slope(xs, ys);
  EXPECT_NEAR(f.slope, 2.0, 1e-13);
  EXPECT_NEAR(f.rms_residual, 0.0, 1e-13);
}

TEST(Fits, SmallScaleVolumeIsLinear) {
  // below radius 1 every vertex ball is a star of degree many unit segments
  auto X = build_vicsek(2, 3);
  auto f = volume_growth_fit(X, 2, 6, 6, 3);
  EXPECT_NEAR(f.small_scale.slope, 1.0, 1e-12);
  EXPECT_EQ(f.centers.size(), 6u);
  EXPECT_EQ(f.log_r.size(), 6u);
  EXPECT_NEAR(std::exp(f.log_r.back()), 4.5, 1e-12);
  EXPECT_THROW(volume_growth_fit(X, 4, 2, 3, 1), DomainError);
}

TEST(Gn, EnergyAndShape) {
  // tent on V^(n): slope 3^{-n} along four half-diagonals of length 3^n
  auto mesh = make(3, 2);
  for (int n = 1; n <= 2; ++n) {
    auto g = build_gn(mesh, n);
    double energy = std::pow(lp_norm_gradient(g, 2.0), 2.0);
    EXPECT_NEAR(energy, 4.0 / std::pow(3.0, n), 1e-12) << n;
    EXPECT_NEAR(g.values.maxCoeff(), 1.0, 1e-15);
    EXPECT_GE(g.values.minCoeff(), 0.0);
    EXPECT_LT(gn_harmonic_residual(g, n), 1e-10);
    // on the central copy the tent stays above 1 - 3^{n-1}/3^n
    EXPECT_NEAR(min_over(*mesh, g.values, central_core_copy(mesh->system(), n)), 2.0 / 3.0, 1e-12);
  }
  EXPECT_THROW(build_gn(mesh, 3), DomainError);
}

TEST(Gn, EnergyMinimizingAmongInterpolants) {
  // harmonic off the center and corners: perturbing inside the skeleton raises the energy
  auto mesh = make(2, 2);
  auto g = build_gn(mesh, 1);
  const auto& X = mesh->system();
  const auto& W = X.skeletons(1)[origin_skeleton(X, 1)];
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  const double e0 = std::pow(lp_norm_gradient(g, 2.0), 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    MeshFunction h = g;
    for (int i = 0; i < mesh->num_nodes(); ++i) {
      CablePoint p = mesh->point(i);
      bool pinned = i == W.center || std::find(W.corners.begin(), W.corners.end(), i) != W.corners.end();
      if (!pinned && X.skeleton_of_cable(p.cable, 1) == origin_skeleton(X, 1) && vertex_at(X, p) < 0)
        h.values[i] += 0.01 * nd(rng);
    }
    EXPECT_GT(std::pow(lp_norm_gradient(h, 2.0), 2.0), e0);
  }
}

TEST(Poincare, DenseMatchesIterative) {
  auto dense = poincare_skeleton_constant(2, 2, 100000, 1);
  auto iter = poincare_skeleton_constant(2, 2, 0, 1);
  EXPECT_EQ(dense.method, "dense");
  EXPECT_EQ(iter.method, "lanczos");
  EXPECT_NEAR(iter.whole, dense.whole, 1e-7 * dense.whole);
  EXPECT_NEAR(iter.diag, dense.diag, 1e-7 * dense.diag);
  EXPECT_GT(dense.whole, dense.diag);
}

TEST(Poincare, ExtremalIsAConstrainedRayleighMaximizer) {
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, 1));
  auto mesh = discretize(X, 3);
  auto KD = assemble(*mesh);
  Subset diag = diagonal_subset(*X, 1, 0);
  Eigen::VectorXd w = diagonal_mean_weights(*mesh, diag);
  auto [val, f] = constrained_extremal_dense(KD.K, KD.D, w);
  EXPECT_NEAR(w.dot(f), 0.0, 1e-12 * f.norm());
  EXPECT_NEAR(f.dot(KD.D.cwiseProduct(f)) / f.dot(KD.K * f), val, 1e-10 * val);
  // random admissible directions never beat it
  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(mesh->num_nodes());
    for (auto& x : v) x = nd(rng);
    v -= w * (w.dot(v) / w.squaredNorm());
    EXPECT_LE(v.dot(KD.D.cwiseProduct(v)) / v.dot(KD.K * v), val * (1 + 1e-12));
  }
  // the weights compute the mean over the diagonals exactly for P1 functions
  Eigen::VectorXd u = mesh->sample([&](const CablePoint& p) { return coordinates(*X, p)[0]; });
  EXPECT_NEAR(w.dot(u), mean_over(*mesh, u, diag), 1e-12);
}

TEST(Poincare, LevelRatioIsRoughlyThreeToTheBeta) {
  // scaling the skeleton by 3 multiplies the whole-space constant by about 3^beta
  auto a = poincare_skeleton_constant(1, 4, 100000);
  auto b = poincare_skeleton_constant(2, 4, 100000);
  const double beta = vicsek_alpha() + 1.0;
  EXPECT_NEAR(std::log(b.whole / a.whole) / std::log(3.0), beta, 0.3);
}

TEST(Analysis, NashExponent) {
  const double a = vicsek_alpha(), ap = 2 * a / (a + 1);
  EXPECT_NEAR(nash_exponent(0.5, 2.0, a), 2.0 / ap, 1e-14);
  EXPECT_NEAR(nash_exponent(0.6, 3.0, a), 2 * 0.6 * 3 / (2 * ap), 1e-14);
  EXPECT_NEAR(nash_chain_exponent(0.5, 2.0, a), ((a + 1) / 2 - 0.5 * (a + 1)) / a, 1e-14);
}

TEST(Analysis, PhaseSides) {
  EXPECT_EQ(phase_side(1.1, 2.0, 0.05), Side::Fails);
  EXPECT_EQ(phase_side(3.0, 2.0, 0.05), Side::Holds);
  EXPECT_EQ(phase_side(2.03, 2.0, 0.05), Side::Threshold);
  EXPECT_STREQ(side_name(Side::Holds), "holds");
}

TEST(Analysis, InterpolationIsTightOnEigenmodes) {
  auto mesh = make(2, 2);
  SpectralCalculus calc(mesh);
  const auto& b = calc.basis();
  for (int k : {1, 7, 40}) {
    Eigen::VectorXd phi = b.vectors.col(k);
    for (double th : {0.0, 0.3, 1.0}) EXPECT_NEAR(interpolation_check(calc, 0.7, 0.2, th, 2.0, phi), 1.0, 1e-9);
  }
  // Hoelder on the spectral side: never above 1 at p = 2
  Eigen::VectorXd f = smoothed_noise(calc, 0.5, 3);
  for (double th : {0.25, 0.5, 0.75}) EXPECT_LE(interpolation_check(calc, 0.7, 0.2, th, 2.0, f), 1.0 + 1e-10);
  for (double th : {0.0, 1.0}) EXPECT_NEAR(interpolation_check(calc, 0.7, 0.2, th, 3.0, f), 1.0, 1e-10);
  EXPECT_THROW(interpolation_check(calc, 0.7, 0.2, 1.5, 2.0, f), DomainError);
}

TEST(Analysis, LumpedNormAndRatios) {
  auto mesh = make(1, 2);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(mesh->num_nodes());
  EXPECT_NEAR(lumped_l2_norm(*mesh, one), std::sqrt(20.0), 1e-12);
  ResolventCalculus calc(mesh);
  EXPECT_THROW(rr_ratio(calc, 0.5, 2.0, one), DomainError);
  Eigen::VectorXd f = smoothed_noise(calc, 0.2, 1);
  EXPECT_GT(rr_ratio(calc, 0.5, 2.0, f), 0.0);
  EXPECT_EQ(smoothed_noise(calc, 0.2, 1), f);
}

TEST(Analysis, NashSlackIsScaleInvariantInAmplitude) {
  // numerator and denominator are both homogeneous of degree 1 + a
  auto mesh = make(2, 2);
  ResolventCalculus calc(mesh);
  auto g = build_gn(mesh, 1);
  Eigen::VectorXd f = calc.heat(g.values, 1.0);
  auto a = nash_check(calc, 0.55, 2.0, f);
  auto b = nash_check(calc, 0.55, 2.0, Eigen::VectorXd(7.0 * f));
  EXPECT_NEAR(a.slack, b.slack, 1e-9 * a.slack);
  EXPECT_TRUE(a.precondition);
  EXPECT_THROW(nash_check(calc, 0.55, 1.0, f), DomainError);
}

TEST(Analysis, PhasePointOnTwoLevels) {
  std::vector<LevelContext> levels{make_level(1, 1, 2), make_level(2, 1, 2)};
  auto pt = phase_point(levels, 0.5, 1.1, 0.05, 0.02);
  ASSERT_EQ(pt.ratios.size(), 2u);
  EXPECT_NEAR(pt.growth, pt.ratios[1] / pt.ratios[0], 1e-15);
  EXPECT_EQ(pt.side, Side::Fails);
  const double a = vicsek_alpha();
  EXPECT_NEAR(pt.predicted, std::pow(3.0, (a + 0.1) / 1.1 - 0.5 * (a + 1)), 1e-12);
  EXPECT_THROW(make_level(1, 0, 1), DomainError);
  auto nm = negative_mechanism(levels, 0.5, 1.1);
  EXPECT_TRUE(std::isnan(nm.core_min[0]));
  EXPECT_GT(nm.core_min[1], 0.0);
}

TEST(Analysis, GrhHarmonicSolve) {
  // constant boundary data gives the constant harmonic function and a zero gradient
  auto mesh = make(3, 2);
  const int c = mesh->system().skeletons(2)[0].center;
  auto r = grh_check(mesh, c, 3.0, [](int) { return 2.5; });
  EXPECT_NEAR(r.mean, 2.5, 1e-12);
  EXPECT_NEAR(r.grad_sup, 0.0, 1e-10);
  EXPECT_THROW(grh_check(mesh, mesh->system().attachment(), 3.0, [](int) { return 1.0; }), MarginError);
}
