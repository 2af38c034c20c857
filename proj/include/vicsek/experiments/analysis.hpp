#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vicsek/experiments/gn.hpp"
#include "vicsek/spectral/calculus.hpp"
#include "vicsek/spectral/resolution.hpp"
#include "vicsek/spectral/scaling.hpp"

namespace vicsek {

/// sqrt(u' D u): the L^2 norm for which the discrete Delta is self-adjoint.
inline double lumped_l2_norm(const Mesh& mesh, const Eigen::VectorXd& u) {
  return std::sqrt(u.dot(mesh.mass().cwiseProduct(u)));
}

/// ||Delta^gamma e^{-Delta} f||_p / ||grad f||_p.
inline double rr_ratio(const Calculus& calc, double gamma, double p, const Eigen::VectorXd& f) {
  double g = segment_lp_norm(calc.mesh(), gradient(calc.mesh(), f), p);
  if (!(g > 0.0)) throw DomainError("rr_ratio needs a nonconstant f");
  return lp_norm(calc.mesh(), calc.frac_heat(f, gamma), p) / g;
}

/// Ambient system V^(n + margin) with its mesh and resolvent calculus, built once per level.
struct LevelContext {
  std::shared_ptr<const CableSystem> X;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const Calculus> calc;
  MeshFunction g;  // g_n
  Eigen::VectorXd heat_g;  // e^{-Delta} g_n
};

inline LevelContext make_level(int n, int margin, int M) {
  if (margin < 1) throw DomainError("ambient margin must be at least one level");
  LevelContext c;
  c.X = std::make_shared<const CableSystem>(build_vicsek(2, n + margin));
  c.mesh = discretize(c.X, M);
  c.calc = std::make_shared<const ResolventCalculus>(c.mesh);
  c.g = build_gn(c.mesh, n);
  c.heat_g = c.calc->heat(c.g.values, 1.0);
  return c;
}

enum class Side { Holds, Fails, Threshold };

inline const char* side_name(Side s) {
  return s == Side::Holds ? "holds" : s == Side::Fails ? "fails" : "threshold";
}

struct PhasePoint {
  double gamma = 0.0, p = 0.0, p_star = 0.0;
  Side side = Side::Threshold;
  std::vector<double> ratios;  // R_n over the level range
  double growth = 0.0;         // R_top / R_{top-1}
  double predicted = 0.0;      // 3^{max((alpha+p-1)/p - gamma beta, -1/p)}
  bool grows = false;
  bool agrees = true;          // verdict matches the side; always true at the threshold
};

/// Side of the threshold with a no-verdict band of half-width `band` around p*.
inline Side phase_side(double p, double ps, double band) {
  if (std::abs(p - ps) < band) return Side::Threshold;
  return p < ps ? Side::Fails : Side::Holds;
}

inline PhasePoint phase_point(const std::vector<LevelContext>& levels, double gamma, double p,
                              double band, double growth_margin) {
  const double alpha = vicsek_alpha(), beta = alpha + 1.0;
  PhasePoint pt;
  pt.gamma = gamma;
  pt.p = p;
  pt.p_star = p_star(gamma, alpha);
  pt.side = phase_side(p, pt.p_star, band);
  for (const auto& L : levels) {
    Eigen::VectorXd fh = L.calc->power(L.heat_g, gamma);
    pt.ratios.push_back(lp_norm(*L.mesh, fh, p) / lp_norm_gradient(L.g, p));
  }
  const std::size_t k = pt.ratios.size();
  if (k < 2) throw DomainError("phase point needs two levels");
  pt.growth = pt.ratios[k - 1] / pt.ratios[k - 2];
  pt.predicted = std::pow(3.0, std::max((alpha + p - 1.0) / p - gamma * beta, -1.0 / p));
  pt.grows = pt.growth > 1.0 + growth_margin;
  if (pt.side == Side::Fails) pt.agrees = pt.grows;
  if (pt.side == Side::Holds) pt.agrees = !pt.grows;
  return pt;
}

inline std::vector<PhasePoint> phase_scan(const std::vector<LevelContext>& levels,
                                          const std::vector<double>& gammas,
                                          const std::vector<double>& ps, double band,
                                          double growth_margin) {
  std::vector<PhasePoint> out;
  for (double g : gammas)
    for (double p : ps) out.push_back(phase_point(levels, g, p, band, growth_margin));
  return out;
}

/// Exponent 2 gamma p / ((p-1) alpha') of the Nash inequality, alpha' = 2 alpha / (alpha+1).
inline double nash_exponent(double gamma, double p, double alpha) {
  double ap = 2.0 * alpha / (alpha + 1.0);
  return 2.0 * gamma * p / ((p - 1.0) * ap);
}

struct NashCheck {
  bool precondition = false;  // ||f||_p <= ||f||_1
  double slack = 0.0;         // lhs / rhs
};

inline NashCheck nash_check(const Calculus& calc, double gamma, double p, const Eigen::VectorXd& f) {
  if (!(p > 1.0)) throw DomainError("Nash check needs p > 1");
  const Mesh& mesh = calc.mesh();
  const double a = nash_exponent(gamma, p, vicsek_alpha(mesh.system().dimension()));
  NashCheck out;
  double fp = lp_norm(mesh, f, p), f1 = lp_norm(mesh, f, 1.0);
  out.precondition = fp <= f1;
  double rhs = std::pow(f1, a) * lp_norm(mesh, calc.power(f, gamma), p);
  out.slack = std::pow(fp, 1.0 + a) / rhs;
  return out;
}

/// Per-level growth exponent of the lower bound forced on R_n by the Nash chain.
inline double nash_chain_exponent(double gamma, double p, double alpha) {
  return ((alpha + p - 1.0) / p - gamma * (alpha + 1.0)) / alpha;
}

struct NegativeMechanism {
  double gamma = 0.0, p = 0.0;
  std::vector<double> heat_p, heat_1, grad_p;  // ||e^{-D} g_n||_p, ||e^{-D} g_n||_1, ||grad g_n||_p
  std::vector<double> lower_bound;             // ||f||_p^{1+a} / (||f||_1^a ||grad g_n||_p)
  std::vector<double> core_min;                // min over D_n of e^{-Delta} 1_U; NaN if D_n is empty
  double growth = 0.0;                         // lower_bound top-level factor
  double target = 0.0;                         // 5^{nash_chain_exponent}
};

inline NegativeMechanism negative_mechanism(const std::vector<LevelContext>& levels, double gamma,
                                            double p) {
  const double alpha = vicsek_alpha();
  const double a = nash_exponent(gamma, p, alpha);
  NegativeMechanism out;
  out.gamma = gamma;
  out.p = p;
  for (const auto& L : levels) {
    const Mesh& mesh = *L.mesh;
    double fp = lp_norm(mesh, L.heat_g, p), f1 = lp_norm(mesh, L.heat_g, 1.0);
    double gp = lp_norm_gradient(L.g, p);
    out.heat_p.push_back(fp);
    out.heat_1.push_back(f1);
    out.grad_p.push_back(gp);
    out.lower_bound.push_back(std::pow(fp, 1.0 + a) / (std::pow(f1, a) * gp));
    const int n = L.X->level() - 1;
    Subset U = central_core_copy(*L.X, std::max(n, 1));
    Eigen::VectorXd hu = L.calc->heat(indicator(mesh, U), 1.0);
    Subset D = inner_core(*L.X, U);
    // D_1 is empty: every point of a level-0 copy is within distance 1 of its complement
    out.core_min.push_back(D.empty() ? std::numeric_limits<double>::quiet_NaN() : min_over(mesh, hu, D));
  }
  const std::size_t k = out.lower_bound.size();
  out.growth = out.lower_bound[k - 1] / out.lower_bound[k - 2];
  out.target = std::pow(5.0, nash_chain_exponent(gamma, p, alpha));
  return out;
}

/// ||Delta^l f|| / (||Delta^g f||^theta ||Delta^m f||^{1-theta}) with l = theta g + (1-theta) m.
/// p = 2 uses the lumped norm, where the inequality is Hoelder on the spectral side.
inline double interpolation_check(const Calculus& calc, double gamma, double mu, double theta,
                                  double p, const Eigen::VectorXd& f) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("theta must lie in [0,1]");
  const double lam = theta * gamma + (1.0 - theta) * mu;
  const Mesh& mesh = calc.mesh();
  auto norm = [&](const Eigen::VectorXd& v) {
    return p == 2.0 ? lumped_l2_norm(mesh, v) : lp_norm(mesh, v, p);
  };
  auto pw = [&](double s) { return s == 0.0 ? calc.mean_zero(f) : calc.power(f, s); };
  return norm(pw(lam)) / (std::pow(norm(pw(gamma)), theta) * std::pow(norm(pw(mu)), 1.0 - theta));
}

struct GRHResult {
  double ratio = 0.0;       // ||grad u||_{L^inf(B)} Psi(r) / (Phi(r) mean_{2B} u)
  double grad_sup = 0.0;
  double mean = 0.0;
};

/// Solves for u harmonic on the open ball 2B with the given values at the
/// first mesh nodes outside it, then measures the reverse Hoelder ratio.
inline GRHResult grh_check(std::shared_ptr<const Mesh> mesh, int center, double r,
                           const std::function<double(int)>& boundary) {
  const auto& X = mesh->system();
  const CablePoint x = mesh->point(center);
  require_inside(X, x, 2.0 * r);
  auto d = mesh->hop_distances(center);
  const double h = mesh->h();
  const int n = mesh->num_nodes();
  std::vector<int> local(n, -1), inner;
  for (int i = 0; i < n; ++i)
    if (d[i] * h < 2.0 * r) {
      local[i] = static_cast<int>(inner.size());
      inner.push_back(i);
    }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(inner.size());
  for (int i : inner)
    for (const auto& l : mesh->neighbors(i)) {
      trips.emplace_back(local[i], local[i], 1.0);
      if (local[l.node] >= 0) {
        trips.emplace_back(local[i], local[l.node], -1.0);
      } else {
        u[l.node] = boundary(l.node);
        rhs[local[i]] += u[l.node];
      }
    }
  Eigen::SparseMatrix<double> A(inner.size(), inner.size());
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  Eigen::VectorXd sol = solver.solve(rhs);
  for (std::size_t k = 0; k < inner.size(); ++k) u[inner[k]] = sol[k];

  Subset B = ball(X, x, r), B2 = ball(X, x, 2.0 * r);
  GRHResult out;
  out.grad_sup = segment_lp_norm(*mesh, gradient(*mesh, u), std::numeric_limits<double>::infinity(), &B);
  out.mean = mean_over(*mesh, u, B2);
  ScalingProfile prof;
  if (out.mean > 0.0) out.ratio = out.grad_sup * prof.Psi(r) / (prof.Phi(r) * out.mean);
  return out;
}

struct AnnulusDecay {
  double r = 0.0;
  double T_constant = 0.0;   // ||T b||_{L^q(X \ 4B)} r^{beta gamma} / ||b||_q
  double U_constant = 0.0;   // ||U b||_q r^{beta gamma} / ||b||_q, split at r^beta
  double U0_constant = 0.0;  // ||U_0 b||_q / ||b||_q, split at time 1
};

/// b: nonnegative tent on the level-k skeleton at the origin (radius r = 3^k);
/// T and U parts of the resolution integral split at r^beta.
inline AnnulusDecay annulus_decay_check(const Calculus& calc, int k, double gamma, double q,
                                        double rtol = 1e-8) {
  const Mesh& mesh = calc.mesh();
  const auto& X = mesh.system();
  const double beta = vicsek_alpha(X.dimension()) + 1.0;
  const int s = origin_skeleton(X, k);
  Eigen::VectorXd b = skeleton_tent(mesh, k, s);
  const double r = static_cast<double>(pow3(k));
  const CablePoint c = skeleton_center(X, k, s);
  require_inside(X, c, 4.0 * r);
  Subset outside = ball(X, c, 4.0 * r).complement(X);
  const double bq = lp_norm(mesh, b, q);
  const double tr = std::pow(r, beta);
  auto parts = resolution_split(calc, b, gamma, tr, rtol);
  AnnulusDecay out;
  out.r = r;
  const double scale = std::pow(r, beta * gamma);
  out.T_constant = lp_norm(mesh, parts.T, q, &outside) * scale / bq;
  out.U_constant = lp_norm(mesh, parts.U, q) * scale / bq;
  auto parts0 = resolution_split(calc, b, gamma, 1.0, rtol);
  out.U0_constant = lp_norm(mesh, parts0.U, q) / bq;
  return out;
}

/// sup over the family of ||T_r f||_p / ||grad f||_p.
inline double small_time_check(const Calculus& calc, double gamma, double p, double r,
                               const std::vector<Eigen::VectorXd>& family) {
  double sup = 0.0;
  for (const auto& f : family) {
    double g = segment_lp_norm(calc.mesh(), gradient(calc.mesh(), f), p);
    if (!(g > 0.0)) continue;
    sup = std::max(sup, lp_norm(calc.mesh(), small_time_operator(calc, f, gamma, r), p) / g);
  }
  return sup;
}

/// Heat-smoothed seeded noise e^{-t Delta} xi.
inline Eigen::VectorXd smoothed_noise(const Calculus& calc, double t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd xi(calc.mesh().num_nodes());
  for (auto& v : xi) v = nd(rng);
  return calc.heat(xi, t);
}

}  // namespace vicsek
