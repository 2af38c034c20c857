#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "vicsek/cz/maximal.hpp"
#include "vicsek/cz/partition.hpp"
#include "vicsek/mesh/norms.hpp"
#include "vicsek/spectral/scaling.hpp"

namespace vicsek {

struct BallRecord {
  int center = -1;
  double radius = 0.0;
  std::string cls;  // "small", "big" or "J"
  int soul_level = -1;
  double c = 0.0;             // constant subtracted from u
  double measure = 0.0;       // m(B_i)
  double grad_u_q = 0.0;      // integral over B_i of |grad u|^q
  double b_q = 0.0;           // integral of |b_i|^q
  double grad_b_q = 0.0;      // integral of |grad b_i|^q
  double b_ratio = 0.0;       // b_q / (max(r^{alpha+q-1}, r^q) grad_u_q)
  double grad_b_ratio = 0.0;  // grad_b_q / grad_u_q
  double density_ratio = 0.0; // grad_u_q / (lambda^q m(B_i))
  bool support_ok = true;
};

/// The seven properties, each with the measured constant it rests on.
struct CZReport {
  bool omega_empty = false;
  double reconstruction_error = 0.0;
  bool support_g_in_support_u = true;  // reported only
  double grad_g_sup_ratio = 0.0;       // ||grad g||_inf / lambda
  double b_ratio = 0.0;                // max over balls
  double grad_b_ratio = 0.0;
  double density_ratio = 0.0;
  double measure_ratio = 0.0;          // lambda^q sum m(B_i) / ||grad u||_q^q
  int overlap = 0;
  double grad_g_q_ratio = 0.0;         // ||grad g||_q / ||grad u||_q
  double comparability = 1.0;
  bool b_support_ok = true;
  bool property[7] = {true, true, true, true, true, true, true};

  bool all() const { return std::all_of(property, property + 7, [](bool b) { return b; }); }
};

struct CZDecomposition {
  MeshFunction u, g;
  double lambda = 0.0, q = 2.0;
  Covering cover;
  PartitionOfUnity partition;
  std::vector<std::vector<double>> b;  // nodal values of b_i on partition.parts[i].nodes
  std::vector<BallRecord> balls;
  CZReport report;
};

/// Integral of |v|^q and |grad v|^q for a function given on a node list,
/// zero at every other node.
inline std::pair<double, double> local_power_integrals(const Mesh& mesh,
                                                       const std::vector<int>& nodes,
                                                       const std::vector<double>& vals,
                                                       double q) {
  std::unordered_map<int, double> at;
  for (std::size_t k = 0; k < nodes.size(); ++k) at[nodes[k]] = vals[k];
  auto val = [&](int v) {
    auto it = at.find(v);
    return it == at.end() ? 0.0 : it->second;
  };
  double iv = 0.0, ig = 0.0;
  const double h = mesh.h();
  for (auto [s, slope] : local_slopes(mesh, nodes, vals)) {
    auto [a, b] = mesh.segment_nodes(s);
    iv += linear_power_integral(val(a), val(b), h, q);
    ig += h * std::pow(std::abs(slope), q);
  }
  return {iv, ig};
}

/// Omega = {M(|grad u|^q)^{1/q} > lambda} as a node mask.
inline std::vector<char> level_set(const Mesh& mesh, const Eigen::VectorXd& Mw, double lambda,
                                   double q) {
  std::vector<char> omega(mesh.num_nodes());
  const double t = std::pow(lambda, q);
  for (int i = 0; i < mesh.num_nodes(); ++i) omega[i] = Mw[i] > t;
  return omega;
}

inline Eigen::VectorXd gradient_maximal(const MeshFunction& u, double q) {
  Eigen::VectorXd w = gradient(u).cwiseAbs().array().pow(q);
  return maximal_function(*u.mesh, w);
}

/// Sobolev Calderon-Zygmund decomposition of u at height lambda. Mw may carry
/// a precomputed gradient_maximal(u, q) when sweeping lambda.
inline CZDecomposition cz_decompose(const MeshFunction& u, double lambda, double q = 2.0,
                                    const Eigen::VectorXd* Mw = nullptr) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(q >= 1.0 && q < 2.0 + 1e-12)) throw DomainError("q must lie in [1, 2]");
  const Mesh& mesh = *u.mesh;
  const auto& X = mesh.system();
  const double alpha = vicsek_alpha(X.dimension());

  CZDecomposition out;
  out.u = u;
  out.g = u;
  out.lambda = lambda;
  out.q = q;
  Eigen::VectorXd grad_u = gradient(u);
  const double grad_u_total = segment_power_integral(mesh, grad_u, q);
  const double u_scale = std::max(1.0, u.values.cwiseAbs().maxCoeff());

  auto omega = level_set(mesh, Mw ? *Mw : gradient_maximal(u, q), lambda, q);
  if (std::none_of(omega.begin(), omega.end(), [](char c) { return c; })) {
    out.report.omega_empty = true;
    out.report.grad_g_sup_ratio = grad_u.cwiseAbs().maxCoeff() / lambda;
    out.report.grad_g_q_ratio = grad_u_total > 0.0 ? 1.0 : 0.0;
    return out;
  }
  if (omega[X.attachment()])
    throw MarginError("level set reaches the truncation boundary", X.level() + 1);

  out.cover = whitney_cover(mesh, omega);
  out.partition = build_partition(mesh, out.cover);
  const auto& cov = out.cover;
  auto& rep = out.report;
  rep.overlap = cov.overlap;
  rep.comparability = cov.comparability;

  double sum_measure = 0.0;
  for (std::size_t i = 0; i < cov.balls.size(); ++i) {
    const auto& B = cov.balls[i];
    const auto& part = out.partition.parts[i];
    BallRecord rec;
    rec.center = B.center;
    rec.radius = B.radius;
    const bool j = cov.in_J(static_cast<int>(i));
    rec.cls = j ? "J" : cov.is_big(static_cast<int>(i)) ? "big" : "small";
    rec.soul_level = part.soul_level;
    const CablePoint x = mesh.point(B.center);
    Subset Bi = ball(X, x, B.radius);
    rec.measure = Bi.measure();
    rec.c = j ? mean_over(mesh, u.values, part.second_soul) : mean_over(mesh, u.values, Bi);
    rec.grad_u_q = segment_power_integral(mesh, grad_u, q, &Bi);

    std::vector<double> bi(part.nodes.size());
    for (std::size_t k = 0; k < part.nodes.size(); ++k) {
      bi[k] = (u.values[part.nodes[k]] - rec.c) * part.chi[k];
      out.g.values[part.nodes[k]] -= bi[k];
      if (bi[k] != 0.0 && !(tree_distance(X, x, mesh.point(part.nodes[k])) < B.radius))
        rec.support_ok = false;
    }
    std::tie(rec.b_q, rec.grad_b_q) = local_power_integrals(mesh, part.nodes, bi, q);
    // u constant on B_i leaves b_i at rounding level; count that as zero.
    const double floor_q = std::pow(1e-12 * u_scale, q) * rec.measure;
    auto ratio = [&](double a, double b) { return a <= floor_q ? 0.0 : a / b; };
    double scale = std::max(std::pow(B.radius, alpha + q - 1.0), std::pow(B.radius, q));
    rec.b_ratio = ratio(rec.b_q, scale * rec.grad_u_q);
    rec.grad_b_ratio = ratio(rec.grad_b_q, rec.grad_u_q);
    rec.density_ratio = rec.grad_u_q / (std::pow(lambda, q) * rec.measure);

    rep.b_support_ok = rep.b_support_ok && rec.support_ok;
    rep.b_ratio = std::max(rep.b_ratio, rec.b_ratio);
    rep.grad_b_ratio = std::max(rep.grad_b_ratio, rec.grad_b_ratio);
    rep.density_ratio = std::max(rep.density_ratio, rec.density_ratio);
    sum_measure += rec.measure;
    out.b.push_back(std::move(bi));
    out.balls.push_back(std::move(rec));
  }

  Eigen::VectorXd sum_b = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (std::size_t i = 0; i < out.b.size(); ++i)
    for (std::size_t k = 0; k < out.b[i].size(); ++k)
      sum_b[out.partition.parts[i].nodes[k]] += out.b[i][k];
  rep.reconstruction_error = (u.values - out.g.values - sum_b).cwiseAbs().maxCoeff();

  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (u.values[v] == 0.0 && std::abs(out.g.values[v]) > 1e-14) rep.support_g_in_support_u = false;
  Eigen::VectorXd grad_g = gradient(out.g);
  rep.grad_g_sup_ratio = grad_g.cwiseAbs().maxCoeff() / lambda;
  rep.grad_g_q_ratio =
      grad_u_total > 0.0 ? std::pow(segment_power_integral(mesh, grad_g, q) / grad_u_total, 1.0 / q)
                         : 0.0;
  rep.measure_ratio = grad_u_total > 0.0 ? std::pow(lambda, q) * sum_measure / grad_u_total : 0.0;

  auto finite = [](double v) { return std::isfinite(v); };
  rep.property[0] = rep.reconstruction_error <= 1e-10;
  rep.property[1] = finite(rep.grad_g_sup_ratio);
  rep.property[2] = rep.b_support_ok && finite(rep.b_ratio) && finite(rep.grad_b_ratio) &&
                    finite(rep.density_ratio);
  rep.property[3] = finite(rep.measure_ratio);
  rep.property[4] = rep.overlap >= 1;
  rep.property[5] = finite(rep.grad_g_q_ratio);
  rep.property[6] = finite(rep.comparability) && rep.comparability >= 1.0;
  return out;
}

struct PoincareOnBall {
  double lhs_ball = 0.0;  // integral over B of |f - c|^q
  double lhs_soul = 0.0;  // integral over the soul of |f - c|^q
  double rhs = 0.0;       // integral over B of |grad f|^q
  double c = 0.0;         // shared constant: mean over the soul
  double ball_ratio = 0.0;  // lhs_ball / (r^{alpha+q-1} rhs)
  double soul_ratio = 0.0;  // lhs_soul / (r^q rhs)
};

inline PoincareOnBall poincare_on_covering_ball(const MeshFunction& f, const CoverBall& B,
                                                double comparability, int soul_order, double q) {
  const Mesh& mesh = *f.mesh;
  const auto& X = mesh.system();
  const CablePoint x = mesh.point(B.center);
  Soul s = soul_adapted(X, x, B.radius, comparability, soul_order);
  PoincareOnBall out;
  out.c = mean_over(mesh, f.values, s.carrier);
  Eigen::VectorXd d = f.values.array() - out.c;
  out.lhs_ball = power_integral(mesh, d, q, &s.host);
  out.lhs_soul = power_integral(mesh, d, q, &s.carrier);
  out.rhs = segment_power_integral(mesh, gradient(f), q, &s.host);
  const double alpha = vicsek_alpha(X.dimension());
  if (out.rhs > 0.0) {
    out.ball_ratio = out.lhs_ball / (std::pow(B.radius, alpha + q - 1.0) * out.rhs);
    out.soul_ratio = out.lhs_soul / (std::pow(B.radius, q) * out.rhs);
  }
  return out;
}

inline nlohmann::json to_json(const CZReport& r) {
  nlohmann::json j;
  j["omega_empty"] = r.omega_empty;
  j["reconstruction_error"] = r.reconstruction_error;
  j["support_g_in_support_u"] = r.support_g_in_support_u;
  j["grad_g_sup_ratio"] = r.grad_g_sup_ratio;
  j["b_ratio"] = r.b_ratio;
  j["grad_b_ratio"] = r.grad_b_ratio;
  j["density_ratio"] = r.density_ratio;
  j["measure_ratio"] = r.measure_ratio;
  j["overlap"] = r.overlap;
  j["grad_g_q_ratio"] = r.grad_g_q_ratio;
  j["comparability"] = r.comparability;
  j["b_support_ok"] = r.b_support_ok;
  j["properties"] = std::vector<bool>(r.property, r.property + 7);
  return j;
}

inline nlohmann::json to_json(const CZDecomposition& cz) {
  nlohmann::json j;
  j["lambda"] = cz.lambda;
  j["q"] = cz.q;
  j["report"] = to_json(cz.report);
  auto& balls = j["balls"] = nlohmann::json::array();
  for (const auto& b : cz.balls)
    balls.push_back({{"center", b.center},
                     {"radius", b.radius},
                     {"class", b.cls},
                     {"soul_level", b.soul_level},
                     {"c", b.c},
                     {"measure", b.measure},
                     {"b_ratio", b.b_ratio},
                     {"grad_b_ratio", b.grad_b_ratio},
                     {"density_ratio", b.density_ratio}});
  return j;
}

}  // namespace vicsek
