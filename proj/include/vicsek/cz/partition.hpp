#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "vicsek/cz/whitney.hpp"
#include "vicsek/geometry/skeleton.hpp"

namespace vicsek {

/// Fixed bump: 1 on [0, 1/4], 0 on [3/4, inf), quintic smoothstep between.
inline double bump(double t) {
  double x = std::clamp((t - 0.25) / 0.5, 0.0, 1.0);
  return 1.0 - x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

/// sup |bump'| = (1/0.5) * 15/8.
inline constexpr double kBumpSlope = 3.75;

struct BallPartition {
  std::vector<int> nodes;  // mesh nodes inside the ball
  std::vector<double> eta;
  std::vector<double> chi;
  int soul_level = -1;   // n_i for big balls
  Subset soul;           // Gamma_i (big balls)
  Subset second_soul;    // tilde Gamma_i (balls in J)
};

struct PartitionOfUnity {
  std::vector<BallPartition> parts;
  Eigen::VectorXd eta_sum;
};

/// eta_i from souls (big balls) or metric bumps (small balls), chi_i = eta_i / sum eta.
inline PartitionOfUnity build_partition(const Mesh& mesh, const Covering& cov) {
  const auto& X = mesh.system();
  const double c = cov.comparability;
  PartitionOfUnity pu;
  pu.parts.resize(cov.balls.size());
  pu.eta_sum = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (std::size_t i = 0; i < cov.balls.size(); ++i) {
    const auto& B = cov.balls[i];
    auto& part = pu.parts[i];
    auto within = nodes_within(mesh, B.center, B.radius);
    const CablePoint x = mesh.point(B.center);
    if (!cov.is_big(static_cast<int>(i))) {
      for (auto [v, d] : within) {
        part.nodes.push_back(v);
        part.eta.push_back(bump(2.0 * std::max(0.0, d - B.radius / 2) / B.radius));
      }
    } else {
      Soul s = soul_adapted(X, x, B.radius, c, 1);
      part.soul_level = s.level;
      part.soul = s.carrier;
      std::vector<int> lam_cables;
      for (int w : skeletons_meeting(X, x, B.radius / 2, s.level)) {
        auto cs = X.skeleton_cables(s.level, w);
        lam_cables.insert(lam_cables.end(), cs.begin(), cs.end());
      }
      Subset lambda = Subset::of_cables(lam_cables);
      DistanceField to_soul(X, s.carrier), to_lambda(X, lambda);
      for (auto [v, d] : within) {
        CablePoint p = mesh.point(v);
        double e = lambda.contains(X, p)
                       ? 1.0
                       : bump(to_lambda.distance(to_soul.nearest(p).second) / (B.radius / 8));
        part.nodes.push_back(v);
        part.eta.push_back(e);
      }
      if (cov.in_J(static_cast<int>(i))) part.second_soul = soul_adapted(X, x, B.radius, c, 2).carrier;
    }
    for (std::size_t k = 0; k < part.nodes.size(); ++k) pu.eta_sum[part.nodes[k]] += part.eta[k];
  }
  for (auto& part : pu.parts) {
    part.chi.resize(part.nodes.size());
    for (std::size_t k = 0; k < part.nodes.size(); ++k) {
      double s = pu.eta_sum[part.nodes[k]];
      part.chi[k] = s > 0.0 ? part.eta[k] / s : 0.0;
    }
  }
  return pu;
}

/// Slopes of a function given on a node list (zero elsewhere), one entry per
/// segment touching the list.
inline std::vector<std::pair<int, double>> local_slopes(const Mesh& mesh,
                                                        const std::vector<int>& nodes,
                                                        const std::vector<double>& vals) {
  std::unordered_map<int, double> at;
  for (std::size_t k = 0; k < nodes.size(); ++k) at[nodes[k]] = vals[k];
  auto val = [&](int v) {
    auto it = at.find(v);
    return it == at.end() ? 0.0 : it->second;
  };
  std::unordered_map<int, double> out;
  for (int v : nodes)
    for (const auto& l : mesh.neighbors(v))
      if (!out.count(l.segment)) {
        auto [a, b] = mesh.segment_nodes(l.segment);
        out[l.segment] = (val(b) - val(a)) / mesh.h();
      }
  std::vector<std::pair<int, double>> res(out.begin(), out.end());
  std::sort(res.begin(), res.end());
  return res;
}

struct PartitionCheck {
  double sum_error = 0.0;        // max |sum chi - 1| over Omega nodes
  double max_grad_radius = 0.0;  // max ||grad chi_i||_inf * r_i
  double grad_bound = 0.0;       // 8 |bump'| (1 + N c)
  bool range_ok = true;          // 0 <= chi <= 1
  bool support_ok = true;        // nodal support inside B_i
  int j_balls = 0;
  int j_violations = 0;          // segments with grad chi_i != 0 outside tilde Gamma_i
};

inline PartitionCheck check_partition(const Mesh& mesh, const Covering& cov,
                                      const PartitionOfUnity& pu) {
  const auto& X = mesh.system();
  PartitionCheck chk;
  chk.grad_bound = 8.0 * kBumpSlope * (1.0 + cov.overlap * cov.comparability);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (std::size_t i = 0; i < pu.parts.size(); ++i) {
    const auto& part = pu.parts[i];
    const auto& B = cov.balls[i];
    for (std::size_t k = 0; k < part.nodes.size(); ++k) {
      total[part.nodes[k]] += part.chi[k];
      if (part.chi[k] < 0.0 || part.chi[k] > 1.0) chk.range_ok = false;
      if (part.chi[k] != 0.0 &&
          !(tree_distance(X, mesh.point(B.center), mesh.point(part.nodes[k])) < B.radius))
        chk.support_ok = false;
    }
    double gmax = 0.0;
    const bool j = cov.in_J(static_cast<int>(i));
    chk.j_balls += j;
    const int M = mesh.per_cable();
    for (auto [s, g] : local_slopes(mesh, part.nodes, part.chi)) {
      gmax = std::max(gmax, std::abs(g));
      if (j && g != 0.0) {
        int cable = s / M;
        double lo = static_cast<double>(s % M) / M, hi = static_cast<double>(s % M + 1) / M;
        Subset seg = Subset::from_segments({{cable, lo, hi}});
        if (seg.subtract(part.second_soul).measure() > 0.0) ++chk.j_violations;
      }
    }
    chk.max_grad_radius = std::max(chk.max_grad_radius, gmax * B.radius);
  }
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (cov.omega[v]) chk.sum_error = std::max(chk.sum_error, std::abs(total[v] - 1.0));
  return chk;
}

}  // namespace vicsek
