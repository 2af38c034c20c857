#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "vicsek/geometry/metric.hpp"
#include "vicsek/spectral/calculus.hpp"
#include "vicsek/spectral/scaling.hpp"

namespace vicsek {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  int points = 0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  f.points = static_cast<int>(x.size());
  return f;
}

/// Common slope with one intercept per group (fixed effects).
inline LinearFit fit_common_slope(const std::vector<std::vector<double>>& xs,
                                  const std::vector<std::vector<double>>& ys) {
  std::vector<double> cx, cy;
  std::vector<double> means;
  for (std::size_t g = 0; g < xs.size(); ++g) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs[g].size(); ++i) {
      mx += xs[g][i];
      my += ys[g][i];
    }
    mx /= xs[g].size();
    my /= ys[g].size();
    for (std::size_t i = 0; i < xs[g].size(); ++i) {
      cx.push_back(xs[g][i] - mx);
      cy.push_back(ys[g][i] - my);
    }
  }
  LinearFit f = fit_line(cx, cy);
  f.intercept = 0.0;
  return f;
}

struct VolumeGrowthFit {
  LinearFit fit;             // center-averaged log V(x,r) against log r, 1 <= r <= diam/4
  LinearFit per_center;      // common slope with one intercept per center
  LinearFit small_scale;     // center-averaged, r < 1
  std::vector<int> centers;  // vertex ids
  std::vector<double> log_r, mean_log_v;  // the averaged curve
};

/// Sampled centers are vertices of the copy of V^(n) at the origin of an ambient V^(n+1).
inline VolumeGrowthFit volume_growth_fit(const CableSystem& X, int n, int samples,
                                         int radii_per_center, std::uint64_t seed) {
  if (X.level() < n) throw DomainError("ambient level below the sampled level");
  const int inside_vertices = 4 * static_cast<int>(std::pow(5, n)) + 1;
  const double rmax = 2.0 * static_cast<double>(pow3(n)) / 4.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, inside_vertices - 1);
  VolumeGrowthFit out;
  std::vector<std::vector<double>> xs, ys, sx, sy;
  for (int i = 0; i < samples; ++i) {
    int v = pick(rng);
    out.centers.push_back(v);
    std::vector<double> radii, small;
    for (int k = 0; k < radii_per_center; ++k)
      radii.push_back(std::exp(std::log(rmax) * k / (radii_per_center - 1)));
    for (double r : {0.1, 0.2, 0.4, 0.8}) small.push_back(r);
    CablePoint x = point_at_vertex(X, v);
    std::vector<double> lx, ly, slx, sly;
    for (auto [r, V] : volume_growth(X, x, radii)) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(V));
    }
    for (auto [r, V] : volume_growth(X, x, small)) {
      slx.push_back(std::log(r));
      sly.push_back(std::log(V));
    }
    xs.push_back(lx);
    ys.push_back(ly);
    sx.push_back(slx);
    sy.push_back(sly);
  }
  auto mean_curve = [](const std::vector<std::vector<double>>& y) {
    std::vector<double> my(y.front().size(), 0.0);
    for (const auto& row : y)
      for (std::size_t k = 0; k < row.size(); ++k) my[k] += row[k] / y.size();
    return my;
  };
  auto averaged = [&](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y) {
    return fit_line(x.front(), mean_curve(y));
  };
  out.log_r = xs.front();
  out.mean_log_v = mean_curve(ys);
  out.fit = averaged(xs, ys);
  out.per_center = fit_common_slope(xs, ys);
  out.small_scale = averaged(sx, sy);
  return out;
}

struct HeatDecayFit {
  LinearFit kernel;      // log p_t(x,x) against log t
  LinearFit derivative;  // log |d/dt p_t(x,x)| against log t
  double max_mass_drift = 0.0;
  std::vector<double> times, values, slopes;
};

/// On-diagonal heat kernel and its time derivative at node x over a log-spaced window.
inline HeatDecayFit heat_decay_fit(const Calculus& calc, int x, double t0, double t1, int points) {
  if (!(t0 > 0.0 && t1 > t0 && points >= 2)) throw DomainError("bad heat window");
  HeatDecayFit out;
  std::vector<double> lt, lp, ld;
  const Vec dx = calc.delta(x);
  const Vec& D = calc.stiffness().D;
  for (int i = 0; i < points; ++i) {
    double t = t0 * std::pow(t1 / t0, static_cast<double>(i) / (points - 1));
    Vec p = calc.heat(dx, t);
    double dp = calc.heat_dt(dx, t)[x];
    out.max_mass_drift = std::max(out.max_mass_drift, std::abs(p.dot(D) - 1.0));
    out.times.push_back(t);
    out.values.push_back(p[x]);
    out.slopes.push_back(dp);
    lt.push_back(std::log(t));
    lp.push_back(std::log(p[x]));
    ld.push_back(std::log(std::abs(dp)));
  }
  out.kernel = fit_line(lt, lp);
  out.derivative = fit_line(lt, ld);
  return out;
}

}  // namespace vicsek
