#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "vicsek/error.hpp"

namespace vicsek {

/// Volume exponent log(2^N + 1)/log 3.
inline double vicsek_alpha(int N = 2) { return std::log(std::pow(2.0, N) + 1.0) / std::log(3.0); }

/// Critical exponent p*(gamma) separating validity from failure.
inline double p_star(double gamma, double alpha) {
  const double beta = alpha + 1.0;
  if (gamma <= 1.0 / beta) return std::numeric_limits<double>::infinity();
  if (gamma >= alpha / beta) return 1.0;
  return (alpha - 1.0) / (gamma * beta - 1.0);
}

struct ScalingProfile {
  enum class Variant { Cable, Classical };

  explicit ScalingProfile(double alpha = vicsek_alpha(), Variant v = Variant::Cable)
      : alpha(alpha), beta(alpha + 1.0), variant(v) {}

  double Phi(double r) const { return r < 1.0 ? r : std::pow(r, alpha); }

  /// Time scale of distance r: r (cable) or r^2 (classical) below 1, r^beta above.
  double Psi(double r) const {
    if (r >= 1.0) return std::pow(r, beta);
    return variant == Variant::Cable ? r : r * r;
  }

  double Psi_inverse(double t) const {
    if (t >= 1.0) return std::pow(t, 1.0 / beta);
    return variant == Variant::Cable ? t : std::sqrt(t);
  }

  /// sup over s > 0 of R/s - t/Psi(s), by a log grid plus golden-section refinement.
  double Upsilon(double R, double t) const {
    if (!(R >= 0.0 && t > 0.0)) throw DomainError("Upsilon needs R >= 0, t > 0");
    auto f = [&](double ls) {
      double s = std::exp(ls);
      return R / s - t / Psi(s);
    };
    const double lo = -30.0, hi = 30.0;
    const int n = 3000;
    int best = 0;
    double bv = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      double v = f(lo + (hi - lo) * i / n);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / n;
    double b = lo + (hi - lo) * std::min(n, best + 1) / n;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      double c = b - g * (b - a), d = a + g * (b - a);
      if (f(c) > f(d))
        b = d;
      else
        a = c;
    }
    return std::max({bv, f(0.5 * (a + b)), 0.0});
  }

  /// Two-regime asymptotic form of Upsilon.
  double Upsilon_asymptotic(double R, double t) const {
    if (t < R) return R * R / t;
    return std::pow(R / std::pow(t, 1.0 / beta), beta / (beta - 1.0));
  }

  double alpha;
  double beta;
  Variant variant;
};

struct RR2Check {
  bool bounded;
  double sup;         // sup of x^{1/2 - eps} e^{-x} over the grid
  double left_slope;  // d log / d log x at the small end of the grid
};

/// Scalar form of the L^2 quasi-Riesz bound: x^{1/2 - eps} e^{-x} stays
/// bounded as x -> 0 exactly when eps <= 1/2.
inline RR2Check scalar_rr2_check(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0,1)");
  const int n = 1401;
  const double l0 = std::log(1e-12), l1 = std::log(1e2);
  std::vector<double> lv(n);
  double sup = 0.0;
  int arg = 0;
  for (int i = 0; i < n; ++i) {
    double lx = l0 + (l1 - l0) * i / (n - 1);
    lv[i] = (0.5 - eps) * lx - std::exp(lx);
    if (std::exp(lv[i]) > sup) {
      sup = std::exp(lv[i]);
      arg = i;
    }
  }
  double slope = (lv[1] - lv[0]) / ((l1 - l0) / (n - 1));
  return {!(arg == 0 && slope < -1e-6), sup, slope};
}

}  // namespace vicsek
