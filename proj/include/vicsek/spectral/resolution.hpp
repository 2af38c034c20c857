#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "vicsek/spectral/calculus.hpp"

namespace vicsek {

namespace detail {

inline constexpr double kGaussX[8] = {-0.9602898564975363, -0.7966664774136267,
                                      -0.5255324099163290, -0.1834346424956498,
                                      0.1834346424956498,  0.5255324099163290,
                                      0.7966664774136267,  0.9602898564975363};
inline constexpr double kGaussW[8] = {0.1012285362903763, 0.2223810344533745,
                                      0.3137066458778873, 0.3626837833783620,
                                      0.3626837833783620, 0.3137066458778873,
                                      0.2223810344533745, 0.1012285362903763};

/// Composite 8-point Gauss-Legendre on [a, b]; the panel count doubles until
/// the relative change drops below rtol.
inline Vec composite_gauss(const std::function<Vec(double)>& G, double a, double b, double rtol,
                           int max_panels = 4096) {
  Vec prev;
  for (int panels = 8;; panels *= 2) {
    const double w = (b - a) / panels;
    Vec acc;
    for (int p = 0; p < panels; ++p) {
      double mid = a + (p + 0.5) * w;
      for (int i = 0; i < 8; ++i) {
        Vec g = G(mid + 0.5 * w * kGaussX[i]) * (0.5 * w * kGaussW[i]);
        if (acc.size() == 0)
          acc = g;
        else
          acc += g;
      }
    }
    if (prev.size() && (acc - prev).norm() <= rtol * std::max(acc.norm(), 1e-300)) return acc;
    if (panels >= max_panels) throw SolverError("time quadrature did not converge");
    prev = std::move(acc);
  }
}

}  // namespace detail

/// (1/Gamma(1-g)) * integral over t in [a, b] of Delta e^{-(t+1)Delta} f t^{-g} dt.
/// b may be +infinity.
inline Vec time_integral(const Calculus& calc, const Vec& f, double g, double a, double b,
                         double rtol = 1e-8) {
  if (!(g > 0.0 && g < 1.0)) throw DomainError("resolution exponent must lie in (0,1)");
  if (!(a >= 0.0 && b > a)) throw DomainError("bad time interval");
  const double t_lo = 1e-14;
  const double t_hi = 80.0 / calc.smallest_positive_eigenvalue();
  const double lo = std::max(a, t_lo), hi = std::min(b, t_hi);
  const double norm = 1.0 / std::tgamma(1.0 - g);
  Vec out = Vec::Zero(f.size());
  if (hi <= lo && a > 0.0) return out;

  if (auto* sc = dynamic_cast<const SpectralCalculus*>(&calc)) {
    const auto& B = sc->basis();
    Vec lam = B.values;
    for (int k = 0; k < B.size(); ++k)
      if (sc->is_zero_mode(k)) lam[k] = 0.0;
    auto G = [&](double u) {
      double t = std::exp(u);
      return Vec((lam.array() * (-(t + 1.0) * lam.array()).exp()).matrix() *
                 std::exp((1.0 - g) * u));
    };
    Vec w = Vec::Zero(B.size());
    if (hi > lo) w = detail::composite_gauss(G, std::log(lo), std::log(hi), rtol);
    if (a == 0.0)
      w += (lam.array() * (-lam.array()).exp()).matrix() * (std::pow(t_lo, 1.0 - g) / (1.0 - g));
    Vec c = B.coefficients(f);
    return B.vectors * (c.cwiseProduct(w) * norm);
  }

  auto G = [&](double u) {
    double t = std::exp(u);
    return Vec(-calc.heat_dt(f, t + 1.0) * std::exp((1.0 - g) * u));
  };
  if (hi > lo) out = detail::composite_gauss(G, std::log(lo), std::log(hi), rtol);
  if (a == 0.0) out += -calc.heat_dt(f, 1.0) * (std::pow(t_lo, 1.0 - g) / (1.0 - g));
  return out * norm;
}

struct ResolutionParts {
  Vec small;  // times in [0, min(1, r)]
  Vec T;      // times in [min(1, r), r]
  Vec U;      // times in [r, infinity)
};

/// Splits Delta^g e^{-Delta} f along the resolution of the identity.
inline ResolutionParts resolution_split(const Calculus& calc, const Vec& f, double g, double r,
                                        double rtol = 1e-8) {
  if (!(r > 0.0)) throw DomainError("split time must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  const double m = std::min(1.0, r);
  ResolutionParts out;
  out.small = time_integral(calc, f, g, 0.0, m, rtol);
  out.T = r > m ? time_integral(calc, f, g, m, r, rtol) : Vec::Zero(f.size());
  out.U = time_integral(calc, f, g, r, inf, rtol);
  return out;
}

/// Small-time piece: integral over [0, r].
inline Vec small_time_operator(const Calculus& calc, const Vec& f, double g, double r,
                               double rtol = 1e-8) {
  return time_integral(calc, f, g, 0.0, r, rtol);
}

}  // namespace vicsek
