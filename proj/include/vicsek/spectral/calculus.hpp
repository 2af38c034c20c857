#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include "vicsek/mesh/mesh.hpp"
#include "vicsek/spectral/eigen_basis.hpp"
#include "vicsek/spectral/tree_solver.hpp"

namespace vicsek {

using Vec = Eigen::VectorXd;

/// Functions of the mesh Laplacian Delta = D^{-1} K acting on nodal vectors.
class Calculus {
 public:
  explicit Calculus(std::shared_ptr<const Mesh> mesh)
      : mesh_(std::move(mesh)), KD_(assemble(*mesh_)) {}
  virtual ~Calculus() = default;

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const StiffnessPair& stiffness() const { return KD_; }

  virtual Vec heat(const Vec& f, double t) const = 0;
  /// d/dt e^{-t Delta} f = -Delta e^{-t Delta} f.
  virtual Vec heat_dt(const Vec& f, double t) const = 0;
  /// Delta^s f for s > -1; negative powers act on the mean-zero part.
  virtual Vec power(const Vec& f, double s) const = 0;
  virtual double smallest_positive_eigenvalue() const = 0;

  Vec laplacian(const Vec& f) const { return (KD_.K * f).cwiseQuotient(KD_.D); }

  Vec mean_zero(const Vec& f) const {
    return f.array() - f.dot(KD_.D) / KD_.D.sum();
  }

  Vec frac_heat(const Vec& f, double gamma) const {
    if (!(gamma > 0.0)) throw DomainError("fractional power must be positive");
    return power(heat(f, 1.0), gamma);
  }

  /// Per-segment slopes of Delta^{-eps} e^{-Delta} f.
  Vec quasi_riesz(const Vec& f, double eps) const {
    if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("quasi-Riesz needs 0 <= eps < 1");
    Vec h = heat(f, 1.0);
    return gradient(*mesh_, eps == 0.0 ? h : power(h, -eps));
  }

  double heat_kernel(int x, int y, double t) const { return heat(delta(y), t)[x]; }
  double heat_kernel_dt(int x, int y, double t) const { return heat_dt(delta(y), t)[x]; }

  Vec delta(int y) const {
    Vec e = Vec::Zero(KD_.D.size());
    e[y] = 1.0 / KD_.D[y];
    return e;
  }

 protected:
  std::shared_ptr<const Mesh> mesh_;
  StiffnessPair KD_;
};

/// Spectral calculus through an explicit eigenbasis.
class SpectralCalculus : public Calculus {
 public:
  SpectralCalculus(std::shared_ptr<const Mesh> mesh, int k_max = -1, int dense_limit = 6000,
                   std::uint64_t seed = 1)
      : Calculus(std::move(mesh)) {
    basis_ = eigendecompose(*mesh_, KD_, k_max, dense_limit, seed);
    zero_tol_ = 1e-11 * std::max(1.0, basis_.values.cwiseAbs().maxCoeff());
  }

  const EigenBasis& basis() const { return basis_; }
  bool is_zero_mode(int k) const { return std::abs(basis_.values[k]) <= zero_tol_; }

  template <class Fn>
  Vec apply(const Vec& f, Fn&& phi) const {
    Vec c = basis_.coefficients(f);
    for (int k = 0; k < basis_.size(); ++k) {
      double w = phi(is_zero_mode(k) ? 0.0 : basis_.values[k]);
      if (!std::isfinite(w)) throw DomainError("spectral multiplier is not finite");
      c[k] *= w;
    }
    return basis_.vectors * c;
  }

  Vec heat(const Vec& f, double t) const override {
    if (!(t >= 0.0)) throw DomainError("heat time must be non-negative");
    return apply(f, [t](double l) { return std::exp(-t * l); });
  }
  Vec heat_dt(const Vec& f, double t) const override {
    return apply(f, [t](double l) { return -l * std::exp(-t * l); });
  }
  Vec power(const Vec& f, double s) const override {
    if (!(s > -1.0)) throw DomainError("power exponent must exceed -1");
    return apply(f, [s](double l) { return l == 0.0 ? 0.0 : std::pow(l, s); });
  }
  double smallest_positive_eigenvalue() const override {
    for (int k = 0; k < basis_.size(); ++k)
      if (!is_zero_mode(k)) return basis_.values[k];
    throw DomainError("no positive eigenvalue");
  }

 private:
  EigenBasis basis_;
  double zero_tol_ = 0.0;
};

/// Spectral calculus through exact O(n) tree solves of (z D + K): fixed
/// Talbot contour for the heat semigroup, Balakrishnan integral for powers.
class ResolventCalculus : public Calculus {
 public:
  explicit ResolventCalculus(std::shared_ptr<const Mesh> mesh, int talbot_nodes = 24,
                             double power_step = 0.25)
      : Calculus(std::move(mesh)), tree_(*mesh_), nodes_(talbot_nodes), step_(power_step) {
    lmax_ = (2.0 * tree_.kdiag.cwiseQuotient(tree_.mass)).maxCoeff();
    lmin_ = estimate_lambda1();
  }

  Vec heat(const Vec& f, double t) const override {
    if (!(t >= 0.0)) throw DomainError("heat time must be non-negative");
    if (t == 0.0) return f;
    return talbot(f, t, false);
  }

  Vec heat_dt(const Vec& f, double t) const override {
    if (!(t > 0.0)) throw DomainError("heat time must be positive");
    return talbot(f, t, true);
  }

  Vec power(const Vec& f, double s) const override {
    if (!(s > -1.0)) throw DomainError("power exponent must exceed -1");
    if (s == 0.0) return f;
    if (s < 0.0) return fractional(inverse(f), 1.0 + s);
    Vec h = mean_zero(f);
    double k = std::floor(s);
    for (int i = 0; i < static_cast<int>(k); ++i) h = laplacian(h);
    return s - k > 0.0 ? fractional(h, s - k) : h;
  }

  double smallest_positive_eigenvalue() const override { return lmin_; }
  double largest_eigenvalue_bound() const { return lmax_; }

  /// Mean-zero solution of Delta x = f - mean(f).
  Vec inverse(const Vec& f) const {
    TreeLDL<double> fac(tree_, 0.0, true);
    return mean_zero(fac.solve(KD_.D.cwiseProduct(mean_zero(f))));
  }

 private:
  Vec talbot(const Vec& f, double t, bool derivative) const {
    using C = std::complex<double>;
    const int M = nodes_;
    const double r = 2.0 * M / (5.0 * t);
    Eigen::VectorXcd Df = KD_.D.cast<C>().cwiseProduct(f.cast<C>());
    auto F = [&](C s) {
      Eigen::VectorXcd y = TreeLDL<C>(tree_, s).solve(Df);
      if (derivative) y = s * y - f.cast<C>();
      return y;
    };
    Vec acc = 0.5 * std::exp(r * t) * F(C(r)).real();
    for (int k = 1; k < M; ++k) {
      double th = k * std::numbers::pi / M;
      double cot = std::cos(th) / std::sin(th);
      C s(r * th * cot, r * th);
      C ds(1.0, th + (th * cot - 1.0) * cot);
      acc += (std::exp(t * s) * ds * F(s)).real();
    }
    return acc * (r / M);
  }

  /// Delta^g h for 0 < g < 1 and mean-zero h. Trapezoid rule in u = log s on
  /// the whole line; nodes beyond [u0, u1] are summed as geometric series of
  /// the asymptotic expansions of the integrand.
  Vec fractional(const Vec& h, double g) const {
    const double H = step_;
    const double u0 = std::log(lmin_) - 14.0;
    const int n = static_cast<int>(std::ceil((std::log(lmax_) + 14.0 - u0) / H));
    const double u1 = u0 + n * H;
    Vec Kh = KD_.K * h;
    Vec acc = Vec::Zero(h.size());
    for (int i = 0; i <= n; ++i) {
      double u = u0 + i * H;
      acc += (H * std::exp(g * u)) * TreeLDL<double>(tree_, std::exp(u)).solve(Kh);
    }
    auto tail = [H](double a, double u) {
      double q = std::exp(-std::abs(a) * H);
      return H * std::exp(a * u) * q / (1.0 - q);
    };
    Vec inv = inverse(h);
    Vec Dh = laplacian(h);
    acc += tail(g, u0) * h - tail(g + 1, u0) * inv + tail(g + 2, u0) * inverse(inv);
    acc += tail(g - 1, u1) * Dh - tail(g - 2, u1) * laplacian(Dh);
    return mean_zero(acc * (std::sin(std::numbers::pi * g) / std::numbers::pi));
  }

  /// Lower estimate of the first positive eigenvalue by inverse iteration.
  double estimate_lambda1() const {
    const Eigen::Index n = KD_.D.size();
    Vec x = Vec::LinSpaced(n, -1.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) x[i] += std::sin(1.7 * i);
    x = mean_zero(x);
    double ray = 0.0;
    for (int it = 0; it < 60; ++it) {
      x = inverse(x);
      x /= std::sqrt(x.dot(KD_.D.cwiseProduct(x)));
      double next = x.dot(KD_.K * x);
      if (it > 5 && std::abs(next - ray) < 1e-10 * next) {
        ray = next;
        break;
      }
      ray = next;
    }
    return 0.5 * ray;
  }

  TreeStructure tree_;
  int nodes_;
  double step_;
  double lmax_ = 0.0, lmin_ = 0.0;
};

}  // namespace vicsek
