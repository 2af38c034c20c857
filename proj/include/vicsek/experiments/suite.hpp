#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vicsek/cli/config.hpp"
#include "vicsek/cz/decompose.hpp"
#include "vicsek/experiments/analysis.hpp"
#include "vicsek/experiments/fits.hpp"
#include "vicsek/experiments/gn.hpp"
#include "vicsek/experiments/poincare.hpp"
#include "vicsek/geometry/io.hpp"
#include "vicsek/spectral/resolution.hpp"

namespace vicsek {

/// Fixed pass thresholds of the acceptance criteria. Not configurable.
struct Tolerances {
  double alpha_fit = 0.1;
  double fit_residual = 0.05;
  double fit_invalid = 0.15;
  double green = 1e-10;
  double poincare_slope = 0.27;
  double diag_slope_rel = 0.1;
  double gn_rel = 1e-12;
  double gn_lower = 2.0 / 3.0;
  double harmonic = 1e-10;
  double heat_slope = 0.08;
  double heat_dt_slope = 0.12;
  double mass_drift = 1e-8;
  double isometry = 1e-6;
  double interpolation = 1e-9;
  double resolution = 1e-6;
  double reconstruction = 1e-10;
  double uniform_factor = 3.0;
  double partition_sum = 1e-12;
  double phase_fail_growth = 1.15;
  double phase_hold_growth = 1.05;
  double core_lower = 0.1;
  double annulus_factor = 3.0;
};

inline nlohmann::json to_json(const Tolerances& t) {
  return {{"alpha_fit", t.alpha_fit},         {"fit_residual", t.fit_residual},
          {"fit_invalid", t.fit_invalid},     {"green", t.green},
          {"poincare_slope", t.poincare_slope}, {"diag_slope_rel", t.diag_slope_rel},
          {"gn_rel", t.gn_rel},               {"gn_lower", t.gn_lower},
          {"harmonic", t.harmonic},           {"heat_slope", t.heat_slope},
          {"heat_dt_slope", t.heat_dt_slope}, {"mass_drift", t.mass_drift},
          {"isometry", t.isometry},           {"interpolation", t.interpolation},
          {"resolution", t.resolution},       {"reconstruction", t.reconstruction},
          {"uniform_factor", t.uniform_factor}, {"partition_sum", t.partition_sum},
          {"phase_fail_growth", t.phase_fail_growth}, {"phase_hold_growth", t.phase_hold_growth},
          {"core_lower", t.core_lower},       {"annulus_factor", t.annulus_factor}};
}

struct Criterion {
  int id = 0;
  std::string name;
  std::string rule;  // the acceptance rule the verdict applies
  bool pass = false;
  std::string summary;
  nlohmann::json details;
  double budget_s = 0.0;  // 0: no runtime budget
  double runtime_s = 0.0;
};

inline Criterion make_criterion(int id, std::string name, std::string rule) {
  Criterion c;
  c.id = id;
  c.name = std::move(name);
  c.rule = std::move(rule);
  return c;
}

inline Criterion failed_criterion(int id, const std::string& what) {
  Criterion c = make_criterion(id, "error", "");
  c.summary = "error: " + what;
  return c;
}

struct Context {
  nlohmann::json cfg;
  std::string hash;
  std::filesystem::path out;
  Tolerances tol;

  Context(nlohmann::json c, std::filesystem::path o) : cfg(std::move(c)), hash(config_hash(cfg)), out(std::move(o)) {}

  std::uint64_t seed() const { return cfg["seed"].get<std::uint64_t>(); }

  std::string stamp() const { return std::string("# vicsek_lab ") + kVersion + " config " + hash; }

  void write_json(const std::string& name, nlohmann::json j) const {
    j["version"] = kVersion;
    j["config_hash"] = hash;
    std::ofstream(out / name) << j.dump(2) << "\n";
  }

  /// Comment line with version and hash, then the header row, then data.
  void write_csv(const std::string& name, const std::string& header,
                 const std::vector<std::vector<std::string>>& rows) const {
    std::ofstream os(out / name);
    os << stamp() << "\n" << header << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  }

  void write_dat(const std::string& name, const std::string& columns, const std::vector<double>& x,
                 const std::vector<double>& y) const {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < x.size(); ++i) rows.push_back({num(x[i]), num(y[i])});
    std::ofstream os(out / name);
    os << stamp() << "\n# " << columns << "\n";
    for (const auto& r : rows) os << r[0] << " " << r[1] << "\n";
  }

  static std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
  }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// max / median of a positive series; the uniformity statistic.
inline double spread(const std::vector<double>& v) {
  double m = median(v);
  return m > 0.0 ? *std::max_element(v.begin(), v.end()) / m : std::numeric_limits<double>::infinity();
}

inline std::vector<double> doubles(const nlohmann::json& j) { return j.get<std::vector<double>>(); }
inline std::vector<int> ints(const nlohmann::json& j) { return j.get<std::vector<int>>(); }

inline bool has(const std::vector<double>& v, double x) {
  return std::any_of(v.begin(), v.end(), [&](double y) { return std::abs(y - x) < 1e-12; });
}

inline nlohmann::json fit_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"rms_residual", f.rms_residual}, {"points", f.points}};
}

}  // namespace detail

inline Criterion criterion_geometry(const Context& ctx) {
  Criterion c = make_criterion(1, "geometry_exactness", "tree, skeleton counts, measures and diameters exact for n <= max_level");
  c.budget_s = 1.0;
  const int nmax = ctx.cfg["geometry"]["max_level"];
  bool ok = true;
  auto& levels = c.details["levels"] = nlohmann::json::array();
  for (int n = 0; n <= nmax; ++n) {
    CableSystem X = build_vicsek(2, n);
    auto d0 = X.vertex_distances(0);
    bool tree = X.num_vertices() == X.num_cables() + 1 &&
                std::all_of(d0.begin(), d0.end(), [](int d) { return d >= 0; });
    bool counts = true, measures = true, diameters = true;
    for (int k = 0; k <= n; ++k) {
      const auto& sk = X.skeletons(k);
      counts &= static_cast<std::int64_t>(sk.size()) == static_cast<std::int64_t>(std::pow(5, n - k));
      const double m = 4.0 * std::pow(5.0, k);
      const int R = static_cast<int>(pow3(k));
      for (std::size_t s = 0; s < sk.size(); ++s) {
        measures &= skeleton_subset(X, k, static_cast<int>(s)).measure() == m;
        int far = 0;
        for (int a : sk[s].corners)
          for (int b : sk[s].corners) far = std::max(far, X.vertex_distance(a, b));
        int reach = 0;
        for (int cb : X.skeleton_cables(k, static_cast<int>(s)))
          reach = std::max({reach, X.vertex_distance(sk[s].center, X.cable(cb).a),
                            X.vertex_distance(sk[s].center, X.cable(cb).b)});
        // corners realize 2R and every point is within R of the center
        diameters &= far == 2 * R && reach <= R;
      }
    }
    levels.push_back({{"n", n}, {"vertices", X.num_vertices()}, {"cables", X.num_cables()}, {"tree", tree},
                      {"skeleton_counts", counts}, {"skeleton_measures", measures}, {"diameters", diameters}});
    ok &= tree && counts && measures && diameters;
  }
  c.pass = ok;
  c.summary = std::string("levels 0..") + std::to_string(nmax) + (ok ? " exact" : " mismatch");
  return c;
}

inline Criterion criterion_volume(const Context& ctx) {
  Criterion c = make_criterion(2, "volume_growth", "|alpha_hat - log5/log3| <= 0.1 and log residual <= 0.05");
  c.budget_s = 10.0;
  const auto& v = ctx.cfg["volume"];
  const int n = v["level"];
  CableSystem X = build_vicsek(2, n + 1);
  auto fit = volume_growth_fit(X, n, v["samples"], v["radii"], ctx.seed());
  const double alpha = vicsek_alpha();
  c.pass = std::abs(fit.fit.slope - alpha) <= ctx.tol.alpha_fit && fit.fit.rms_residual <= ctx.tol.fit_residual;
  c.details = {{"alpha", alpha},
               {"fit", detail::fit_json(fit.fit)},
               {"per_center_fit", detail::fit_json(fit.per_center)},
               {"small_scale_fit", detail::fit_json(fit.small_scale)},
               {"centers", fit.centers}};
  ctx.write_dat("volume_growth.dat", "log r, center-averaged log V(x,r)", fit.log_r, fit.mean_log_v);
  c.summary = "alpha_hat " + detail::fmt("%.4f", fit.fit.slope) + " (target " + detail::fmt("%.4f", alpha) +
              "), residual " + detail::fmt("%.3g", fit.fit.rms_residual) + ", r<1 slope " +
              detail::fmt("%.4f", fit.small_scale.slope);
  return c;
}

inline Criterion criterion_green(const Context& ctx) {
  Criterion c = make_criterion(3, "green_identity", "|<Ku,u> - ||grad u||^2| <= 1e-10 ||grad u||^2");
  c.budget_s = 5.0;
  const auto& g = ctx.cfg["green"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, g["level"]));
  auto mesh = discretize(X, g["mesh"]);
  auto KD = assemble(*mesh);
  std::mt19937_64 rng(ctx.seed());
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int i = 0; i < g["samples"].get<int>(); ++i) {
    Eigen::VectorXd u(mesh->num_nodes());
    for (auto& x : u) x = nd(rng);
    double e = segment_power_integral(*mesh, gradient(*mesh, u), 2.0);
    worst = std::max(worst, std::abs(u.dot(KD.K * u) - e) / e);
  }
  c.pass = worst <= ctx.tol.green;
  c.details = {{"nodes", mesh->num_nodes()}, {"max_relative_error", worst}};
  c.summary = "max relative error " + detail::fmt("%.3g", worst);
  return c;
}

inline Criterion criterion_poincare(const Context& ctx) {
  Criterion c = make_criterion(4, "skeleton_poincare", "per-level |dlog C_n - log 15| <= 0.27 and |dlog C'_n - log 9| <= 0.1 log 9");
  const auto& p = ctx.cfg["poincare"];
  const int M = p["mesh"];
  std::vector<PoincareConstants> runs;
  for (int n : detail::ints(p["levels"]))
    runs.push_back(poincare_skeleton_constant(n, M, p["dense_limit"], ctx.seed()));
  std::vector<double> ns, lw, ld, dw, dd;
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : runs) {
    ns.push_back(r.n);
    lw.push_back(std::log(r.whole));
    ld.push_back(std::log(r.diag));
  }
  bool ok = true;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const double step = runs[i].n - runs[i - 1].n;
    dw.push_back((lw[i] - lw[i - 1]) / step);
    dd.push_back((ld[i] - ld[i - 1]) / step);
    ok &= std::abs(dw.back() - std::log(15.0)) <= ctx.tol.poincare_slope;
    ok &= std::abs(dd.back() - std::log(9.0)) <= ctx.tol.diag_slope_rel * std::log(9.0);
  }
  c.pass = ok;
  auto& lv = c.details["levels"] = nlohmann::json::array();
  for (const auto& r : runs) {
    lv.push_back({{"n", r.n}, {"whole", r.whole}, {"diag", r.diag}, {"method", r.method}});
    rows.push_back({std::to_string(r.n), std::to_string(M), "2", Context::num(r.whole), Context::num(r.diag), r.method});
  }
  c.details["whole_log_steps"] = dw;
  c.details["diag_log_steps"] = dd;
  c.details["whole_fit"] = detail::fit_json(fit_line(ns, lw));
  c.details["diag_fit"] = detail::fit_json(fit_line(ns, ld));
  // q != 2: empirical sup over the fixed family, reported only
  const double alpha = vicsek_alpha();
  auto& emp = c.details["empirical"] = nlohmann::json::array();
  for (double q : detail::doubles(p["q_empirical"])) {
    std::vector<double> lq;
    for (const auto& r : runs) {
      double sup = poincare_empirical(r.n, M, q, r.extremal, p["noise_samples"], ctx.seed());
      lq.push_back(std::log(sup));
      rows.push_back({std::to_string(r.n), std::to_string(M), Context::num(q), Context::num(sup), "", "empirical"});
    }
    emp.push_back({{"q", q},
                   {"fit", detail::fit_json(fit_line(ns, lq))},
                   {"target_slope", std::log(5.0) * (1.0 + (q - 1.0) / alpha)}});
  }
  ctx.write_csv("poincare.csv", "n,mesh,q,whole,diag,method", rows);
  ctx.write_dat("poincare_whole.dat", "n, log C_n", ns, lw);
  ctx.write_dat("poincare_diag.dat", "n, log C'_n", ns, ld);
  std::string s = "log-steps";
  for (double x : dw) s += " " + detail::fmt("%.3f", x);
  s += " (log 15 = 2.708); diag";
  for (double x : dd) s += " " + detail::fmt("%.3f", x);
  c.summary = s + " (log 9 = 2.197)";
  return c;
}

inline Criterion criterion_gn(const Context& ctx) {
  Criterion c = make_criterion(5, "gn_exactness", "||grad g_n||_p^p = 4 3^{-n(p-1)} to 1e-12, g_n >= 2/3 on U, residual <= 1e-10");
  const auto& g = ctx.cfg["gn"];
  double worst_rel = 0.0, worst_res = 0.0, lowest = std::numeric_limits<double>::infinity();
  auto& runs = c.details["runs"] = nlohmann::json::array();
  for (int M : detail::ints(g["meshes"]))
    for (int n : detail::ints(g["levels"])) {
      auto X = std::make_shared<const CableSystem>(build_vicsek(2, n + 1));
      auto mesh = discretize(X, M);
      auto u = build_gn(mesh, n);
      double rel = 0.0;
      for (double p : detail::doubles(g["ps"])) {
        double exact = 4.0 * std::pow(3.0, -n * (p - 1.0));
        rel = std::max(rel, std::abs(segment_power_integral(*mesh, gradient(u), p) - exact) / exact);
      }
      double low = min_over(*mesh, u.values, central_core_copy(*X, n));
      double res = gn_harmonic_residual(u, n);
      worst_rel = std::max(worst_rel, rel);
      worst_res = std::max(worst_res, res);
      lowest = std::min(lowest, low);
      runs.push_back({{"n", n}, {"mesh", M}, {"max_relative_error", rel}, {"min_on_core", low}, {"harmonic_residual", res}});
    }
  c.pass = worst_rel <= ctx.tol.gn_rel && lowest >= ctx.tol.gn_lower && worst_res <= ctx.tol.harmonic;
  c.summary = "max rel error " + detail::fmt("%.2g", worst_rel) + ", min on U " + detail::fmt("%.4f", lowest) +
              ", harmonic residual " + detail::fmt("%.2g", worst_res);
  return c;
}

inline Criterion criterion_heat(const Context& ctx) {
  Criterion c = make_criterion(6, "heat_decay", "slopes within 0.08 of -alpha/beta and 0.12 of -1-alpha/beta, mass drift <= 1e-8");
  const auto& h = ctx.cfg["heat"];
  const int n = h["level"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, n));
  auto mesh = discretize(X, h["mesh"]);
  ResolventCalculus calc(mesh);
  const int x = X->skeletons(n)[0].center;
  const double t0 = h["window"][0], t1 = h["window"][1];
  const double alpha = vicsek_alpha(), beta = alpha + 1.0;
  const double tmax = std::pow(3.0, n * beta) / 10.0;
  auto fit = heat_decay_fit(calc, x, t0, t1, h["points"]);
  const double target = -alpha / beta, target_dt = -1.0 - alpha / beta;
  bool in_window = t0 >= 3.0 && t1 <= tmax;
  bool valid = fit.kernel.rms_residual <= ctx.tol.fit_invalid && fit.derivative.rms_residual <= ctx.tol.fit_invalid;
  c.pass = in_window && valid && std::abs(fit.kernel.slope - target) <= ctx.tol.heat_slope &&
           std::abs(fit.derivative.slope - target_dt) <= ctx.tol.heat_dt_slope &&
           fit.max_mass_drift <= ctx.tol.mass_drift;
  c.details = {{"window", {t0, t1}},
               {"admissible_window", {3.0, tmax}},
               {"kernel_fit", detail::fit_json(fit.kernel)},
               {"derivative_fit", detail::fit_json(fit.derivative)},
               {"target", target},
               {"target_derivative", target_dt},
               {"max_mass_drift", fit.max_mass_drift},
               {"fit_valid", valid}};
  std::vector<double> lt, lp, ld;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < fit.times.size(); ++i) {
    lt.push_back(std::log(fit.times[i]));
    lp.push_back(std::log(fit.values[i]));
    ld.push_back(std::log(std::abs(fit.slopes[i])));
    rows.push_back({Context::num(fit.times[i]), Context::num(fit.values[i]), Context::num(fit.slopes[i])});
  }
  ctx.write_csv("heat.csv", "t,p_t(x;x),dt_p_t(x;x)", rows);
  ctx.write_dat("heat_kernel.dat", "log t, log p_t(x,x)", lt, lp);
  ctx.write_dat("heat_dt.dat", "log t, log |d/dt p_t(x,x)|", lt, ld);
  c.summary = "slope " + detail::fmt("%.4f", fit.kernel.slope) + " (target " + detail::fmt("%.4f", target) +
              "), dt slope " + detail::fmt("%.4f", fit.derivative.slope) + " (target " +
              detail::fmt("%.4f", target_dt) + "), drift " + detail::fmt("%.2g", fit.max_mass_drift);
  return c;
}

inline Criterion criterion_l2(const Context& ctx) {
  Criterion c = make_criterion(7, "l2_characterization", "bounded iff eps <= 1/2; isometry within 1e-6; p=2 interpolation slack <= 1+1e-9");
  const auto& l = ctx.cfg["l2"];
  bool ok = true;
  auto& eps = c.details["scalar_check"] = nlohmann::json::array();
  for (double e : detail::doubles(l["eps"])) {
    auto r = scalar_rr2_check(e);
    bool expect = e <= 0.5;
    ok &= r.bounded == expect;
    eps.push_back({{"eps", e}, {"bounded", r.bounded}, {"expected", expect}, {"left_slope", r.left_slope}});
  }
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, l["level"]));
  auto mesh = discretize(X, l["mesh"]);
  ResolventCalculus calc(mesh);
  std::mt19937_64 rng(ctx.seed());
  std::normal_distribution<double> nd;
  double iso = 0.0;
  for (int i = 0; i < l["samples"].get<int>(); ++i) {
    Eigen::VectorXd f(mesh->num_nodes());
    for (auto& x : f) x = nd(rng);
    Eigen::VectorXd v = calc.heat(f, 1.0);
    double a = std::sqrt(segment_power_integral(*mesh, gradient(*mesh, v), 2.0));
    double b = lumped_l2_norm(*mesh, calc.power(v, 0.5));
    iso = std::max(iso, std::abs(a - b) / a);
  }
  ok &= iso <= ctx.tol.isometry;
  c.details["isometry_max_relative_error"] = iso;
  const auto& ip = l["interpolation"];
  const double gam = ip["gamma"], mu = ip["mu"];
  double slack2 = 0.0;
  auto& inter = c.details["interpolation"] = nlohmann::json::array();
  for (double p : detail::doubles(ip["ps"])) {
    double worst = 0.0;
    for (double th : detail::doubles(ip["thetas"]))
      for (int s = 0; s < 3; ++s)
        worst = std::max(worst, interpolation_check(calc, gam, mu, th, p, smoothed_noise(calc, 0.5, ctx.seed() + s)));
    inter.push_back({{"p", p}, {"max_slack", worst}, {"gated", p == 2.0}});
    if (p == 2.0) slack2 = worst;
  }
  ok &= slack2 <= 1.0 + ctx.tol.interpolation;
  c.pass = ok;
  c.summary = "scalar check matches on " + std::to_string(eps.size()) + " eps, isometry error " +
              detail::fmt("%.2g", iso) + ", p=2 interpolation slack " + detail::fmt("%.6f", slack2);
  return c;
}

inline Criterion criterion_resolution(const Context& ctx) {
  Criterion c = make_criterion(8, "resolution_integral", "quadrature matches direct spectral evaluation within 1e-6");
  const auto& r = ctx.cfg["resolution"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, r["level"]));
  auto mesh = discretize(X, r["mesh"]);
  SpectralCalculus calc(mesh);
  std::mt19937_64 rng(ctx.seed());
  std::normal_distribution<double> nd;
  Eigen::VectorXd f(mesh->num_nodes());
  for (auto& x : f) x = nd(rng);
  double worst = 0.0;
  auto& gs = c.details["gammas"] = nlohmann::json::array();
  for (double g : detail::doubles(r["gammas"])) {
    Eigen::VectorXd direct = calc.frac_heat(f, g);
    auto parts = resolution_split(calc, f, g, r["split"]);
    double rel = (parts.small + parts.T + parts.U - direct).norm() / direct.norm();
    worst = std::max(worst, rel);
    gs.push_back({{"gamma", g}, {"relative_error", rel}});
  }
  c.pass = worst <= ctx.tol.resolution;
  // small-time piece, reported only
  const auto& st = ctx.cfg["small_time"];
  auto Xs = std::make_shared<const CableSystem>(build_vicsek(2, st["level"]));
  auto ms = discretize(Xs, st["mesh"]);
  ResolventCalculus cs(ms);
  std::vector<Eigen::VectorXd> family;
  for (int n = 1; n < Xs->level(); ++n) family.push_back(build_gn(ms, n).values);
  for (int s = 0; s < 2; ++s) family.push_back(smoothed_noise(cs, 1.0, ctx.seed() + s));
  auto& sm = c.details["small_time"] = nlohmann::json::array();
  for (double rr : detail::doubles(st["radii"]))
    sm.push_back({{"r", rr}, {"sup_ratio", small_time_check(cs, st["gamma"], st["p"], rr, family)}});
  c.summary = "max relative error " + detail::fmt("%.2g", worst);
  return c;
}

/// The CZ fixtures and their decompositions over the lambda sweep.
struct CZRun {
  std::string fixture;
  double fraction = 0.0;
  CZDecomposition cz;
};

inline std::vector<CZRun> cz_runs(const Context& ctx) {
  const auto& z = ctx.cfg["cz"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, z["ambient"]));
  auto mesh = discretize(X, z["mesh"]);
  const double q = z["q"];
  std::vector<CZRun> out;
  for (const auto& name : z["fixtures"]) {
    MeshFunction u;
    if (name == "g2") {
      u = build_gn(mesh, 2);
    } else if (name == "g3") {
      u = build_gn(mesh, 3);
    } else {
      // g_3 modulated by heat-smoothed seeded noise
      ResolventCalculus calc(mesh);
      Eigen::VectorXd zeta = smoothed_noise(calc, z["noise_time"], ctx.seed());
      zeta /= zeta.cwiseAbs().maxCoeff();
      u = build_gn(mesh, 3);
      u.values = u.values.cwiseProduct((1.0 + z["noise_amplitude"].get<double>() * zeta.array()).matrix());
    }
    Eigen::VectorXd Mw = gradient_maximal(u, q);
    const double top = std::pow(Mw.maxCoeff(), 1.0 / q);
    for (double fr : detail::doubles(z["lambda_fractions"]))
      out.push_back({name.get<std::string>(), fr, cz_decompose(u, fr * top, q, &Mw)});
  }
  return out;
}

inline Criterion criterion_cz(const Context& ctx, const std::vector<CZRun>& runs) {
  Criterion c = make_criterion(9, "cz_suite", "all seven properties, reconstruction <= 1e-10, per-fixture constants within 3x of medians");
  c.budget_s = 120.0 * ctx.cfg["cz"]["fixtures"].size();
  const char* names[] = {"grad_g_sup", "b_ratio", "grad_b_ratio", "density_ratio", "measure_ratio", "overlap",
                         "grad_g_q_ratio", "comparability"};
  std::vector<std::string> fixtures;
  std::vector<std::array<double, 8>> consts;
  bool props = true;
  double rec = 0.0;
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : runs) {
    const auto& rep = r.cz.report;
    std::array<double, 8> v{rep.grad_g_sup_ratio, rep.b_ratio,    rep.grad_b_ratio,  rep.density_ratio,
                            rep.measure_ratio,    double(rep.overlap), rep.grad_g_q_ratio, rep.comparability};
    if (fixtures.empty() || fixtures.back() != r.fixture) {
      fixtures.push_back(r.fixture);
      consts.push_back(v);
    } else {
      for (int k = 0; k < 8; ++k) consts.back()[k] = std::max(consts.back()[k], v[k]);
    }
    props &= rep.all();
    rec = std::max(rec, rep.reconstruction_error);
    std::vector<std::string> row{r.fixture, Context::num(r.fraction), Context::num(r.cz.lambda),
                                 std::to_string(r.cz.balls.size()), rep.omega_empty ? "1" : "0",
                                 Context::num(rep.reconstruction_error)};
    for (double x : v) row.push_back(Context::num(x));
    row.push_back(rep.all() ? "1" : "0");
    rows.push_back(row);
  }
  bool uniform = true;
  auto& spread = c.details["uniformity"] = nlohmann::json::object();
  for (int k = 0; k < 8; ++k) {
    std::vector<double> col;
    for (const auto& a : consts) col.push_back(a[k]);
    double s = detail::spread(col);
    spread[names[k]] = {{"per_fixture", col}, {"max_over_median", s}};
    uniform &= s <= ctx.tol.uniform_factor;
  }
  c.details["fixtures"] = fixtures;
  c.details["max_reconstruction_error"] = rec;
  c.details["all_properties"] = props;
  auto& dec = c.details["decompositions"] = nlohmann::json::array();
  for (const auto& r : runs) dec.push_back({{"fixture", r.fixture}, {"fraction", r.fraction}, {"result", to_json(r.cz)}});
  ctx.write_csv("cz.csv",
                "fixture,fraction,lambda,balls,omega_empty,reconstruction_error,grad_g_sup,b_ratio,grad_b_ratio,"
                "density_ratio,measure_ratio,overlap,grad_g_q_ratio,comparability,all_properties",
                rows);
  c.pass = props && rec <= ctx.tol.reconstruction && uniform;
  double worst = 0.0;
  for (auto it = spread.begin(); it != spread.end(); ++it) worst = std::max(worst, it.value()["max_over_median"].get<double>());
  c.summary = std::to_string(runs.size()) + " decompositions, properties " + (props ? "all hold" : "violated") +
              ", reconstruction " + detail::fmt("%.2g", rec) + ", worst max/median " + detail::fmt("%.2f", worst);
  return c;
}

inline nlohmann::json to_json(const PartitionCheck& p) {
  return {{"sum_error", p.sum_error}, {"max_grad_radius", p.max_grad_radius}, {"grad_bound", p.grad_bound},
          {"range_ok", p.range_ok},   {"support_ok", p.support_ok},           {"j_balls", p.j_balls},
          {"j_violations", p.j_violations}};
}

inline Criterion criterion_partition(const Context& ctx, const std::vector<CZRun>& runs) {
  Criterion c = make_criterion(10, "partition_of_unity", "sum chi = 1 within 1e-12, ||grad chi|| r <= C, J gradient support exact");
  bool ok = true;
  int j_total = 0;
  double sum_err = 0.0, grad = 0.0;
  auto record = [&](const std::string& name, const Covering& cov, const PartitionCheck& pc, nlohmann::json extra) {
    extra["fixture"] = name;
    extra["balls"] = cov.balls.size();
    extra["overlap"] = cov.overlap;
    extra["comparability"] = cov.comparability;
    extra["check"] = to_json(pc);
    c.details["fixtures"].push_back(extra);
    ok &= pc.sum_error <= ctx.tol.partition_sum && pc.range_ok && pc.support_ok &&
          pc.max_grad_radius <= pc.grad_bound && pc.j_violations == 0;
    j_total += pc.j_balls;
    sum_err = std::max(sum_err, pc.sum_error);
    grad = std::max(grad, pc.max_grad_radius);
  };
  for (const auto& r : runs) {
    if (r.cz.report.omega_empty) continue;
    record(r.fixture, r.cz.cover, check_partition(*r.cz.u.mesh, r.cz.cover, r.cz.partition),
           {{"fraction", r.fraction}});
  }
  // a large ball of Omega deep inside V^(level), where J is populated
  const auto& p = ctx.cfg["partition"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, p["level"]));
  auto mesh = discretize(X, p["mesh"]);
  const int center = X->skeletons(X->level())[0].center;
  auto hops = mesh->hop_distances(center);
  std::vector<char> omega(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i) omega[i] = hops[i] * mesh->h() < p["radius"].get<double>();
  Covering cov = whitney_cover(*mesh, omega);
  PartitionOfUnity pu = build_partition(*mesh, cov);
  int kmax = -1;
  for (const auto& part : pu.parts) kmax = std::max(kmax, part.soul_level);
  record("ball", cov, check_partition(*mesh, cov, pu), {{"radius", p["radius"]}, {"max_soul_level", kmax}});
  ok &= j_total > 0;
  c.pass = ok;
  c.summary = "sum error " + detail::fmt("%.2g", sum_err) + ", max ||grad chi|| r " + detail::fmt("%.3f", grad) +
              ", " + std::to_string(j_total) + " J balls checked";
  return c;
}

inline std::vector<LevelContext> phase_levels(const Context& ctx) {
  const auto& ph = ctx.cfg["phase"];
  std::vector<LevelContext> levels;
  for (int n : detail::ints(ph["levels"])) levels.push_back(make_level(n, ph["margin"], ph["mesh"]));
  return levels;
}

inline Criterion criterion_phase(const Context& ctx, const std::vector<LevelContext>& levels) {
  Criterion c = make_criterion(11, "phase_separation",
              "gamma=1/2: growth >= 1.15 at p=1.1, <= 1.05 at p=3; verdicts agree with p* at gamma in {1/2, 0.58}");
  const auto& ph = ctx.cfg["phase"];
  const auto gammas = detail::doubles(ph["gammas"]), ps = detail::doubles(ph["ps"]);
  const double band = ph["band"], margin = ph["growth_margin"];
  auto scan = phase_scan(levels, gammas, ps, band, margin);
  const auto ns = detail::ints(ph["levels"]);
  std::vector<std::vector<std::string>> rows;
  auto& pts = c.details["points"] = nlohmann::json::array();
  bool agree = true;
  int disagreements = 0, verdicts = 0;
  for (const auto& pt : scan) {
    for (std::size_t i = 0; i < ns.size(); ++i)
      rows.push_back({Context::num(pt.gamma), Context::num(pt.p), Context::num(pt.p_star), std::to_string(ns[i]),
                      Context::num(pt.ratios[i]), side_name(pt.side), Context::num(pt.growth),
                      Context::num(pt.predicted)});
    pts.push_back({{"gamma", pt.gamma}, {"p", pt.p}, {"p_star", pt.p_star}, {"side", side_name(pt.side)},
                   {"ratios", pt.ratios}, {"growth", pt.growth}, {"predicted", pt.predicted},
                   {"grows", pt.grows}, {"agrees", pt.agrees}});
    if (pt.side != Side::Threshold) {
      ++verdicts;
      disagreements += !pt.agrees;
    }
    if (std::abs(pt.gamma - 0.5) < 1e-12 || std::abs(pt.gamma - 0.58) < 1e-12) agree &= pt.agrees;
  }
  ctx.write_csv("phase.csv", "gamma,p,p_star,n,ratio,side,growth,predicted", rows);
  auto find = [&](double g, double p) -> const PhasePoint* {
    for (const auto& pt : scan)
      if (std::abs(pt.gamma - g) < 1e-12 && std::abs(pt.p - p) < 1e-12) return &pt;
    return nullptr;
  };
  const PhasePoint* lo = find(0.5, 1.1);
  const PhasePoint* hi = find(0.5, 3.0);
  bool ok = lo && hi && detail::has(gammas, 0.58);
  if (ok) {
    ok &= lo->growth >= ctx.tol.phase_fail_growth && hi->growth <= ctx.tol.phase_hold_growth &&
          lo->growth - hi->growth >= margin && agree;
  } else {
    c.details["error"] = "phase grid must contain (1/2, 1.1), (1/2, 3.0) and gamma = 0.58";
  }
  auto neg = negative_mechanism(levels, 0.5, 1.1);
  double core2 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns[i] == 2) core2 = neg.core_min[i];
  c.details["negative_mechanism"] = {{"gamma", neg.gamma}, {"p", neg.p}, {"heat_p", neg.heat_p},
                                     {"heat_1", neg.heat_1}, {"grad_p", neg.grad_p},
                                     {"lower_bound", neg.lower_bound}, {"core_min", neg.core_min},
                                     {"growth", neg.growth}, {"target", neg.target}};
  ok &= neg.growth > 1.0 && core2 >= ctx.tol.core_lower;
  c.details["p_star_0_58"] = p_star(0.58, vicsek_alpha());
  c.details["disagreements_all_gammas"] = disagreements;
  c.pass = ok;
  c.summary = "growth " + (lo ? detail::fmt("%.3f", lo->growth) : "?") + " at p=1.1, " +
              (hi ? detail::fmt("%.3f", hi->growth) : "?") + " at p=3; " +
              std::to_string(verdicts - disagreements) + "/" + std::to_string(verdicts) +
              " verdicts agree; p*(0.58) = " + detail::fmt("%.3f", p_star(0.58, vicsek_alpha())) +
              "; Nash lower bound growth " + detail::fmt("%.3f", neg.growth);
  return c;
}

inline Criterion criterion_nash(const Context& ctx, const std::vector<LevelContext>& levels) {
  Criterion c = make_criterion(12, "nash_inequality", "per (gamma,p): max_n slack <= 3 median_n slack; precondition for n >= 2");
  const auto& nh = ctx.cfg["nash"];
  const auto ns = detail::ints(ctx.cfg["phase"]["levels"]);
  bool ok = true;
  double worst = 0.0;
  std::vector<std::vector<std::string>> rows;
  auto& grid = c.details["grid"] = nlohmann::json::array();
  for (double g : detail::doubles(nh["gammas"]))
    for (double p : detail::doubles(nh["ps"])) {
      std::vector<double> slack;
      std::vector<bool> pre;
      for (std::size_t i = 0; i < levels.size(); ++i) {
        auto r = nash_check(*levels[i].calc, g, p, levels[i].heat_g);
        slack.push_back(r.slack);
        pre.push_back(r.precondition);
        if (ns[i] >= 2) ok &= r.precondition;
        ok &= std::isfinite(r.slack) && r.slack > 0.0;
        rows.push_back({Context::num(g), Context::num(p), std::to_string(ns[i]), Context::num(r.slack),
                        r.precondition ? "1" : "0"});
      }
      double s = detail::spread(slack);
      worst = std::max(worst, s);
      ok &= s <= ctx.tol.uniform_factor;
      grid.push_back({{"gamma", g}, {"p", p}, {"exponent", nash_exponent(g, p, vicsek_alpha())},
                      {"slack", slack}, {"precondition", pre}, {"max_over_median", s}});
    }
  ctx.write_csv("nash.csv", "gamma,p,n,slack,precondition", rows);
  c.details["alpha_prime"] = 2.0 * vicsek_alpha() / (vicsek_alpha() + 1.0);
  c.pass = ok;
  c.summary = std::to_string(grid.size()) + " (gamma,p) points, worst max/median slack " + detail::fmt("%.3f", worst);
  return c;
}

inline Criterion criterion_annulus(const Context& ctx) {
  Criterion c = make_criterion(13, "annulus_decay", "||T b||_{L^q(X\\4B)} r^{beta gamma}/||b||_q within a factor 3 across r");
  const auto& a = ctx.cfg["annulus"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(2, a["level"]));
  auto mesh = discretize(X, a["mesh"]);
  ResolventCalculus calc(mesh);
  const double gamma = a["gamma"];
  const double q = p_star(gamma, vicsek_alpha());
  std::vector<double> T;
  std::vector<std::vector<std::string>> rows;
  auto& rs = c.details["radii"] = nlohmann::json::array();
  for (int k : detail::ints(a["skeleton_levels"])) {
    auto r = annulus_decay_check(calc, k, gamma, q);
    T.push_back(r.T_constant);
    rs.push_back({{"k", k}, {"r", r.r}, {"T", r.T_constant}, {"U", r.U_constant}, {"U0", r.U0_constant}});
    rows.push_back({std::to_string(k), Context::num(r.r), Context::num(r.T_constant), Context::num(r.U_constant),
                    Context::num(r.U0_constant)});
  }
  ctx.write_csv("annulus.csv", "k,r,T_constant,U_constant,U0_constant", rows);
  const double lo = *std::min_element(T.begin(), T.end()), hi = *std::max_element(T.begin(), T.end());
  c.details["gamma"] = gamma;
  c.details["q"] = q;
  c.details["max_over_min"] = hi / lo;
  c.pass = lo > 0.0 && hi / lo <= ctx.tol.annulus_factor;
  // reverse Hoelder on skeleton balls, reported only
  const auto& gr = ctx.cfg["grh"];
  auto Xg = std::make_shared<const CableSystem>(build_vicsek(2, gr["level"]));
  auto mg = discretize(Xg, gr["mesh"]);
  auto& gh = c.details["grh"] = nlohmann::json::array();
  for (int k : detail::ints(gr["skeleton_levels"])) {
    std::mt19937_64 rng(ctx.seed() + k);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<double> vals(mg->num_nodes());
    for (auto& v : vals) v = ud(rng);
    const int s = origin_skeleton(*Xg, k);
    const int z = Xg->skeletons(k)[s].center;
    auto res = grh_check(mg, z, static_cast<double>(pow3(k)), [&](int i) { return vals[i]; });
    gh.push_back({{"k", k}, {"r", static_cast<double>(pow3(k))}, {"ratio", res.ratio}});
  }
  c.summary = "T constants";
  for (double t : T) c.summary += " " + detail::fmt("%.4g", t);
  c.summary += ", max/min " + detail::fmt("%.3f", hi / lo) + " (q = p*(" + detail::fmt("%.2f", gamma) + ") = " +
               detail::fmt("%.3f", q) + ")";
  return c;
}

struct SuiteResult {
  std::vector<Criterion> criteria;
  bool pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) {
      return c.pass && (c.budget_s <= 0.0 || c.runtime_s <= c.budget_s);
    });
  }
};

/// Runs tasks on `workers` threads; each task writes only its own slot.
inline void run_pool(std::vector<std::function<void()>>& tasks, int workers) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < tasks.size();) tasks[i]();
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(workers, static_cast<int>(tasks.size())); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

inline std::string file_name(const Criterion& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "criterion_%02d_%s.json", c.id, c.name.c_str());
  return buf;
}

/// Criteria subset by id, timed, with failures captured per criterion.
inline std::vector<Criterion> run_criteria(const Context& ctx, const std::vector<int>& ids) {
  using clock = std::chrono::steady_clock;
  std::vector<Criterion> out(ids.size());
  // groups sharing expensive inputs run as one task
  std::vector<std::function<void()>> tasks;
  auto guarded = [&](std::size_t slot, int id, const std::function<Criterion()>& f) {
    auto t0 = clock::now();
    try {
      out[slot] = f();
    } catch (const std::exception& e) {
      out[slot] = failed_criterion(id, e.what());
    }
    out[slot].runtime_s = std::chrono::duration<double>(clock::now() - t0).count();
  };
  auto slot_of = [&](int id) -> int {
    auto it = std::find(ids.begin(), ids.end(), id);
    return it == ids.end() ? -1 : static_cast<int>(it - ids.begin());
  };
  const std::vector<std::pair<int, std::function<Criterion(const Context&)>>> single = {
      {1, criterion_geometry}, {2, criterion_volume}, {3, criterion_green},   {4, criterion_poincare},
      {5, criterion_gn},       {6, criterion_heat},   {7, criterion_l2},      {8, criterion_resolution},
      {13, criterion_annulus}};
  for (const auto& [id, f] : single)
    if (int s = slot_of(id); s >= 0) tasks.push_back([&, s, id, f] { guarded(s, id, [&] { return f(ctx); }); });
  int s9 = slot_of(9), s10 = slot_of(10);
  if (s9 >= 0 || s10 >= 0)
    tasks.push_back([&, s9, s10] {
      std::vector<CZRun> runs;
      double shared = 0.0;
      auto t0 = clock::now();
      try {
        runs = cz_runs(ctx);
      } catch (const std::exception& e) {
        for (int s : {s9, s10})
          if (s >= 0) {
            out[s] = failed_criterion(s == s9 ? 9 : 10, e.what());
          }
        return;
      }
      shared = std::chrono::duration<double>(clock::now() - t0).count();
      if (s9 >= 0) guarded(s9, 9, [&] { return criterion_cz(ctx, runs); });
      if (s10 >= 0) guarded(s10, 10, [&] { return criterion_partition(ctx, runs); });
      if (s9 >= 0) out[s9].runtime_s += shared;
    });
  int s11 = slot_of(11), s12 = slot_of(12);
  if (s11 >= 0 || s12 >= 0)
    tasks.push_back([&, s11, s12] {
      std::vector<LevelContext> levels;
      try {
        levels = phase_levels(ctx);
      } catch (const std::exception& e) {
        for (int s : {s11, s12})
          if (s >= 0) out[s] = failed_criterion(s == s11 ? 11 : 12, e.what());
        return;
      }
      if (s11 >= 0) guarded(s11, 11, [&] { return criterion_phase(ctx, levels); });
      if (s12 >= 0) guarded(s12, 12, [&] { return criterion_nash(ctx, levels); });
    });
  run_pool(tasks, ctx.cfg["workers"]);
  return out;
}

/// Result files: one JSON per criterion, summary.json, CSV and .dat series.
/// timing.json holds the volatile fields (timestamp, runtimes).
inline void write_results(const Context& ctx, const std::vector<Criterion>& cs) {
  nlohmann::json summary;
  summary["config"] = ctx.cfg;
  summary["tolerances"] = to_json(ctx.tol);
  nlohmann::json timing;
  timing["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  for (const auto& c : cs) {
    nlohmann::json j{{"id", c.id}, {"name", c.name}, {"rule", c.rule}, {"pass", c.pass},
                     {"summary", c.summary}, {"details", c.details}};
    ctx.write_json(file_name(c), j);
    summary["criteria"].push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"summary", c.summary}});
    timing["criteria"].push_back({{"id", c.id}, {"runtime_s", c.runtime_s}, {"budget_s", c.budget_s},
                                  {"within_budget", c.budget_s <= 0.0 || c.runtime_s <= c.budget_s}});
  }
  ctx.write_json("summary.json", summary);
  std::ofstream(ctx.out / "timing.json") << timing.dump(2) << "\n";
}

/// Regular files of a result directory other than timing.json, sorted by name.
inline std::vector<std::filesystem::path> result_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "timing.json") out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Compares two result directories byte for byte (timing.json excluded).
inline std::vector<std::string> compare_results(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::vector<std::string> diffs;
  auto fa = result_files(a), fb = result_files(b);
  if (fa != fb) diffs.push_back("file lists differ");
  for (const auto& f : fa)
    if (std::filesystem::exists(b / f) && slurp(a / f) != slurp(b / f)) diffs.push_back(f.string());
  return diffs;
}

/// Criteria 1-13, then the same run again into a scratch directory for
/// criterion 14 when determinism_check is set.
inline SuiteResult run_all(const nlohmann::json& cfg, const std::filesystem::path& out,
                           const std::function<void(const Criterion&)>& on_done = {}) {
  std::filesystem::create_directories(out);
  Context ctx(cfg, out);
  std::vector<int> ids;
  for (int i = 1; i <= 13; ++i) ids.push_back(i);
  SuiteResult res;
  res.criteria = run_criteria(ctx, ids);
  if (on_done)
    for (const auto& c : res.criteria) on_done(c);
  if (cfg["determinism_check"].get<bool>()) {
    auto t0 = std::chrono::steady_clock::now();
    Criterion d = make_criterion(14, "determinism", "second run with the same config and seed gives byte-identical result files");
    auto scratch = out / ".rerun";
    std::filesystem::remove_all(scratch);
    std::filesystem::create_directories(scratch);
    try {
      // the first run's files are written before comparing
      write_results(ctx, res.criteria);
      Context again(cfg, scratch);
      write_results(again, run_criteria(again, ids));
      auto diffs = compare_results(out, scratch);
      d.pass = diffs.empty();
      d.details["files_compared"] = result_files(out).size();
      d.details["differences"] = diffs;
      d.summary = d.pass ? std::to_string(result_files(out).size()) + " files identical"
                         : std::to_string(diffs.size()) + " files differ";
    } catch (const std::exception& e) {
      d.summary = std::string("error: ") + e.what();
    }
    std::filesystem::remove_all(scratch);
    d.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.criteria.push_back(d);
    if (on_done) on_done(d);
  }
  write_results(ctx, res.criteria);
  return res;
}

}  // namespace vicsek
