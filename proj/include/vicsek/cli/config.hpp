#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vicsek/error.hpp"

extern char** environ;

namespace vicsek {

inline constexpr const char* kVersion = "1.0.0";

/// Every field a run config may carry, with its default value.
inline nlohmann::json default_config() {
  return nlohmann::json::parse(R"({
  "dimension": 2,
  "seed": 1,
  "workers": 1,
  "determinism_check": true,
  "build": {"level": 1, "mesh": 1, "export": false},
  "spectrum": {"level": 2, "mesh": 2, "k_max": 0, "dense_limit": 6000},
  "geometry": {"max_level": 4},
  "volume": {"level": 4, "samples": 20, "radii": 12},
  "green": {"level": 3, "mesh": 4, "samples": 100},
  "poincare": {"levels": [1, 2, 3, 4], "mesh": 4, "dense_limit": 600, "q_empirical": [1.0, 1.5],
               "noise_samples": 4},
  "gn": {"levels": [1, 2, 3, 4], "meshes": [1, 2, 4], "ps": [1.1, 2.0, 3.0]},
  "heat": {"level": 4, "mesh": 2, "window": [3.0, 5000.0], "points": 25},
  "l2": {"eps": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], "level": 3, "mesh": 2, "samples": 50,
         "interpolation": {"gamma": 0.7, "mu": 0.2, "thetas": [0.0, 0.25, 0.5, 0.75, 1.0], "ps": [2.0, 3.0]}},
  "resolution": {"level": 2, "mesh": 4, "gammas": [0.3, 0.5, 0.594, 0.7], "split": 5.0},
  "cz": {"ambient": 4, "mesh": 4, "q": 2.0, "fixtures": ["g2", "g3", "noise"],
         "lambda_fractions": [0.9, 0.7, 0.5, 0.35, 0.25], "noise_time": 9.0, "noise_amplitude": 0.5},
  "partition": {"level": 6, "mesh": 1, "radius": 650.0},
  "phase": {"levels": [1, 2, 3, 4], "margin": 1, "mesh": 4,
            "gammas": [0.5, 0.55, 0.58, 0.6, 0.7], "ps": [1.01, 1.1, 1.2, 1.5, 2.0, 3.0],
            "band": 0.05, "growth_margin": 0.02},
  "nash": {"gammas": [0.5, 0.55, 0.6], "ps": [1.5, 2.0, 3.0]},
  "annulus": {"level": 4, "mesh": 2, "gamma": 0.55, "skeleton_levels": [1, 2, 3]},
  "grh": {"level": 4, "mesh": 2, "skeleton_levels": [1, 2, 3]},
  "small_time": {"level": 3, "mesh": 2, "gamma": 0.5, "p": 2.0, "radii": [0.01, 0.1, 1.0]}
})");
}

namespace detail {

inline void check_shape(const nlohmann::json& def, const nlohmann::json& val, const std::string& path) {
  auto fail = [&](const std::string& why) { throw UsageError("config field '" + path + "': " + why); };
  if (def.is_object()) {
    if (!val.is_object()) fail("expected an object");
    for (auto it = val.begin(); it != val.end(); ++it) {
      std::string sub = path.empty() ? it.key() : path + "." + it.key();
      if (!def.contains(it.key())) throw UsageError("config field '" + sub + "': unknown field");
      check_shape(def[it.key()], it.value(), sub);
    }
  } else if (def.is_array()) {
    if (!val.is_array() || val.empty()) fail("expected a nonempty array");
    for (std::size_t i = 0; i < val.size(); ++i)
      check_shape(def[0], val[i], path + "[" + std::to_string(i) + "]");
  } else if (def.is_boolean()) {
    if (!val.is_boolean()) fail("expected a boolean");
  } else if (def.is_string()) {
    if (!val.is_string()) fail("expected a string");
  } else if (def.is_number_integer()) {
    if (!val.is_number_integer()) fail("expected an integer");
  } else if (def.is_number()) {
    if (!val.is_number()) fail("expected a number");
  }
}

inline nlohmann::json parse_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return text;
  }
}

}  // namespace detail

/// Sets a dotted path, e.g. "phase.mesh=2" or "cz.lambda_fractions=[0.5,0.25]".
inline void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override '" + assignment + "' is not KEY=VALUE");
  std::string key = assignment.substr(0, eq);
  nlohmann::json::json_pointer ptr;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw UsageError("override key '" + key + "' has an empty component");
    ptr /= part;
  }
  cfg[ptr] = detail::parse_value(assignment.substr(eq + 1));
}

/// VF_PHASE__MESH=2 sets phase.mesh; names are lowercased, "__" separates levels.
inline std::vector<std::string> env_overrides() {
  std::vector<std::string> out;
  for (char** e = environ; *e; ++e) {
    std::string s = *e;
    if (s.rfind("VF_", 0) != 0) continue;
    auto eq = s.find('=');
    std::string key = s.substr(3, eq - 3), val = s.substr(eq + 1);
    std::string dotted;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (key.compare(i, 2, "__") == 0) {
        dotted += '.';
        ++i;
      } else {
        dotted += static_cast<char>(std::tolower(static_cast<unsigned char>(key[i])));
      }
    }
    out.push_back(dotted + "=" + val);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Range checks beyond the shape of the defaults.
inline void validate_config(const nlohmann::json& cfg) {
  detail::check_shape(default_config(), cfg, "");
  auto fail = [](const std::string& path, const std::string& why) {
    throw UsageError("config field '" + path + "': " + why);
  };
  if (cfg["dimension"] != 2) fail("dimension", "only N = 2 is supported by the experiment suite");
  if (cfg["workers"].get<int>() < 1) fail("workers", "must be at least 1");
  auto positive_ints = [&](const std::string& path) {
    auto ptr = nlohmann::json::json_pointer("/" + std::regex_replace(path, std::regex("\\."), "/"));
    const auto& v = cfg[ptr];
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i].get<int>() < 1) fail(path + "[" + std::to_string(i) + "]", "must be at least 1");
    } else if (v.get<int>() < 1) {
      fail(path, "must be at least 1");
    }
  };
  for (const char* p : {"build.mesh", "spectrum.mesh", "geometry.max_level", "volume.level", "volume.samples", "green.level", "green.mesh",
                        "green.samples", "poincare.levels", "poincare.mesh", "gn.levels", "gn.meshes",
                        "heat.level", "heat.mesh", "l2.level", "l2.mesh", "l2.samples", "resolution.level",
                        "resolution.mesh", "cz.mesh", "partition.level", "partition.mesh", "phase.levels",
                        "phase.margin", "phase.mesh", "annulus.level", "annulus.mesh",
                        "annulus.skeleton_levels", "grh.level", "grh.mesh", "grh.skeleton_levels",
                        "small_time.level", "small_time.mesh"})
    positive_ints(p);
  if (cfg["build"]["level"].get<int>() < 0) fail("build.level", "must be nonnegative");
  if (cfg["spectrum"]["level"].get<int>() < 0) fail("spectrum.level", "must be nonnegative");
  if (cfg["spectrum"]["k_max"].get<int>() < 0) fail("spectrum.k_max", "must be nonnegative (0 = all)");
  if (cfg["poincare"]["dense_limit"].get<int>() < 0) fail("poincare.dense_limit", "must be nonnegative");
  if (cfg["volume"]["radii"].get<int>() < 2) fail("volume.radii", "must be at least 2");
  if (cfg["heat"]["points"].get<int>() < 2) fail("heat.points", "must be at least 2");
  if (cfg["phase"]["levels"].size() < 2) fail("phase.levels", "needs at least two levels");
  if (cfg["poincare"]["levels"].size() < 2) fail("poincare.levels", "needs at least two levels");
  auto w = cfg["heat"]["window"];
  if (w.size() != 2 || !(w[0].get<double>() > 0.0 && w[1].get<double>() > w[0].get<double>()))
    fail("heat.window", "must be [t0, t1] with 0 < t0 < t1");
  for (const char* grid : {"phase.ps", "nash.ps", "gn.ps", "l2.interpolation.ps"}) {
    auto ptr = nlohmann::json::json_pointer("/" + std::regex_replace(grid, std::regex("\\."), "/"));
    for (const auto& p : cfg[ptr])
      if (!(p.get<double>() > 1.0)) fail(grid, "exponents must exceed 1");
  }
  for (const auto& p : cfg["poincare"]["q_empirical"])
    if (!(p.get<double>() >= 1.0)) fail("poincare.q_empirical", "exponents must be at least 1");
  for (const auto& e : cfg["l2"]["eps"])
    if (!(e.get<double>() > 0.0 && e.get<double>() < 1.0)) fail("l2.eps", "values must lie in (0,1)");
  for (const auto& f : cfg["cz"]["lambda_fractions"])
    if (!(f.get<double>() > 0.0)) fail("cz.lambda_fractions", "values must be positive");
  for (const auto& f : cfg["cz"]["fixtures"])
    if (f != "g2" && f != "g3" && f != "noise") fail("cz.fixtures", "known fixtures are g2, g3, noise");
  double q = cfg["cz"]["q"];
  if (!(q >= 1.0 && q <= 2.0)) fail("cz.q", "must lie in [1,2]");
  for (auto [sec, key] : {std::pair{"phase", "gammas"}, {"nash", "gammas"}})
    for (const auto& g : cfg[sec][key])
      if (!(g.get<double>() > 0.0 && g.get<double>() < 1.0)) fail(std::string(sec) + "." + key, "values must lie in (0,1)");
  for (const auto& g : cfg["resolution"]["gammas"])
    if (!(g.get<double>() > 0.0)) fail("resolution.gammas", "values must be positive");
  if (cfg["cz"]["ambient"].get<int>() < 4) fail("cz.ambient", "the g3 fixture needs ambient level 4 or more");
  if (cfg["partition"]["radius"].get<double>() <= 0.0) fail("partition.radius", "must be positive");
}

/// Defaults, then the config file, then VF_ variables, then --set flags.
inline nlohmann::json load_config(const std::string& path, const std::vector<std::string>& sets) {
  nlohmann::json cfg = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    nlohmann::json user;
    try {
      user = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    detail::check_shape(default_config(), user, "");
    cfg.merge_patch(user);
  }
  for (const auto& s : env_overrides()) apply_override(cfg, s);
  for (const auto& s : sets) apply_override(cfg, s);
  validate_config(cfg);
  return cfg;
}

/// 64-bit FNV-1a of the compact serialization.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const nlohmann::json& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.dump())));
  return buf;
}

}  // namespace vicsek
