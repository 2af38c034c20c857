// vicsek_lab: experiments on discretized Vicsek cable systems.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "vicsek/cli/config.hpp"
#include "vicsek/experiments/suite.hpp"
#include "vicsek/geometry/io.hpp"
#include "vicsek/spectral/eigen_basis.hpp"

using namespace vicsek;

namespace {

void print(const Criterion& c) {
  bool budget = c.budget_s <= 0.0 || c.runtime_s <= c.budget_s;
  std::printf("[%s] %2d %-22s %s (%.1fs%s)\n", c.pass && budget ? "PASS" : "FAIL", c.id, c.name.c_str(),
              c.summary.c_str(), c.runtime_s, budget ? "" : ", over budget");
  std::fflush(stdout);
}

int report(const Context& ctx, const std::vector<Criterion>& cs) {
  write_results(ctx, cs);
  bool ok = true;
  for (const auto& c : cs) {
    print(c);
    ok &= c.pass;
  }
  return ok ? 0 : 1;
}

int cmd_build(const Context& ctx) {
  const auto& b = ctx.cfg["build"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(ctx.cfg["dimension"], b["level"]));
  auto mesh = discretize(X, b["mesh"]);
  nlohmann::json j{{"dimension", X->dimension()},
                   {"level", X->level()},
                   {"vertices", X->num_vertices()},
                   {"cables", X->num_cables()},
                   {"measure", X->measure()},
                   {"diameter", 2 * pow3(X->level())},
                   {"mesh", mesh->per_cable()},
                   {"nodes", mesh->num_nodes()},
                   {"segments", mesh->num_segments()}};
  for (int k = 0; k <= X->level(); ++k) j["skeleton_counts"].push_back(X->skeletons(k).size());
  ctx.write_json("build.json", j);
  if (b["export"].get<bool>()) ctx.write_json("cable_system.json", to_json(*X));
  std::printf("V^(%d): %d vertices, %d cables, mesh M=%d with %d nodes\n", X->level(), X->num_vertices(),
              X->num_cables(), mesh->per_cable(), mesh->num_nodes());
  return 0;
}

int cmd_spectrum(const Context& ctx) {
  const auto& s = ctx.cfg["spectrum"];
  auto X = std::make_shared<const CableSystem>(build_vicsek(ctx.cfg["dimension"], s["level"]));
  auto mesh = discretize(X, s["mesh"]);
  auto KD = assemble(*mesh);
  const int k = s["k_max"];
  auto basis = eigendecompose(*mesh, KD, k > 0 ? k : -1, s["dense_limit"], ctx.seed());
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < basis.size(); ++i) rows.push_back({std::to_string(i), Context::num(basis.values[i])});
  ctx.write_csv("spectrum.csv", "index,eigenvalue", rows);
  nlohmann::json j{{"level", X->level()},
                   {"mesh", mesh->per_cable()},
                   {"nodes", mesh->num_nodes()},
                   {"pairs", basis.size()},
                   {"complete", basis.complete},
                   {"max_residual", basis.max_residual},
                   {"lambda_1", basis.size() > 1 ? basis.values[1] : 0.0},
                   {"lambda_max", basis.values[basis.size() - 1]}};
  ctx.write_json("spectrum.json", j);
  std::printf("%d eigenpairs on %d nodes, lambda_1 = %.6g, max residual %.2g\n", basis.size(),
              mesh->num_nodes(), basis.size() > 1 ? basis.values[1] : 0.0, basis.max_residual);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vicsek cable-system experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir = "results";
  std::vector<std::string> sets;
  int workers = 0;
  long long seed = -1;
  app.add_option("--config", config_path, "JSON run config");
  app.add_option("--set", sets, "override a config field, KEY=VALUE with a dotted key (repeatable)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--seed", seed, "random seed");
  const char* names[][2] = {{"build", "cable system and mesh summary"},
                            {"spectrum", "eigenbasis summary and export"},
                            {"poincare", "skeleton Poincare constants"},
                            {"phase", "phase scan of the reverse Riesz ratio"},
                            {"cz", "Calderon-Zygmund decompositions and partitions of unity"},
                            {"heat", "heat-kernel decay"},
                            {"all", "full acceptance suite"}};
  for (auto& n : names) app.add_subcommand(n[0], n[1]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (workers > 0) sets.push_back("workers=" + std::to_string(workers));
    if (seed >= 0) sets.push_back("seed=" + std::to_string(seed));
    nlohmann::json cfg = load_config(config_path, sets);
    std::filesystem::create_directories(out_dir);
    Context ctx(cfg, out_dir);
    if (cmd == "build") return cmd_build(ctx);
    if (cmd == "spectrum") return cmd_spectrum(ctx);
    if (cmd == "poincare") return report(ctx, run_criteria(ctx, {4}));
    if (cmd == "phase") return report(ctx, run_criteria(ctx, {11, 12}));
    if (cmd == "cz") return report(ctx, run_criteria(ctx, {9, 10}));
    if (cmd == "heat") return report(ctx, run_criteria(ctx, {6}));
    auto res = run_all(cfg, out_dir, print);
    std::printf("%s\n", res.pass() ? "all criteria pass" : "some criteria fail");
    return res.pass() ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const SizeError& e) {
    std::fprintf(stderr, "resource error: %s\n", e.what());
    return 3;
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "resource error: out of memory\n");
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
