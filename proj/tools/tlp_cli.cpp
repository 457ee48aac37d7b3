// Command-line front end: run a solver, validate a scenario, or grid-search.
//
// Exit codes: 0 success, 1 invalid input, 2 solver failure.

#include "tlp/harness.hpp"
#include "tlp/scenario_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

int exit_code_for(const tlp::Error& e) {
  switch (e.code()) {
    case tlp::ErrorCode::InvalidScenario:
    case tlp::ErrorCode::InvalidOrigin:
    case tlp::ErrorCode::Incompatible:
    case tlp::ErrorCode::DimensionGuard:
    case tlp::ErrorCode::Io:
      return 1;
    default:
      return 2;
  }
}

void print_prices(const tlp::PriceMatrix& p) {
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    std::printf("  t=%-3ld", static_cast<long>(t + 1));
    for (Eigen::Index l = 0; l < p.cols(); ++l) std::printf(" %9.6f", p(t, l));
    std::printf("\n");
  }
}

void print_summary(const tlp::RunResult& r) {
  const auto& rep = r.report;
  const auto& c = r.comparison;
  std::printf("solver            %s (%s)\n", rep.solver.c_str(), rep.mode.c_str());
  std::printf("objective H       %.10g\n", rep.objective);
  std::printf("flat H            %.10g\n", c.H_flat);
  std::printf("delta H           %.10g\n", c.delta_H);
  std::printf("total cost        %.10g (flat %.10g)\n", c.total_cost_best, c.total_cost_flat);
  std::printf("cost reduction    %.4f%%\n", 100.0 * c.cost_reduction);
  std::printf("average discount  %.6f\n", rep.metrics.average_discount);
  std::printf("excess demand     %.6f\n", rep.metrics.excess_demand);
  std::printf("traffic variance  %.6f (initial %.6f)\n", c.variance_best, c.variance_initial);
  std::printf("user payoff       %.6f (change vs flat %+.6g)\n", rep.metrics.total_user_payoff,
              c.user_payoff_change);
  std::printf("evaluations       %ld in %.3fs\n", rep.evaluations, rep.wall_time_s);
  for (const auto& n : rep.notes) std::printf("note: %s\n", n.c_str());
  std::printf("prices:\n");
  print_prices(rep.best_prices);
}

int cmd_validate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tlp::Error(tlp::ErrorCode::Io, "cannot open scenario file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw tlp::Error(tlp::ErrorCode::InvalidScenario, path + ": " + e.what());
  }
  tlp::Scenario s = tlp::parse_scenario(j, std::filesystem::path(path).parent_path());
  tlp::renormalize_profiles(s);
  const auto violations = tlp::validate_scenario(s);
  for (const auto& v : violations) std::printf("%s: %s\n", v.path.c_str(), v.message.c_str());
  if (!violations.empty()) return 1;
  std::printf("ok: T0=%d L=%d T=%d types=%d\n", s.T0, s.L, s.T, s.num_types());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time- and location-aware mobile data pricing"};
  app.require_subcommand(1);

  std::string scenario, solver = "dycors", mode = "time-location", out, config;
  std::uint64_t seed = 0;
  double step = 0.01;

  auto* run = app.add_subcommand("run", "solve for prices and report against flat pricing");
  run->add_option("--scenario", scenario, "scenario JSON file")->required();
  run->add_option("--solver", solver, "spg, bcd, dycors or oracle-grid");
  run->add_option("--mode", mode, "time-location, time-only or flat");
  run->add_option("--seed", seed, "random seed");
  run->add_option("--out", out, "report JSON file");
  run->add_option("--config", config, "solver config JSON file");

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", scenario, "scenario JSON file")->required();

  auto* oracle = app.add_subcommand("oracle", "exhaustive grid search");
  oracle->add_option("--scenario", scenario, "scenario JSON file")->required();
  oracle->add_option("--step", step, "grid spacing");
  oracle->add_option("--mode", mode, "time-location, time-only or flat");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(scenario);

    if (*oracle) {
      const tlp::Scenario s = tlp::load_scenario(scenario);
      const auto g = tlp::oracle_grid(s, step, tlp::parse_pricing_mode(mode));
      std::printf("best H            %.12g\n", g.best_H);
      std::printf("grid points       %ld\n", g.evaluations);
      std::printf("prices:\n");
      print_prices(g.best_p);
      return 0;
    }

    tlp::RunSpec spec;
    spec.scenario = scenario;
    spec.solver = tlp::parse_solver(solver);
    spec.mode = tlp::parse_pricing_mode(mode);
    spec.seed = seed;
    spec.out = out;
    if (!config.empty()) spec.config = tlp::load_solver_config(config);
    print_summary(tlp::run(spec));
    return 0;
  } catch (const tlp::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", tlp::to_string(e.code()), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
