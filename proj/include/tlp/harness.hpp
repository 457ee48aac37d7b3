#ifndef TLP_HARNESS_HPP
#define TLP_HARNESS_HPP

#include "tlp/dycors.hpp"
#include "tlp/model.hpp"
#include "tlp/objective.hpp"
#include "tlp/penalty_bcd.hpp"
#include "tlp/pricing_mode.hpp"
#include "tlp/smoothing_spg.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace tlp {

enum class SolverKind { Spg, Bcd, Dycors, OracleGrid };

const char* to_string(SolverKind k);
/// Accepts "spg", "bcd", "dycors" and "oracle-grid".
SolverKind parse_solver(const std::string& name);

struct SolverConfig {
  SpgConfig spg;
  PenaltyConfig bcd;
  DycorsConfig dycors;
  double grid_step = 0.01;
};

/// {"spg": {...}, "bcd": {...}, "dycors": {...}, "oracle": {"step": ...}};
/// keys mirror the struct fields. Unknown keys are rejected.
SolverConfig parse_solver_config(const nlohmann::json& j);
SolverConfig load_solver_config(const std::filesystem::path& path);

struct RunSpec {
  std::filesystem::path scenario;
  SolverKind solver = SolverKind::Dycors;
  PricingMode mode = PricingMode::TimeLocation;
  SolverConfig config;
  std::filesystem::path out;  // empty: no report file
  std::uint64_t seed = 0;
};

/// Everything measured against flat pricing at p0.
struct Comparison {
  double H_flat = 0.0;
  double H_best = 0.0;
  double delta_H = 0.0;            // H_flat - H_best
  double total_cost_flat = 0.0;    // excess cost + discount loss
  double total_cost_best = 0.0;
  double cost_reduction = 0.0;     // relative drop in total cost; 0 when flat costs nothing
  double user_payoff_flat = 0.0;
  double user_payoff_change = 0.0;
  double variance_initial = 0.0;   // traffic variance with nobody shifting
  double variance_best = 0.0;
};

struct RunResult {
  SolveReport report;
  Comparison comparison;
};

/// spg needs all-logarithmic and bcd all-linear populations; bcd supports
/// time-location and flat modes only. Throws Incompatible otherwise.
void check_compatibility(const Scenario& s, SolverKind solver, PricingMode mode);

Comparison compare_with_flat(const Scenario& s, const SolveReport& r);

RunResult solve(const Scenario& s, SolverKind solver, PricingMode mode, const SolverConfig& config,
                std::uint64_t seed = 0);

/// Loads the scenario, solves, and writes the report when spec.out is set.
RunResult run(const RunSpec& spec);

nlohmann::json run_result_to_json(const RunResult& r);

/// Minimum of H over every combination of pure tie choices (all of an
/// origin's demand on one maximizing cell). Falls back to the joint
/// operator-preferred resolution when there are more than `max_combinations`.
double tie_enumerated_H(const Scenario& s, const PriceMatrix& p, long max_combinations = 4096);

struct GridResult {
  PriceMatrix best_p;
  double best_H = 0.0;
  long evaluations = 0;
};

/// Exhaustive search on {0, step, ..., p0}^dim in the given mode (p0 is always
/// a grid value). Linear populations use tie_enumerated_H. Throws
/// DimensionGuard when the grid exceeds 4 dimensions and 10^6 points.
GridResult oracle_grid(const Scenario& s, double step, PricingMode mode = PricingMode::TimeLocation);

}  // namespace tlp

#endif
