#include "tlp/harness.hpp"

#include "tlp/scenario_io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

namespace tlp {

using nlohmann::json;

const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Spg: return "spg";
    case SolverKind::Bcd: return "bcd";
    case SolverKind::Dycors: return "dycors";
    case SolverKind::OracleGrid: return "oracle-grid";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& name) {
  if (name == "spg") return SolverKind::Spg;
  if (name == "bcd") return SolverKind::Bcd;
  if (name == "dycors") return SolverKind::Dycors;
  if (name == "oracle-grid") return SolverKind::OracleGrid;
  throw Error(ErrorCode::Incompatible,
              "unknown solver '" + name + "' (expected spg, bcd, dycors or oracle-grid)");
}

namespace {

// Reads the keys of one config section, rejecting anything not consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "wrong type");
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(k, "unknown key");
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorCode::InvalidScenario,
                "config." + name_ + (key.empty() ? "" : "." + key) + ": " + what);
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

TieBreak parse_tie_break(const std::string& name) {
  if (name == "lexicographic") return TieBreak::Lexicographic;
  if (name == "split-uniform") return TieBreak::SplitUniform;
  if (name == "operator-preferred") return TieBreak::OperatorPreferred;
  throw Error(ErrorCode::InvalidScenario, "config.dycors.tie_break: unknown rule '" + name + "'");
}

bool all_of_kind(const Scenario& s, const char* kind) {
  for (const auto& u : s.user_types)
    if (utility_kind(u.utility) != kind) return false;
  return true;
}

}  // namespace

SolverConfig parse_solver_config(const json& j) {
  SolverConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::InvalidScenario, "config: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "spg") {
      Section sec(v, k);
      sec.get("alpha0", c.spg.alpha0);
      sec.get("alpha_min", c.spg.alpha_min);
      sec.get("alpha_max", c.spg.alpha_max);
      sec.get("memory", c.spg.memory);
      sec.get("xi", c.spg.xi);
      sec.get("sigma1", c.spg.sigma1);
      sec.get("sigma2", c.spg.sigma2);
      sec.get("eps_pg", c.spg.eps_pg);
      sec.get("mu_schedule", c.spg.mu_schedule);
      sec.get("max_iters", c.spg.max_iters);
      sec.get("bisection_eps", c.spg.bisection_eps);
      sec.finish();
    } else if (k == "bcd") {
      Section sec(v, k);
      sec.get("tau0", c.bcd.tau0);
      sec.get("factor", c.bcd.factor);
      sec.get("comp_tol", c.bcd.comp_tol);
      sec.get("max_escalations", c.bcd.max_escalations);
      sec.get("eps0", c.bcd.eps0);
      sec.get("max_rounds", c.bcd.max_rounds);
      sec.finish();
    } else if (k == "dycors") {
      Section sec(v, k);
      sec.get("n0", c.dycors.n0);
      sec.get("m", c.dycors.m);
      sec.get("max_evals", c.dycors.max_evals);
      sec.get("phi0", c.dycors.phi0);
      sec.get("sigma0", c.dycors.sigma0);
      sec.get("sigma_min", c.dycors.sigma_min);
      sec.get("fail_tol", c.dycors.fail_tol);
      sec.get("succ_tol", c.dycors.succ_tol);
      std::string tie = to_string(c.dycors.tie_break);
      sec.get("tie_break", tie);
      c.dycors.tie_break = parse_tie_break(tie);
      sec.finish();
    } else if (k == "oracle") {
      Section sec(v, k);
      sec.get("step", c.grid_step);
      sec.finish();
    } else {
      throw Error(ErrorCode::InvalidScenario, "config." + k + ": unknown section");
    }
  }
  return c;
}

SolverConfig load_solver_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  try {
    return parse_solver_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidScenario, path.string() + ": " + e.what());
  }
}

void check_compatibility(const Scenario& s, SolverKind solver, PricingMode mode) {
  if (solver == SolverKind::Spg && !all_of_kind(s, "log"))
    throw Error(ErrorCode::Incompatible,
                "solver spg needs every user type to use a log utility; use dycors for other utilities");
  if (solver == SolverKind::Bcd && !all_of_kind(s, "linear"))
    throw Error(ErrorCode::Incompatible,
                "solver bcd needs every user type to use a linear utility; use dycors for other utilities");
  if (solver == SolverKind::Bcd && mode == PricingMode::TimeOnly)
    throw Error(ErrorCode::Incompatible,
                "solver bcd prices every cell independently; use dycors or oracle-grid for time-only mode");
}

Comparison compare_with_flat(const Scenario& s, const SolveReport& r) {
  const PriceMatrix flat = flat_prices(s);
  const Evaluation ev = evaluate_H(s, flat, r.tie_break);
  Comparison c;
  c.H_flat = ev.H;
  c.H_best = r.objective;
  c.delta_H = c.H_flat - c.H_best;
  c.total_cost_flat = cost_breakdown(s, flat, ev.load).total();
  c.total_cost_best = r.costs.total();
  c.cost_reduction =
      c.total_cost_flat > 0.0 ? (c.total_cost_flat - c.total_cost_best) / c.total_cost_flat : 0.0;
  c.user_payoff_flat = total_user_payoff(s, ev.schedules, flat);
  c.user_payoff_change = r.metrics.total_user_payoff - c.user_payoff_flat;
  c.variance_initial = traffic_variance(initial_load(s));
  c.variance_best = r.metrics.traffic_variance;
  return c;
}

RunResult solve(const Scenario& s, SolverKind solver, PricingMode mode, const SolverConfig& config,
                std::uint64_t seed) {
  require_valid(s);
  check_compatibility(s, solver, mode);
  const auto started = std::chrono::steady_clock::now();
  const bool linear = all_of_kind(s, "linear");

  SolveReport report;
  if (mode == PricingMode::Flat) {
    report = build_report(s, flat_prices(s), linear ? TieBreak::OperatorPreferred : TieBreak::Lexicographic,
                          to_string(solver));
    report.evaluations = 1;
  } else {
    switch (solver) {
      case SolverKind::Spg: report = spg_solve(s, flat_prices(s), config.spg, mode); break;
      case SolverKind::Bcd: report = penalty_escalate(s, config.bcd); break;
      case SolverKind::Dycors: {
        DycorsConfig dc = config.dycors;
        dc.seed = seed;
        report = dycors_solve(s, dc, mode);
        break;
      }
      case SolverKind::OracleGrid: {
        const GridResult g = oracle_grid(s, config.grid_step, mode);
        // Only linear ties depend on the rule; pick the one the grid optimized.
        report = build_report(s, g.best_p, TieBreak::OperatorPreferred, to_string(solver));
        report.evaluations = g.evaluations;
        report.diagnostics["grid_objective"] = g.best_H;
        report.diagnostics["grid_step"] = config.grid_step;
        break;
      }
    }
  }
  report.mode = to_string(mode);
  report.seed = seed;
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {report, compare_with_flat(s, report)};
}

RunResult run(const RunSpec& spec) {
  const Scenario s = load_scenario(spec.scenario);
  RunResult r = solve(s, spec.solver, spec.mode, spec.config, spec.seed);
  if (!spec.out.empty()) write_json(spec.out, run_result_to_json(r));
  return r;
}

json run_result_to_json(const RunResult& r) {
  json j = report_to_json(r.report);
  const Comparison& c = r.comparison;
  j["comparison"] = {{"H_flat", c.H_flat},
                     {"H_best", c.H_best},
                     {"delta_H", c.delta_H},
                     {"total_cost_flat", c.total_cost_flat},
                     {"total_cost_best", c.total_cost_best},
                     {"cost_reduction", c.cost_reduction},
                     {"user_payoff_flat", c.user_payoff_flat},
                     {"user_payoff_change", c.user_payoff_change},
                     {"variance_initial", c.variance_initial},
                     {"variance_best", c.variance_best}};
  return j;
}

double tie_enumerated_H(const Scenario& s, const PriceMatrix& p, long max_combinations) {
  if (!prices_feasible(s, p))
    throw Error(ErrorCode::DomainError, "prices must satisfy 0 <= p <= p0 with shape T0 x L");

  // Each tied origin contributes one of several alternative load patterns.
  struct Choice {
    int t, l;
    double load;
  };
  std::vector<std::vector<Choice>> options;
  Matrix base = Matrix::Zero(s.T0, s.L);
  long combos = 1;
  for (int a = 0; a < s.num_types(); ++a) {
    const UserType& u = s.user_types[a];
    const bool linear = std::holds_alternative<Linear>(u.utility);
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        if (u.x_ini(t, l) <= 0.0) continue;
        const auto cells = window_cells(s, a, t, l);
        const auto winners = linear ? linear_maximizers(s, a, t, l, p) : std::vector<int>{};
        if (winners.size() > 1) {
          std::vector<Choice> alt;
          // weight * (x_ini / weight) lands on the chosen cell.
          for (int i : winners) alt.push_back({cells[i].t, cells[i].l, u.x_ini(t, l)});
          combos = combos > max_combinations ? combos : combos * static_cast<long>(alt.size());
          options.push_back(std::move(alt));
          continue;
        }
        const Schedule x = schedule_origin(s, a, t, l, p, TieBreak::Lexicographic);
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i].weight > 0.0) base(cells[i].t, cells[i].l) += cells[i].weight * x.amounts[i];
      }
  }
  if (options.empty()) return operator_objective(s, p, AggregateLoad{base});
  if (combos > max_combinations) return evaluate_H(s, p, TieBreak::OperatorPreferred).H;

  std::vector<std::size_t> pick(options.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    Matrix load = base;
    for (std::size_t o = 0; o < options.size(); ++o) {
      const Choice& c = options[o][pick[o]];
      load(c.t, c.l) += c.load;
    }
    best = std::min(best, operator_objective(s, p, AggregateLoad{load}));
    std::size_t o = 0;
    while (o < options.size() && ++pick[o] == options[o].size()) pick[o++] = 0;
    if (o == options.size()) break;
  }
  return best;
}

GridResult oracle_grid(const Scenario& s, double step, PricingMode mode) {
  require_valid(s);
  if (!(step > 0.0)) throw Error(ErrorCode::DomainError, "grid step must be positive");
  const int dim = decision_dim(s, mode);

  std::vector<double> levels;
  for (long k = 0;; ++k) {
    const double v = k * step;
    if (v >= s.p0 - 1e-12 * std::max(1.0, s.p0)) break;
    levels.push_back(v);
  }
  levels.push_back(s.p0);
  const double points = std::pow(static_cast<double>(levels.size()), dim);
  if (dim > 4 && points > 1e6)
    throw Error(ErrorCode::DimensionGuard,
                "grid has " + std::to_string(dim) + " dimensions and " + std::to_string(points) +
                    " points; use at most 4 dimensions or a coarser step");

  bool linear = false;
  for (const auto& u : s.user_types) linear = linear || std::holds_alternative<Linear>(u.utility);
  auto value = [&](const PriceMatrix& p) {
    return linear ? tie_enumerated_H(s, p) : evaluate_H(s, p).H;
  };

  GridResult g;
  if (dim == 0) {
    g.best_p = flat_prices(s);
    g.best_H = value(g.best_p);
    g.evaluations = 1;
    return g;
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  Vector z(dim);
  g.best_H = std::numeric_limits<double>::infinity();
  for (;;) {
    for (int i = 0; i < dim; ++i) z[i] = levels[idx[static_cast<std::size_t>(i)]];
    const PriceMatrix p = expand_prices(s, mode, z);
    const double h = value(p);
    ++g.evaluations;
    if (h < g.best_H) {
      g.best_H = h;
      g.best_p = p;
    }
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == levels.size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return g;
}

}  // namespace tlp
