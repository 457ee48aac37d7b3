#ifndef TLP_PENALTY_BCD_HPP
#define TLP_PENALTY_BCD_HPP

#include "tlp/model.hpp"
#include "tlp/objective.hpp"

#include <vector>

namespace tlp {

/// One point of the penalized problem for an all-linear population.
/// Schedules carry lambda; only origins with positive demand appear.
struct PenaltyState {
  double tau = 1.0;
  PriceMatrix p;
  ScheduleSet schedules;
  Matrix load;
  double penalty_objective = 0.0;
  double residual = 0.0;  // sum of the complementarity products, >= 0 when feasible
};

/// Flat prices, nobody shifts, lambda at the smallest dual-feasible value.
PenaltyState initial_penalty_state(const Scenario& s, double tau);

/// Sum over origins of (p + lambda - discount rho) * beta * x.
double complementarity_residual(const Scenario& s, const PriceMatrix& p,
                                const ScheduleSet& schedules);

/// alpha-weighted cost at a fixed schedule plus tau times the residual.
double penalty_objective(const Scenario& s, const PriceMatrix& p, const ScheduleSet& schedules,
                         double tau);

struct BcdRun {
  PenaltyState state;
  std::vector<double> penalty_trace;  // initial value, then one entry per block solve
  int rounds = 0;
  bool converged = false;
};

/// Alternating exact LP solves over {p, lambda} and {x, x_aft} from `start`
/// until the relative change in x is at most eps0.
BcdRun bcd_iterate(const Scenario& s, PenaltyState start, double eps0 = 1e-6,
                   int max_rounds = 100);

SolveReport bcd_solve(const Scenario& s, double tau, double eps0 = 1e-6, int max_rounds = 100);

struct PenaltyConfig {
  double tau0 = 0.0;  // <= 0 selects default_tau0
  double factor = 10.0;
  double comp_tol = 1e-6;
  int max_escalations = 6;
  double eps0 = 1e-6;
  int max_rounds = 100;
};

/// 0.01 * gamma.
double default_tau0(const Scenario& s);

/// Repeats bcd_iterate with tau multiplied by `factor`, warm-started, until the
/// residual is at most comp_tol. The reported prices are the certified point
/// with the lowest operator-preferred H, or flat prices if none beats them.
///
/// Diagnostics: residual, tolerance_met, escalations, tau, rounds,
/// monotonicity_violations, bcd_objective, certified_objective.
SolveReport penalty_escalate(const Scenario& s, const PenaltyConfig& config = {});

}  // namespace tlp

#endif
