#ifndef TLP_OBJECTIVE_HPP
#define TLP_OBJECTIVE_HPP

#include "tlp/model.hpp"
#include "tlp/scheduler.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tlp {

/// Post-scheduling traffic x_aft(t,l) summed over user types.
struct AggregateLoad {
  Matrix x_aft;

  double total() const { return x_aft.sum(); }
};

/// At most one schedule per (type, t, l).
class ScheduleSet {
 public:
  ScheduleSet() = default;
  explicit ScheduleSet(const Scenario& s);

  void set(Schedule x);
  const Schedule* find(int type, int t, int l) const;

  template <class F>
  void for_each(F&& f) const {
    for (const auto& x : slots_)
      if (x) f(*x);
  }

 private:
  std::size_t slot(int type, int t, int l) const {
    return (static_cast<std::size_t>(type) * T0_ + t) * L_ + l;
  }

  int T0_ = 0;
  int L_ = 0;
  std::vector<std::optional<Schedule>> slots_;
};

/// Schedules every origin with positive demand. OperatorPreferred resolves
/// linear-utility ties jointly by minimizing the operator's cost over the
/// users' optimal sets (a small LP); other rules are applied per origin.
ScheduleSet schedule_population(const Scenario& s, const PriceMatrix& p,
                                TieBreak tie_break = TieBreak::Lexicographic,
                                double eps = kDefaultBisectionEps);

/// Throws MissingSchedule when a positive-demand origin has no schedule.
AggregateLoad aggregate_load(const Scenario& s, const ScheduleSet& schedules);

/// gamma * max(x - C, 0)
double excess_cost(double x, double capacity, double gamma);

/// sum_{t,l} alpha(t,l) [f(x_aft(t,l)) - p(t,l) x_aft(t,l)], t-major, l-minor.
double operator_objective(const Scenario& s, const PriceMatrix& p, const AggregateLoad& load);

struct Evaluation {
  double H = 0.0;
  AggregateLoad load;
  ScheduleSet schedules;
};

/// H(p): the Stage-I objective after every user best-responds to p.
Evaluation evaluate_H(const Scenario& s, const PriceMatrix& p,
                      TieBreak tie_break = TieBreak::Lexicographic,
                      double eps = kDefaultBisectionEps);

struct CostBreakdown {
  double excess = 0.0;         // sum alpha f(x_aft)
  double discount_loss = 0.0;  // sum alpha (p0 - p) x_aft

  double total() const { return excess + discount_loss; }
};

CostBreakdown cost_breakdown(const Scenario& s, const PriceMatrix& p, const AggregateLoad& load);

struct Metrics {
  double average_discount = 0.0;
  double excess_demand = 0.0;
  double traffic_variance = 0.0;
  double total_user_payoff = 0.0;
};

double average_discount(const Scenario& s, const PriceMatrix& p);
double excess_demand(const Matrix& load, double capacity);
/// Population variance over all T0 x L cells.
double traffic_variance(const Matrix& load);
double total_user_payoff(const Scenario& s, const ScheduleSet& schedules, const PriceMatrix& p);

Metrics compute_metrics(const Scenario& s, const PriceMatrix& p, const AggregateLoad& load,
                        const ScheduleSet& schedules);

/// Sum over types of x_ini, i.e. the load with nobody shifting.
Matrix initial_load(const Scenario& s);

struct SolveReport {
  std::string solver;
  std::string mode = "time-location";
  std::uint64_t seed = 0;
  TieBreak tie_break = TieBreak::Lexicographic;
  PriceMatrix best_prices;
  double objective = 0.0;
  CostBreakdown costs;
  Metrics metrics;
  Matrix load;
  std::vector<double> trace;
  long evaluations = 0;
  double wall_time_s = 0.0;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;
};

/// Re-evaluates H at p and fills objective, costs, metrics and load.
SolveReport build_report(const Scenario& s, const PriceMatrix& p, TieBreak tie_break,
                         std::string solver);

}  // namespace tlp

#endif
