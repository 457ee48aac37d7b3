#include "tlp/objective.hpp"

#include "tlp/lp.hpp"

#include <cmath>

namespace tlp {

ScheduleSet::ScheduleSet(const Scenario& s)
    : T0_(s.T0), L_(s.L), slots_(static_cast<std::size_t>(s.num_types()) * s.T0 * s.L) {}

void ScheduleSet::set(Schedule x) {
  const std::size_t i = slot(x.type, x.t, x.l);
  slots_.at(i) = std::move(x);
}

const Schedule* ScheduleSet::find(int type, int t, int l) const {
  const std::size_t i = slot(type, t, l);
  if (i >= slots_.size() || !slots_[i]) return nullptr;
  return &*slots_[i];
}

namespace {

struct TieVar {
  int origin = 0;  // index into tied origins
  int cell = 0;    // window-cell index
  int t = 0;
  int l = 0;
  double weight = 1.0;
};

// Resolves linear ties so that the operator's cost is minimal over the set of
// user-optimal schedules. Non-tied origins are already in `out`.
void resolve_ties_for_operator(const Scenario& s, const PriceMatrix& p,
                               const std::vector<Schedule>& tied, ScheduleSet& out) {
  Matrix base = Matrix::Zero(s.T0, s.L);
  out.for_each([&](const Schedule& x) {
    const auto cells = window_cells(s, x.type, x.t, x.l);
    for (std::size_t i = 0; i < cells.size(); ++i)
      base(cells[i].t, cells[i].l) += cells[i].weight * x.amounts[i];
  });

  std::vector<TieVar> vars;
  for (std::size_t o = 0; o < tied.size(); ++o) {
    const Schedule& x = tied[o];
    const auto cells = window_cells(s, x.type, x.t, x.l);
    for (int i : linear_maximizers(s, x.type, x.t, x.l, p))
      vars.push_back(TieVar{static_cast<int>(o), i, cells[i].t, cells[i].l, cells[i].weight});
  }

  // Excess variables only for cells the tied origins can reach.
  std::vector<int> cell_col(static_cast<std::size_t>(s.T0) * s.L, -1);
  int n = static_cast<int>(vars.size());
  for (const auto& v : vars) {
    int& c = cell_col[static_cast<std::size_t>(v.t) * s.L + v.l];
    if (c < 0) c = n++;
  }
  const int n_x = static_cast<int>(vars.size());
  const int n_e = n - n_x;

  LpProblem lp;
  lp.c = Eigen::VectorXd::Zero(n);
  lp.A_eq = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tied.size()), n);
  lp.b_eq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tied.size()));
  lp.A_ub = Eigen::MatrixXd::Zero(n_e, n);
  lp.b_ub = Eigen::VectorXd::Zero(n_e);
  for (std::size_t o = 0; o < tied.size(); ++o)
    lp.b_eq[o] = s.user_types[tied[o].type].x_ini(tied[o].t, tied[o].l);
  for (int k = 0; k < n_x; ++k) {
    const TieVar& v = vars[k];
    const int e = cell_col[static_cast<std::size_t>(v.t) * s.L + v.l];
    lp.A_eq(v.origin, k) = v.weight;
    lp.c[k] = -s.alpha(v.t, v.l) * p(v.t, v.l) * v.weight;
    lp.A_ub(e - n_x, k) = v.weight;
  }
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) {
      const int e = cell_col[static_cast<std::size_t>(t) * s.L + l];
      if (e < 0) continue;
      lp.c[e] = s.alpha(t, l) * s.gamma;
      lp.A_ub(e - n_x, e) = -1.0;
      lp.b_ub[e - n_x] = s.capacity - base(t, l);
    }

  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw Error(sol.status == LpStatus::Infeasible ? ErrorCode::LpInfeasible : ErrorCode::LpUnbounded,
                "operator-preferred tie resolution LP is " + std::string(to_string(sol.status)));

  std::vector<Schedule> resolved = tied;
  for (auto& x : resolved) std::fill(x.amounts.begin(), x.amounts.end(), 0.0);
  for (int k = 0; k < n_x; ++k) resolved[vars[k].origin].amounts[vars[k].cell] = std::max(sol.x[k], 0.0);
  for (auto& x : resolved) out.set(std::move(x));
}

}  // namespace

ScheduleSet schedule_population(const Scenario& s, const PriceMatrix& p, TieBreak tie_break,
                                double eps) {
  ScheduleSet out(s);
  std::vector<Schedule> tied;
  for (int a = 0; a < s.num_types(); ++a) {
    const UserType& u = s.user_types[a];
    const bool linear = std::holds_alternative<Linear>(u.utility);
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        if (u.x_ini(t, l) <= 0.0) continue;
        if (linear && tie_break == TieBreak::OperatorPreferred &&
            linear_maximizers(s, a, t, l, p).size() > 1) {
          tied.push_back(schedule_linear(s, a, t, l, p, TieBreak::Lexicographic));
          continue;
        }
        out.set(schedule_origin(s, a, t, l, p, tie_break, eps));
      }
  }
  if (!tied.empty()) resolve_ties_for_operator(s, p, tied, out);
  return out;
}

AggregateLoad aggregate_load(const Scenario& s, const ScheduleSet& schedules) {
  AggregateLoad load{Matrix::Zero(s.T0, s.L)};
  for (int a = 0; a < s.num_types(); ++a)
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        const Schedule* x = schedules.find(a, t, l);
        if (!x) {
          if (s.user_types[a].x_ini(t, l) > 0.0)
            throw Error(ErrorCode::MissingSchedule,
                        "no schedule for type " + std::to_string(a) + " at (t=" +
                            std::to_string(t + 1) + ", l=" + std::to_string(l + 1) + ")");
          continue;
        }
        const auto cells = window_cells(s, a, t, l);
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i].weight > 0.0)
            load.x_aft(cells[i].t, cells[i].l) += cells[i].weight * x->amounts[i];
      }
  return load;
}

double excess_cost(double x, double capacity, double gamma) {
  return gamma * std::max(x - capacity, 0.0);
}

double operator_objective(const Scenario& s, const PriceMatrix& p, const AggregateLoad& load) {
  double h = 0.0;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) {
      const double x = load.x_aft(t, l);
      h += s.alpha(t, l) * (excess_cost(x, s.capacity, s.gamma) - p(t, l) * x);
    }
  return h;
}

Evaluation evaluate_H(const Scenario& s, const PriceMatrix& p, TieBreak tie_break, double eps) {
  if (!prices_feasible(s, p))
    throw Error(ErrorCode::DomainError, "prices must satisfy 0 <= p <= p0 with shape T0 x L");
  Evaluation ev;
  ev.schedules = schedule_population(s, p, tie_break, eps);
  ev.load = aggregate_load(s, ev.schedules);
  ev.H = operator_objective(s, p, ev.load);
  return ev;
}

CostBreakdown cost_breakdown(const Scenario& s, const PriceMatrix& p, const AggregateLoad& load) {
  CostBreakdown c;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) {
      const double x = load.x_aft(t, l);
      c.excess += s.alpha(t, l) * excess_cost(x, s.capacity, s.gamma);
      c.discount_loss += s.alpha(t, l) * (s.p0 - p(t, l)) * x;
    }
  return c;
}

double average_discount(const Scenario& s, const PriceMatrix& p) {
  double sum = 0.0;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) sum += (s.p0 - p(t, l)) / s.p0;
  return sum / (static_cast<double>(s.T0) * s.L);
}

double excess_demand(const Matrix& load, double capacity) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < load.size(); ++i) sum += std::max(load.data()[i] - capacity, 0.0);
  return sum;
}

double traffic_variance(const Matrix& load) {
  const double n = static_cast<double>(load.size());
  const double mean = load.sum() / n;
  return (load.array() - mean).square().sum() / n;
}

double total_user_payoff(const Scenario& s, const ScheduleSet& schedules, const PriceMatrix& p) {
  double sum = 0.0;
  schedules.for_each([&](const Schedule& x) { sum += user_payoff(s, x, p); });
  return sum;
}

Metrics compute_metrics(const Scenario& s, const PriceMatrix& p, const AggregateLoad& load,
                        const ScheduleSet& schedules) {
  Metrics m;
  m.average_discount = average_discount(s, p);
  m.excess_demand = excess_demand(load.x_aft, s.capacity);
  m.traffic_variance = traffic_variance(load.x_aft);
  m.total_user_payoff = total_user_payoff(s, schedules, p);
  return m;
}

Matrix initial_load(const Scenario& s) {
  Matrix m = Matrix::Zero(s.T0, s.L);
  for (const auto& u : s.user_types) m += u.x_ini;
  return m;
}

SolveReport build_report(const Scenario& s, const PriceMatrix& p, TieBreak tie_break,
                         std::string solver) {
  const Evaluation ev = evaluate_H(s, p, tie_break);
  SolveReport r;
  r.solver = std::move(solver);
  r.tie_break = tie_break;
  r.best_prices = p;
  r.objective = ev.H;
  r.costs = cost_breakdown(s, p, ev.load);
  r.metrics = compute_metrics(s, p, ev.load, ev.schedules);
  r.load = ev.load.x_aft;
  return r;
}

}  // namespace tlp
