#include "tlp/penalty_bcd.hpp"

#include "tlp/lp.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace tlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Origin {
  int type = 0;
  int t = 0;
  int l = 0;
  double demand = 0.0;
  double rho = 0.0;
  std::vector<WindowCell> cells;
  std::vector<int> reach;  // cells with positive weight; the own cell is always first
  int offset = 0;          // first x index
};

struct Layout {
  std::vector<Origin> origins;
  int n_x = 0;
};

Layout make_layout(const Scenario& s) {
  Layout lay;
  for (int a = 0; a < s.num_types(); ++a) {
    const UserType& u = s.user_types[a];
    const double rho = std::get<Linear>(u.utility).rho;
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        if (u.x_ini(t, l) <= 0.0) continue;
        Origin o{a, t, l, u.x_ini(t, l), rho, window_cells(s, a, t, l), {}, lay.n_x};
        for (std::size_t i = 0; i < o.cells.size(); ++i)
          if (o.cells[i].weight > 0.0) o.reach.push_back(static_cast<int>(i));
        lay.n_x += static_cast<int>(o.reach.size());
        lay.origins.push_back(std::move(o));
      }
  }
  return lay;
}

// Working point: x is indexed by (origin, reachable cell).
struct Point {
  PriceMatrix p;
  Eigen::VectorXd lambda;
  Eigen::VectorXd x;
};

double dual_slack(const Origin& o, const WindowCell& c, const PriceMatrix& p, double lam) {
  return p(c.t, c.l) + lam - c.discount * o.rho;
}

double min_lambda(const Origin& o, const PriceMatrix& p) {
  double lam = -kInf;
  for (int i : o.reach) lam = std::max(lam, o.cells[i].discount * o.rho - p(o.cells[i].t, o.cells[i].l));
  return lam;
}

Matrix load_of(const Scenario& s, const Layout& lay, const Eigen::VectorXd& x) {
  Matrix load = Matrix::Zero(s.T0, s.L);
  for (const auto& o : lay.origins)
    for (std::size_t k = 0; k < o.reach.size(); ++k) {
      const WindowCell& c = o.cells[o.reach[k]];
      load(c.t, c.l) += c.weight * x[o.offset + static_cast<int>(k)];
    }
  return load;
}

double residual_of(const Layout& lay, const Point& z) {
  double r = 0.0;
  for (std::size_t j = 0; j < lay.origins.size(); ++j) {
    const Origin& o = lay.origins[j];
    for (std::size_t k = 0; k < o.reach.size(); ++k) {
      const WindowCell& c = o.cells[o.reach[k]];
      r += c.weight * dual_slack(o, c, z.p, z.lambda[j]) * z.x[o.offset + static_cast<int>(k)];
    }
  }
  return r;
}

double cost_of(const Scenario& s, const PriceMatrix& p, const Matrix& load) {
  return operator_objective(s, p, AggregateLoad{load});
}

double value_of(const Scenario& s, const Layout& lay, const Point& z, double tau) {
  return cost_of(s, z.p, load_of(s, lay, z.x)) + tau * residual_of(lay, z);
}

void require_linear(const Scenario& s) {
  require_valid(s);
  for (const auto& u : s.user_types)
    if (!std::holds_alternative<Linear>(u.utility))
      throw Error(ErrorCode::Incompatible, "bcd requires every user type to have a linear utility");
}

LpSolution solve_block(const LpProblem& lp, const char* which) {
  LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible)
    throw Error(ErrorCode::LpInfeasible, std::string(which) + " block LP is infeasible");
  if (sol.status == LpStatus::Unbounded)
    throw Error(ErrorCode::LpUnbounded, std::string(which) + " block LP is unbounded");
  return sol;
}

// {p, lambda} with x fixed. The excess term is constant and dropped.
Point price_block(const Scenario& s, const Layout& lay, const Point& z, double tau) {
  const int np = s.T0 * s.L;
  const int no = static_cast<int>(lay.origins.size());
  const Matrix load = load_of(s, lay, z.x);

  LpProblem lp;
  lp.c = Eigen::VectorXd::Zero(np + no);
  lp.lower = Eigen::VectorXd::Zero(np + no);
  lp.upper = Eigen::VectorXd::Constant(np + no, s.p0);
  lp.lower.tail(no).setConstant(-kInf);
  lp.upper.tail(no).setConstant(kInf);
  lp.A_eq = Eigen::MatrixXd::Zero(0, np + no);
  lp.b_eq = Eigen::VectorXd::Zero(0);
  lp.A_ub = Eigen::MatrixXd::Zero(lay.n_x, np + no);
  lp.b_ub = Eigen::VectorXd::Zero(lay.n_x);

  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) lp.c[t * s.L + l] = -s.alpha(t, l) * load(t, l);
  for (int j = 0; j < no; ++j) {
    const Origin& o = lay.origins[j];
    for (std::size_t k = 0; k < o.reach.size(); ++k) {
      const WindowCell& c = o.cells[o.reach[k]];
      const int row = o.offset + static_cast<int>(k);
      const double bx = c.weight * z.x[row];
      lp.c[c.t * s.L + c.l] += tau * bx;
      lp.c[np + j] += tau * bx;
      // p(c) + lambda >= discount * rho
      lp.A_ub(row, c.t * s.L + c.l) = -1.0;
      lp.A_ub(row, np + j) = -1.0;
      lp.b_ub[row] = -c.discount * o.rho;
    }
  }

  const LpSolution sol = solve_block(lp, "price");
  Point out = z;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) out.p(t, l) = std::clamp(sol.x[t * s.L + l], 0.0, s.p0);
  // lambda has a positive cost, so its optimum is the tightest feasible value.
  for (int j = 0; j < no; ++j) out.lambda[j] = min_lambda(lay.origins[j], out.p);
  return out;
}

// {x, x_aft} with p and lambda fixed; e(t,l) >= x_aft(t,l) - C linearizes the excess.
Point traffic_block(const Scenario& s, const Layout& lay, const Point& z, double tau) {
  const int ne = s.T0 * s.L;
  const int no = static_cast<int>(lay.origins.size());
  const int n = lay.n_x + ne;

  LpProblem lp;
  lp.c = Eigen::VectorXd::Zero(n);
  lp.A_eq = Eigen::MatrixXd::Zero(no, n);
  lp.b_eq = Eigen::VectorXd::Zero(no);
  lp.A_ub = Eigen::MatrixXd::Zero(ne, n);
  lp.b_ub = Eigen::VectorXd::Constant(ne, s.capacity);

  for (int j = 0; j < no; ++j) {
    const Origin& o = lay.origins[j];
    lp.b_eq[j] = o.demand;
    for (std::size_t k = 0; k < o.reach.size(); ++k) {
      const WindowCell& c = o.cells[o.reach[k]];
      const int col = o.offset + static_cast<int>(k);
      const int cell = c.t * s.L + c.l;
      lp.A_eq(j, col) = c.weight;
      lp.A_ub(cell, col) = c.weight;
      lp.c[col] = c.weight * (tau * dual_slack(o, c, z.p, z.lambda[j]) - s.alpha(c.t, c.l) * z.p(c.t, c.l));
    }
  }
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) {
      lp.c[lay.n_x + t * s.L + l] = s.alpha(t, l) * s.gamma;
      lp.A_ub(t * s.L + l, lay.n_x + t * s.L + l) = -1.0;
    }

  const LpSolution sol = solve_block(lp, "traffic");
  Point out = z;
  out.x = sol.x.head(lay.n_x).cwiseMax(0.0);
  // Restore conservation exactly after round-off.
  for (const auto& o : lay.origins) {
    double total = 0.0;
    for (std::size_t k = 0; k < o.reach.size(); ++k)
      total += o.cells[o.reach[k]].weight * out.x[o.offset + static_cast<int>(k)];
    if (total > 0.0) out.x.segment(o.offset, static_cast<int>(o.reach.size())) *= o.demand / total;
  }
  return out;
}

PenaltyState to_state(const Scenario& s, const Layout& lay, const Point& z, double tau) {
  PenaltyState st;
  st.tau = tau;
  st.p = z.p;
  st.schedules = ScheduleSet(s);
  for (std::size_t j = 0; j < lay.origins.size(); ++j) {
    const Origin& o = lay.origins[j];
    Schedule x;
    x.type = o.type;
    x.t = o.t;
    x.l = o.l;
    x.amounts.assign(o.cells.size(), 0.0);
    for (std::size_t k = 0; k < o.reach.size(); ++k) x.amounts[o.reach[k]] = z.x[o.offset + static_cast<int>(k)];
    x.lambda = z.lambda[static_cast<Eigen::Index>(j)];
    st.schedules.set(std::move(x));
  }
  st.load = load_of(s, lay, z.x);
  st.residual = residual_of(lay, z);
  st.penalty_objective = cost_of(s, z.p, st.load) + tau * st.residual;
  return st;
}

Point from_state(const Scenario& s, const Layout& lay, const PenaltyState& st) {
  if (!prices_feasible(s, st.p))
    throw Error(ErrorCode::DomainError, "penalty state prices must satisfy 0 <= p <= p0");
  Point z{st.p, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.origins.size())),
          Eigen::VectorXd::Zero(lay.n_x)};
  for (std::size_t j = 0; j < lay.origins.size(); ++j) {
    const Origin& o = lay.origins[j];
    const Schedule* x = st.schedules.find(o.type, o.t, o.l);
    if (!x)
      throw Error(ErrorCode::MissingSchedule, "penalty state lacks a schedule for type " +
                                                  std::to_string(o.type) + " at (t=" +
                                                  std::to_string(o.t + 1) + ", l=" +
                                                  std::to_string(o.l + 1) + ")");
    for (std::size_t k = 0; k < o.reach.size(); ++k)
      z.x[o.offset + static_cast<int>(k)] = std::max(x->amounts.at(o.reach[k]), 0.0);
    const double floor = min_lambda(o, z.p);
    z.lambda[static_cast<Eigen::Index>(j)] = x->lambda ? std::max(*x->lambda, floor) : floor;
  }
  return z;
}

int count_increases(const std::vector<double>& trace) {
  int n = 0;
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1]) ++n;
  return n;
}

}  // namespace

PenaltyState initial_penalty_state(const Scenario& s, double tau) {
  require_linear(s);
  const Layout lay = make_layout(s);
  Point z{flat_prices(s), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.origins.size())),
          Eigen::VectorXd::Zero(lay.n_x)};
  for (std::size_t j = 0; j < lay.origins.size(); ++j) {
    const Origin& o = lay.origins[j];
    z.x[o.offset] = o.demand;  // own cell
    z.lambda[static_cast<Eigen::Index>(j)] = min_lambda(o, z.p);
  }
  return to_state(s, lay, z, tau);
}

double complementarity_residual(const Scenario& s, const PriceMatrix& p, const ScheduleSet& schedules) {
  double r = 0.0;
  schedules.for_each([&](const Schedule& x) {
    if (!std::holds_alternative<Linear>(s.user_types[x.type].utility))
      throw Error(ErrorCode::NonLinearUtility, "complementarity residual needs linear utilities");
    if (!x.lambda) throw Error(ErrorCode::MissingSchedule, "schedule has no multiplier");
    const double rho = std::get<Linear>(s.user_types[x.type].utility).rho;
    const auto cells = window_cells(s, x.type, x.t, x.l);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].weight > 0.0)
        r += cells[i].weight * (p(cells[i].t, cells[i].l) + *x.lambda - cells[i].discount * rho) * x.amounts[i];
  });
  return r;
}

double penalty_objective(const Scenario& s, const PriceMatrix& p, const ScheduleSet& schedules,
                         double tau) {
  return operator_objective(s, p, aggregate_load(s, schedules)) +
         tau * complementarity_residual(s, p, schedules);
}

BcdRun bcd_iterate(const Scenario& s, PenaltyState start, double eps0, int max_rounds) {
  require_linear(s);
  if (!(start.tau > 0.0)) throw Error(ErrorCode::DomainError, "penalty weight tau must be positive");
  if (!(eps0 > 0.0)) throw Error(ErrorCode::DomainError, "eps0 must be positive");
  if (max_rounds < 1) throw Error(ErrorCode::DomainError, "max_rounds must be >= 1");

  const double tau = start.tau;
  const Layout lay = make_layout(s);
  Point z = from_state(s, lay, start);
  double value = value_of(s, lay, z, tau);

  BcdRun run;
  run.penalty_trace.push_back(value);
  // A block result that is worse only by round-off is discarded, which keeps
  // the recorded sequence nonincreasing.
  auto accept = [&](Point candidate) {
    const double v = value_of(s, lay, candidate, tau);
    if (v <= value) {
      z = std::move(candidate);
      value = v;
    }
    run.penalty_trace.push_back(value);
  };

  for (int round = 0; round < max_rounds; ++round) {
    const Eigen::VectorXd x_old = z.x;
    accept(price_block(s, lay, z, tau));
    accept(traffic_block(s, lay, z, tau));
    run.rounds = round + 1;
    const double scale = std::max(x_old.norm(), std::numeric_limits<double>::min());
    if ((z.x - x_old).norm() / scale <= eps0) {
      run.converged = true;
      break;
    }
  }
  run.state = to_state(s, lay, z, tau);
  return run;
}

SolveReport bcd_solve(const Scenario& s, double tau, double eps0, int max_rounds) {
  const auto started = std::chrono::steady_clock::now();
  BcdRun run = bcd_iterate(s, initial_penalty_state(s, tau), eps0, max_rounds);
  SolveReport r = build_report(s, run.state.p, TieBreak::OperatorPreferred, "bcd");
  r.trace = run.penalty_trace;
  r.evaluations = static_cast<long>(run.penalty_trace.size()) - 1;
  r.diagnostics["tau"] = tau;
  r.diagnostics["residual"] = run.state.residual;
  r.diagnostics["rounds"] = run.rounds;
  r.diagnostics["converged"] = run.converged ? 1.0 : 0.0;
  r.diagnostics["penalty_objective"] = run.state.penalty_objective;
  r.diagnostics["bcd_objective"] = operator_objective(s, run.state.p, AggregateLoad{run.state.load});
  r.diagnostics["monotonicity_violations"] = count_increases(run.penalty_trace);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

double default_tau0(const Scenario& s) {
  // A large first weight makes the no-shift start a fixed point (its residual
  // is already zero), so escalation starts small and works upward.
  return 0.01 * s.gamma;
}

SolveReport penalty_escalate(const Scenario& s, const PenaltyConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  require_linear(s);
  double tau = cfg.tau0 > 0.0 ? cfg.tau0 : default_tau0(s);
  if (!(cfg.factor > 1.0)) throw Error(ErrorCode::DomainError, "escalation factor must exceed 1");
  if (!(cfg.comp_tol >= 0.0)) throw Error(ErrorCode::DomainError, "comp_tol must be >= 0");
  if (cfg.max_escalations < 0) throw Error(ErrorCode::DomainError, "max_escalations must be >= 0");

  const PriceMatrix flat = flat_prices(s);
  PriceMatrix best_p = flat;
  double best_h = evaluate_H(s, flat, TieBreak::OperatorPreferred).H;

  PenaltyState state = initial_penalty_state(s, tau);
  BcdRun run;
  int escalations = 0;
  int rounds = 0;
  int violations = 0;
  bool met = false;
  for (;;) {
    state.tau = tau;
    run = bcd_iterate(s, state, cfg.eps0, cfg.max_rounds);
    state = run.state;
    rounds += run.rounds;
    violations += count_increases(run.penalty_trace);
    if (state.residual <= cfg.comp_tol) {
      met = true;
      break;
    }
    if (escalations >= cfg.max_escalations) break;
    tau *= cfg.factor;
    ++escalations;
  }

  double certified_h = std::numeric_limits<double>::quiet_NaN();
  if (met) {
    certified_h = evaluate_H(s, state.p, TieBreak::OperatorPreferred).H;
    if (certified_h < best_h) {
      best_h = certified_h;
      best_p = state.p;
    }
  }

  SolveReport r = build_report(s, best_p, TieBreak::OperatorPreferred, "bcd");
  r.trace = run.penalty_trace;
  r.evaluations = rounds;
  r.diagnostics["residual"] = state.residual;
  r.diagnostics["tolerance_met"] = met ? 1.0 : 0.0;
  r.diagnostics["escalations"] = escalations;
  r.diagnostics["tau"] = tau;
  r.diagnostics["rounds"] = rounds;
  r.diagnostics["monotonicity_violations"] = violations;
  r.diagnostics["bcd_objective"] = operator_objective(s, state.p, AggregateLoad{state.load});
  r.diagnostics["certified_objective"] = certified_h;
  if (!met)
    r.notes.push_back("complementarity residual " + std::to_string(state.residual) +
                      " above tolerance after " + std::to_string(escalations) +
                      " escalations; reporting flat prices");
  else if (best_p == flat && !(state.p == flat))
    r.notes.push_back("certified point does not beat flat pricing; reporting flat prices");
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

}  // namespace tlp
