#include "tlp/scheduler.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tlp {

const char* to_string(TieBreak tb) {
  switch (tb) {
    case TieBreak::Lexicographic: return "lexicographic";
    case TieBreak::SplitUniform: return "split-uniform";
    case TieBreak::OperatorPreferred: return "operator-preferred";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Multiplier search

BisectionResult bisect_multiplier(const ScalarFunction& g, double lo, double hi, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "bisection eps must be positive");
  if (!(lo <= hi)) throw Error(ErrorCode::DomainError, "bisection bracket has lo > hi");

  double g_lo = g(lo);
  double g_hi = g(hi);
  for (int k = 0; k < 60 && (g_hi > 0.0 || g_lo < 0.0); ++k) {
    const double width = hi > lo ? hi - lo : 1.0;
    if (g_hi > 0.0) {
      hi = lo + 2.0 * width;
      g_hi = g(hi);
    } else {
      lo = hi - 2.0 * width;
      g_lo = g(lo);
    }
  }
  if (std::isnan(g_lo) || std::isnan(g_hi))
    throw Error(ErrorCode::NonFinite, "multiplier residual is NaN at the bracket ends");
  if (g_lo < 0.0 || g_hi > 0.0)
    throw Error(ErrorCode::NoSignChange,
                "multiplier residual has no sign change in [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "] after bracket expansion");
  if (g_lo == 0.0) return {lo, lo, lo, 0};
  if (g_hi == 0.0) return {hi, hi, hi, 0};

  const int n = std::max(0, static_cast<int>(std::ceil(std::log2((hi - lo) / eps))));
  for (int i = 0; i < n; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if (std::isnan(g_mid)) throw Error(ErrorCode::NonFinite, "multiplier residual is NaN");
    if (g_mid == 0.0) return {mid, mid, mid, i + 1};
    if (g_mid > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), lo, hi, n};
}

double solve_multiplier(const ScalarFunction& g, double lo, double hi, double eps) {
  return bisect_multiplier(g, lo, hi, eps).root;
}

double refine_multiplier(const ScalarFunction& g, double lo, double hi) {
  if (lo == hi) return lo;
  double f_lo = g(lo);
  double f_hi = g(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;

  double best = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  double best_abs = std::min(std::abs(f_lo), std::abs(f_hi));
  int side = 0;
  constexpr double kMachEps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < 200; ++it) {
    double x = 0.5 * (lo + hi);
    if (std::isfinite(f_lo) && std::isfinite(f_hi) && f_lo != f_hi) {
      const double rf = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
      if (rf > lo && rf < hi) x = rf;
    }
    const double fx = g(x);
    if (std::isnan(fx)) break;
    if (std::abs(fx) < best_abs) {
      best_abs = std::abs(fx);
      best = x;
    }
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      lo = x;
      f_lo = fx;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == -1) f_lo *= 0.5;
      side = -1;
    }
    if (hi - lo <= 4.0 * kMachEps * std::max(1.0, std::abs(x))) break;
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

Schedule empty_schedule(int type, int t, int l, std::size_t n) {
  Schedule x;
  x.type = type;
  x.t = t;
  x.l = l;
  x.amounts.assign(n, 0.0);
  return x;
}

double log_response(double k, double discount, double price, double lambda) {
  if (discount == 0.0) return 0.0;
  const double denom = std::max(price + lambda, kDenominatorFloor);
  return std::max(k * discount / denom - 1.0, 0.0);
}

// Amount solving discount * u'(x) = price + lambda, clipped at zero.
double general_response(const GeneralConcave& u, double discount, double price, double lambda) {
  if (discount == 0.0) return 0.0;
  const double target = (price + lambda) / discount;
  if (target >= u.marginal_at_zero) return 0.0;
  if (target <= u.marginal_infimum) return std::numeric_limits<double>::infinity();
  return std::max(u.marginal_inverse(target), 0.0);
}

template <class Response>
double weighted_total(const std::vector<WindowCell>& cells, Response&& r) {
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].weight <= 0.0) continue;
    total += cells[i].weight * r(cells[i]);
  }
  return total;
}

}  // namespace

Schedule schedule_log(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                      double eps) {
  check_origin(s, type, t, l);
  const UserType& u = s.user_types[type];
  const auto* spec = std::get_if<Logarithmic>(&u.utility);
  if (!spec) throw Error(ErrorCode::NonConcaveUtility, "schedule_log needs a logarithmic utility");
  const double k = spec->k;
  const double demand = u.x_ini(t, l);
  const auto cells = window_cells(s, type, t, l);
  Schedule x = empty_schedule(type, t, l, cells.size());

  if (demand <= 0.0) {
    double lam = k - p(t, l);
    for (const auto& c : cells)
      if (c.weight > 0.0) lam = std::max(lam, k * c.discount - p(c.t, c.l));
    x.lambda = lam;
    return x;
  }

  auto g = [&](double lam) {
    return weighted_total(cells, [&](const WindowCell& c) {
             return log_response(k, c.discount, p(c.t, c.l), lam);
           }) -
           demand;
  };
  const double lo = k / (demand + 1.0) - p(t, l);
  const double hi = k;
  const BisectionResult b = bisect_multiplier(g, lo, hi, eps);
  const double lam = refine_multiplier(g, b.lo, b.hi);

  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].weight > 0.0)
      x.amounts[i] = log_response(k, cells[i].discount, p(cells[i].t, cells[i].l), lam);
  x.lambda = lam;
  return x;
}

Schedule schedule_general(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                          double eps) {
  check_origin(s, type, t, l);
  const UserType& u = s.user_types[type];
  const auto* spec = std::get_if<GeneralConcave>(&u.utility);
  if (!spec)
    throw Error(ErrorCode::NonConcaveUtility, "schedule_general needs a general concave utility");
  const double demand = u.x_ini(t, l);
  const auto cells = window_cells(s, type, t, l);
  Schedule x = empty_schedule(type, t, l, cells.size());

  double zero_response = -std::numeric_limits<double>::infinity();
  if (std::isfinite(spec->marginal_at_zero)) {
    for (const auto& c : cells)
      if (c.weight > 0.0 && c.discount > 0.0)
        zero_response = std::max(zero_response, c.discount * spec->marginal_at_zero - p(c.t, c.l));
  }

  if (demand <= 0.0) {
    if (!std::isfinite(zero_response))
      throw Error(ErrorCode::DomainError, "u'(0) is unbounded; zero demand has no finite multiplier");
    x.lambda = zero_response;
    return x;
  }

  auto g = [&](double lam) {
    return weighted_total(cells, [&](const WindowCell& c) {
             return general_response(*spec, c.discount, p(c.t, c.l), lam);
           }) -
           demand;
  };
  const double lo = spec->marginal(demand) - p(t, l);
  const double hi = std::isfinite(zero_response) ? std::max(zero_response, lo) : std::max(lo, 0.0) + 1.0;
  const BisectionResult b = bisect_multiplier(g, lo, hi, eps);
  const double lam = refine_multiplier(g, b.lo, b.hi);

  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].weight <= 0.0) continue;
    const double v = general_response(*spec, cells[i].discount, p(cells[i].t, cells[i].l), lam);
    if (!std::isfinite(v))
      throw Error(ErrorCode::DomainError,
                  "stationarity target falls outside the range of u' at the solution");
    x.amounts[i] = v;
  }
  x.lambda = lam;
  return x;
}

std::vector<double> linear_payoffs(const Scenario& s, int type, int t, int l,
                                   const PriceMatrix& p) {
  const auto* spec = std::get_if<Linear>(&s.user_types[type].utility);
  if (!spec) throw Error(ErrorCode::NonLinearUtility, "linear payoffs need a linear utility");
  const auto cells = window_cells(s, type, t, l);
  std::vector<double> v(cells.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].weight > 0.0) v[i] = cells[i].discount * spec->rho - p(cells[i].t, cells[i].l);
  return v;
}

std::vector<int> linear_maximizers(const Scenario& s, int type, int t, int l,
                                   const PriceMatrix& p, double tol) {
  const auto v = linear_payoffs(s, type, t, l, p);
  double best = -std::numeric_limits<double>::infinity();
  for (double x : v) best = std::max(best, x);
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] >= best - tol) out.push_back(static_cast<int>(i));
  return out;
}

Schedule schedule_linear(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                         TieBreak tie_break) {
  check_origin(s, type, t, l);
  if (!std::holds_alternative<Linear>(s.user_types[type].utility))
    throw Error(ErrorCode::NonLinearUtility, "schedule_linear needs a linear utility");
  const auto cells = window_cells(s, type, t, l);
  const auto payoffs = linear_payoffs(s, type, t, l, p);
  const auto winners = linear_maximizers(s, type, t, l, p);
  const double demand = s.user_types[type].x_ini(t, l);

  Schedule x = empty_schedule(type, t, l, cells.size());
  x.lambda = payoffs[winners.front()];
  if (demand <= 0.0) return x;

  if (tie_break == TieBreak::SplitUniform) {
    double weight = 0.0;
    for (int i : winners) weight += cells[i].weight;
    for (int i : winners) x.amounts[i] = demand / weight;
  } else {
    const int i = winners.front();
    x.amounts[i] = demand / cells[i].weight;
  }
  return x;
}

Schedule schedule_origin(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                         TieBreak tie_break, double eps) {
  check_origin(s, type, t, l);
  const UtilitySpec& u = s.user_types[type].utility;
  if (std::holds_alternative<Logarithmic>(u)) return schedule_log(s, type, t, l, p, eps);
  if (std::holds_alternative<Linear>(u)) {
    const TieBreak tb = tie_break == TieBreak::OperatorPreferred ? TieBreak::Lexicographic : tie_break;
    return schedule_linear(s, type, t, l, p, tb);
  }
  return schedule_general(s, type, t, l, p, eps);
}

// ---------------------------------------------------------------------------

double user_payoff(const Scenario& s, const Schedule& x, const PriceMatrix& p) {
  const UtilitySpec& u = s.user_types[x.type].utility;
  const auto cells = window_cells(s, x.type, x.t, x.l);
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const WindowCell& c = cells[i];
    if (c.weight <= 0.0) continue;
    const double amount = x.amounts[i];
    total += c.weight * (c.discount * utility_value(u, amount) - p(c.t, c.l) * amount);
  }
  return total;
}

double conservation_residual(const Scenario& s, const Schedule& x) {
  const auto cells = window_cells(s, x.type, x.t, x.l);
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) total += cells[i].weight * x.amounts[i];
  return total - s.user_types[x.type].x_ini(x.t, x.l);
}

double KktResiduals::worst() const {
  return std::max({dual_feasibility, primal_feasibility, conservation, complementarity});
}

KktResiduals kkt_residuals(const Scenario& s, const Schedule& x, const PriceMatrix& p) {
  if (!x.lambda) throw Error(ErrorCode::DomainError, "schedule carries no multiplier");
  const UtilitySpec& u = s.user_types[x.type].utility;
  const auto cells = window_cells(s, x.type, x.t, x.l);
  KktResiduals r;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const WindowCell& c = cells[i];
    const double amount = x.amounts[i];
    r.primal_feasibility = std::max(r.primal_feasibility, -amount);
    if (c.weight <= 0.0) continue;
    const double slack = p(c.t, c.l) + *x.lambda - c.discount * marginal_utility(u, amount);
    r.dual_feasibility = std::max(r.dual_feasibility, -c.weight * slack);
    r.complementarity = std::max(r.complementarity, std::abs(amount * c.weight * slack));
  }
  r.conservation = std::abs(conservation_residual(s, x));
  return r;
}

}  // namespace tlp
