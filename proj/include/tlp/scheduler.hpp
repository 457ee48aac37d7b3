#ifndef TLP_SCHEDULER_HPP
#define TLP_SCHEDULER_HPP

#include "tlp/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace tlp {

inline constexpr double kDefaultBisectionEps = 1e-6;
/// Floor applied to p + lambda before dividing in the closed-form responses.
inline constexpr double kDenominatorFloor = 1e-12;

enum class TieBreak {
  Lexicographic,      // earliest t', then smallest l'; the origin cell wins first
  SplitUniform,       // equal raw amounts on every maximizing cell
  OperatorPreferred,  // population-wide choice minimizing the operator's cost
};

const char* to_string(TieBreak tb);

/// One user type's response at origin (t,l). amounts[i] is the traffic
/// placed on window_cells(s, type, t, l)[i]; index 0 is x(t,l|t,l).
struct Schedule {
  int type = 0;
  int t = 0;
  int l = 0;
  std::vector<double> amounts;
  std::optional<double> lambda;

  double own() const { return amounts.front(); }
};

// ---------------------------------------------------------------------------
// Multiplier search

using ScalarFunction = std::function<double(double)>;

struct BisectionResult {
  double root = 0.0;
  double lo = 0.0;  // final bracket, g(lo) >= 0 >= g(hi)
  double hi = 0.0;
  int iterations = 0;
};

/// Bisection on a nonincreasing g over [lo, hi]. Runs
/// ceil(log2((hi - lo) / eps)) halvings unless g hits zero exactly, then
/// returns the midpoint of the last interval, so |root - root*| <= eps / 2.
/// If the bracket does not straddle a sign change it is widened by doubling
/// (up to 60 times) before NoSignChange is raised.
BisectionResult bisect_multiplier(const ScalarFunction& g, double lo, double hi, double eps);

double solve_multiplier(const ScalarFunction& g, double lo, double hi, double eps);

/// Illinois regula falsi inside a bracket that already straddles the root.
/// Used after bisection to drive the conservation residual to round-off.
double refine_multiplier(const ScalarFunction& g, double lo, double hi);

// ---------------------------------------------------------------------------
// Per-origin schedulers

Schedule schedule_log(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                      double eps = kDefaultBisectionEps);

Schedule schedule_linear(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                         TieBreak tie_break = TieBreak::Lexicographic);

Schedule schedule_general(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                          double eps = kDefaultBisectionEps);

/// Dispatches on the type's utility. OperatorPreferred is only meaningful
/// population-wide (see schedule_population) and falls back to Lexicographic.
Schedule schedule_origin(const Scenario& s, int type, int t, int l, const PriceMatrix& p,
                         TieBreak tie_break = TieBreak::Lexicographic,
                         double eps = kDefaultBisectionEps);

/// Payoff value per window cell for a linear type: delta^(t'-t) rho - p(t',l').
/// Cells with zero mobility weight are reported as -inf.
std::vector<double> linear_payoffs(const Scenario& s, int type, int t, int l,
                                   const PriceMatrix& p);

/// Indices of window cells attaining the linear argmax, within tol.
std::vector<int> linear_maximizers(const Scenario& s, int type, int t, int l,
                                   const PriceMatrix& p, double tol = 0.0);

/// U(x) - P(x) with beta-weighted, delta-discounted utility and payment.
double user_payoff(const Scenario& s, const Schedule& x, const PriceMatrix& p);

/// Conservation residual x(t,l|t,l) + sum beta x(t',l'|t,l) - x_ini(t,l).
double conservation_residual(const Scenario& s, const Schedule& x);

/// Worst violation of the first-order optimality system of the user problem.
struct KktResiduals {
  double dual_feasibility = 0.0;  // max(0, -(p + lambda - discount u'(x))) weighted by beta
  double primal_feasibility = 0.0;  // max(0, -x)
  double conservation = 0.0;        // |conservation residual|
  double complementarity = 0.0;     // |x beta (p + lambda - discount u'(x))|

  double worst() const;
};

/// Requires x.lambda to be set.
KktResiduals kkt_residuals(const Scenario& s, const Schedule& x, const PriceMatrix& p);

}  // namespace tlp

#endif
