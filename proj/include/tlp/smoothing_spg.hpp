#ifndef TLP_SMOOTHING_SPG_HPP
#define TLP_SMOOTHING_SPG_HPP

#include "tlp/model.hpp"
#include "tlp/objective.hpp"
#include "tlp/pricing_mode.hpp"

#include <vector>

namespace tlp {

/// (x + sqrt(x^2 + mu)) / 2, evaluated without cancellation.
/// 0 <= smooth_max(x, mu) - max(x, 0) <= sqrt(mu) / 2.
double smooth_max(double x, double mu);

/// d/dx smooth_max(x, mu) = (1 + x / sqrt(x^2 + mu)) / 2.
double smooth_max_derivative(double x, double mu);

struct SmoothedEvaluation {
  double H = 0.0;
  Matrix load;                  // smoothed x_aft
  std::vector<Matrix> lambda;   // per type, T0 x L; NaN where x_ini = 0
  Matrix grad;                  // filled only when requested
};

/// Smoothed objective for an all-logarithmic population. Each origin's
/// multiplier solves the smoothed conservation equation; the bisection
/// result is refined to round-off so the value is a smooth function of p.
SmoothedEvaluation smoothed_H(const Scenario& s, const PriceMatrix& p, double mu,
                              double eps = kDefaultBisectionEps, bool with_gradient = false);

/// Analytic gradient of smoothed_H. Multiplier sensitivities come from
/// differentiating the smoothed conservation equation (implicit function
/// theorem), one scalar equation per origin.
Matrix grad_smoothed_H(const Scenario& s, const PriceMatrix& p, double mu,
                       double eps = kDefaultBisectionEps);

struct SpgConfig {
  double alpha0 = 1.0;
  double alpha_min = 1e-10;
  double alpha_max = 1e10;
  int memory = 10;
  double xi = 1e-4;
  double sigma1 = 0.1;
  double sigma2 = 0.9;
  double eps_pg = 1e-6;
  std::vector<double> mu_schedule = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  int max_iters = 20000;  // per smoothing level
  double bisection_eps = kDefaultBisectionEps;
};

/// Throws InvalidScenario when the parameters break their invariants.
void validate_config(const SpgConfig& c);

/// Nonmonotone spectral projected gradient with continuation over
/// mu_schedule. The best point of every level and p_init itself are
/// re-scored with the unsmoothed H; the lowest wins.
///
/// Diagnostics: final_pg_norm (last iterate, last level), iterations,
/// line_search_failures, step_resets, nonmonotone_violations, step_bound_violations,
/// feasibility_violations, final_mu, smoothed_objective.
SolveReport spg_solve(const Scenario& s, const PriceMatrix& p_init, const SpgConfig& config = {},
                      PricingMode mode = PricingMode::TimeLocation);

}  // namespace tlp

#endif
