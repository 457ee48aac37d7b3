#include "tlp/smoothing_spg.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

namespace tlp {

double smooth_max(double x, double mu) {
  if (!(mu >= 0.0)) throw Error(ErrorCode::DomainError, "smoothing parameter must be >= 0");
  if (mu == 0.0) return std::max(x, 0.0);
  const double r = std::sqrt(x * x + mu);
  if (x >= 0.0) return x + mu / (2.0 * (r + x));
  return mu / (2.0 * (r - x));
}

double smooth_max_derivative(double x, double mu) {
  if (!(mu >= 0.0)) throw Error(ErrorCode::DomainError, "smoothing parameter must be >= 0");
  if (mu == 0.0) return x > 0.0 ? 1.0 : (x < 0.0 ? 0.0 : 0.5);
  const double r = std::sqrt(x * x + mu);
  if (!std::isfinite(r)) return x > 0.0 ? 1.0 : 0.0;
  if (x >= 0.0) return 0.5 * (1.0 + x / r);
  return mu / (2.0 * r * (r - x));
}

namespace {

// Accepted steps shorter than this (relative to p0) make no measurable progress.
constexpr double kNegligibleStep = 1e-13;
constexpr double kRoundoffUlps = 64.0;

void require_logarithmic(const Scenario& s, const char* who) {
  for (const auto& u : s.user_types)
    if (!std::holds_alternative<Logarithmic>(u.utility))
      throw Error(ErrorCode::Incompatible,
                  std::string(who) + " requires every user type to have a logarithmic utility");
}

// Sensitivity data for one origin: per reachable cell, its weight and
// D = theta'(z) k w / (p + lambda)^2, so that dx/dp_c = dx/dlambda = -D.
struct OriginSensitivity {
  std::vector<int> t, l;
  std::vector<double> weight, D;
};

}  // namespace

SmoothedEvaluation smoothed_H(const Scenario& s, const PriceMatrix& p, double mu, double eps,
                              bool with_gradient) {
  require_logarithmic(s, "smoothed_H");
  if (!(mu > 0.0)) throw Error(ErrorCode::DomainError, "smoothed_H needs mu > 0");
  if (!prices_feasible(s, p))
    throw Error(ErrorCode::DomainError, "prices must satisfy 0 <= p <= p0 with shape T0 x L");

  SmoothedEvaluation out;
  out.load = Matrix::Zero(s.T0, s.L);
  std::vector<OriginSensitivity> sens;

  for (int a = 0; a < s.num_types(); ++a) {
    const UserType& u = s.user_types[a];
    const double k = std::get<Logarithmic>(u.utility).k;
    out.lambda.push_back(Matrix::Constant(s.T0, s.L, std::numeric_limits<double>::quiet_NaN()));
    for (int t = 0; t < s.T0; ++t) {
      for (int l = 0; l < s.L; ++l) {
        const double demand = u.x_ini(t, l);
        if (demand <= 0.0) continue;
        const auto cells = window_cells(s, a, t, l);

        auto response = [&](const WindowCell& c, double lam) {
          const double q = std::max(p(c.t, c.l) + lam, kDenominatorFloor);
          return smooth_max(k * c.discount / q - 1.0, mu);
        };
        auto g = [&](double lam) {
          double total = 0.0;
          for (const auto& c : cells)
            if (c.weight > 0.0) total += c.weight * response(c, lam);
          return total - demand;
        };
        const BisectionResult b = bisect_multiplier(g, k / (demand + 1.0) - p(t, l), k, eps);
        const double lam = refine_multiplier(g, b.lo, b.hi);
        out.lambda[a](t, l) = lam;

        OriginSensitivity os;
        for (const auto& c : cells) {
          if (c.weight <= 0.0) continue;
          const double amount = response(c, lam);
          out.load(c.t, c.l) += c.weight * amount;
          if (with_gradient) {
            const double raw = p(c.t, c.l) + lam;
            double D = 0.0;
            if (raw > kDenominatorFloor) {
              const double z = k * c.discount / raw - 1.0;
              D = smooth_max_derivative(z, mu) * k * c.discount / (raw * raw);
            }
            os.t.push_back(c.t);
            os.l.push_back(c.l);
            os.weight.push_back(c.weight);
            os.D.push_back(D);
          }
        }
        if (with_gradient) sens.push_back(std::move(os));
      }
    }
  }

  double h = 0.0;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) {
      const double x = out.load(t, l);
      h += s.alpha(t, l) * (s.gamma * smooth_max(x - s.capacity, mu) - p(t, l) * x);
    }
  out.H = h;
  if (!std::isfinite(h)) throw Error(ErrorCode::NonFinite, "smoothed objective is not finite");
  if (!with_gradient) return out;

  // W(t,l) = alpha (f~'(x_aft) - p): sensitivity of H~ to the smoothed load.
  Matrix W(s.T0, s.L);
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l)
      W(t, l) = s.alpha(t, l) *
                (s.gamma * smooth_max_derivative(out.load(t, l) - s.capacity, mu) - p(t, l));

  out.grad = -(s.alpha.array() * out.load.array()).matrix();
  for (const auto& os : sens) {
    double S = 0.0;
    double A = 0.0;
    for (std::size_t i = 0; i < os.D.size(); ++i) {
      S += os.weight[i] * os.D[i];
      A += os.weight[i] * W(os.t[i], os.l[i]) * os.D[i];
    }
    if (!(S > 0.0))
      throw Error(ErrorCode::NumericalStall, "singular multiplier sensitivity in smoothed gradient");
    for (std::size_t i = 0; i < os.D.size(); ++i) {
      const double bD = os.weight[i] * os.D[i];
      out.grad(os.t[i], os.l[i]) += -W(os.t[i], os.l[i]) * bD + A * bD / S;
    }
  }
  return out;
}

Matrix grad_smoothed_H(const Scenario& s, const PriceMatrix& p, double mu, double eps) {
  return smoothed_H(s, p, mu, eps, true).grad;
}

void validate_config(const SpgConfig& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidScenario, "SPG config: " + m); };
  if (!(c.alpha_min > 0.0 && c.alpha_min <= c.alpha0 && c.alpha0 <= c.alpha_max))
    bad("need 0 < alpha_min <= alpha0 <= alpha_max");
  if (!(c.sigma1 > 0.0 && c.sigma1 < c.sigma2 && c.sigma2 < 1.0)) bad("need 0 < sigma1 < sigma2 < 1");
  if (!(c.xi > 0.0 && c.xi < 1.0)) bad("need 0 < xi < 1");
  if (c.memory < 1) bad("need M >= 1");
  if (c.max_iters < 1) bad("need max_iters >= 1");
  if (!(c.eps_pg > 0.0)) bad("need eps_pg > 0");
  if (c.mu_schedule.empty()) bad("mu_schedule is empty");
  for (std::size_t i = 0; i < c.mu_schedule.size(); ++i) {
    if (!(c.mu_schedule[i] > 0.0)) bad("mu values must be positive");
    if (i > 0 && !(c.mu_schedule[i] < c.mu_schedule[i - 1])) bad("mu_schedule must be strictly decreasing");
  }
}

SolveReport spg_solve(const Scenario& s, const PriceMatrix& p_init, const SpgConfig& cfg,
                      PricingMode mode) {
  const auto started = std::chrono::steady_clock::now();
  validate_config(cfg);
  require_valid(s);
  require_logarithmic(s, "spg");

  if (mode == PricingMode::Flat) {
    SolveReport r = build_report(s, flat_prices(s), TieBreak::Lexicographic, "spg");
    r.mode = to_string(mode);
    return r;
  }

  const int dim = decision_dim(s, mode);
  auto project = [&](Vector z) { return z.cwiseMax(0.0).cwiseMin(s.p0).eval(); };
  long evaluations = 0;
  auto eval = [&](const Vector& z, double mu, Vector& grad) {
    ++evaluations;
    const SmoothedEvaluation ev = smoothed_H(s, expand_prices(s, mode, z), mu, cfg.bisection_eps, true);
    grad = pullback_gradient(s, mode, ev.grad);
    if (!grad.allFinite()) throw Error(ErrorCode::NonFinite, "smoothed gradient is not finite");
    return ev.H;
  };

  const Vector z_init = project(restrict_prices(s, mode, p_init));
  std::vector<Vector> candidates{z_init};
  Vector start = z_init;

  std::vector<double> trace;
  long iterations = 0;
  int line_search_failures = 0;
  int step_resets = 0;
  int nonmonotone_violations = 0;
  int step_bound_violations = 0;
  int feasibility_violations = 0;
  double final_pg = std::numeric_limits<double>::quiet_NaN();
  double final_smoothed = std::numeric_limits<double>::quiet_NaN();

  for (const double mu : cfg.mu_schedule) {
    Vector z = start;
    Vector g(dim);
    double f = eval(z, mu, g);
    std::deque<double> history{f};
    Vector best_z = z;
    double best_f = f;
    double alpha = std::clamp(cfg.alpha0, cfg.alpha_min, cfg.alpha_max);
    double pg = (project(z - g) - z).norm();

    for (int it = 0; it < cfg.max_iters && pg > cfg.eps_pg; ++it) {
      const Vector d = project(z - alpha * g) - z;
      const double gd = d.dot(g);
      if (!(gd < 0.0)) break;
      // The test allows for round-off in f; without it the search stalls once
      // the predicted decrease drops below the objective's last few ulps.
      const double f_max = *std::max_element(history.begin(), history.end());
      const double slack = kRoundoffUlps * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f_max));

      double eta = 1.0;
      Vector z_new = project(z + eta * d);
      Vector g_new(dim);
      double f_new = eval(z_new, mu, g_new);
      const double d_inf = d.lpNorm<Eigen::Infinity>();
      bool accepted = true;
      int backtracks = 0;
      while (f_new > f_max + slack + cfg.xi * eta * gd) {
        if (++backtracks > 60 || eta * d_inf <= kNegligibleStep * s.p0) {
          accepted = false;
          break;
        }
        // Safeguarded quadratic interpolation along the direction.
        const double curvature = f_new - f - eta * gd;
        double trial = curvature > 0.0 ? -gd * eta * eta / (2.0 * curvature) : 0.5 * eta;
        if (!std::isfinite(trial)) trial = 0.5 * eta;
        eta = std::clamp(trial, cfg.sigma1 * eta, cfg.sigma2 * eta);
        z_new = project(z + eta * d);
        f_new = eval(z_new, mu, g_new);
      }
      if (!accepted || eta * d_inf <= kNegligibleStep * s.p0) {
        // The spectral step overshot into a region the test cannot resolve;
        // retry from the same point with a shorter one.
        if (alpha > cfg.alpha_min) {
          alpha = std::max(cfg.alpha_min, 1e-2 * alpha);
          ++step_resets;
          continue;
        }
        ++line_search_failures;
        break;
      }
      if (f_new > f_max + slack + cfg.xi * eta * gd) ++nonmonotone_violations;
      if ((z_new.array() < 0.0).any() || (z_new.array() > s.p0).any()) ++feasibility_violations;

      const Vector step = z_new - z;
      const Vector dy = g_new - g;
      const double sy = step.dot(dy);
      z = z_new;
      g = g_new;
      f = f_new;
      history.push_back(f);
      if (static_cast<int>(history.size()) > cfg.memory) history.pop_front();
      if (f < best_f) {
        best_f = f;
        best_z = z;
      }
      alpha = sy <= 0.0 ? cfg.alpha_max : std::clamp(step.squaredNorm() / sy, cfg.alpha_min, cfg.alpha_max);
      if (alpha < cfg.alpha_min || alpha > cfg.alpha_max) ++step_bound_violations;
      trace.push_back(best_f);
      ++iterations;
      pg = (project(z - g) - z).norm();
    }
    final_pg = pg;
    final_smoothed = best_f;
    start = best_z;
    candidates.push_back(best_z);
  }

  // Re-score with the unsmoothed objective; the last level's best is preferred
  // unless another candidate (including the start) is strictly better.
  Vector chosen = candidates.back();
  double chosen_h = evaluate_H(s, expand_prices(s, mode, chosen)).H;
  for (std::size_t i = 0; i + 1 < candidates.size(); ++i) {
    const double h = evaluate_H(s, expand_prices(s, mode, candidates[i])).H;
    if (h < chosen_h) {
      chosen_h = h;
      chosen = candidates[i];
    }
  }

  SolveReport r = build_report(s, expand_prices(s, mode, chosen), TieBreak::Lexicographic, "spg");
  r.mode = to_string(mode);
  r.trace = std::move(trace);
  r.evaluations = evaluations;
  r.diagnostics["final_pg_norm"] = final_pg;
  r.diagnostics["iterations"] = static_cast<double>(iterations);
  r.diagnostics["line_search_failures"] = line_search_failures;
  r.diagnostics["step_resets"] = step_resets;
  r.diagnostics["nonmonotone_violations"] = nonmonotone_violations;
  r.diagnostics["step_bound_violations"] = step_bound_violations;
  r.diagnostics["feasibility_violations"] = feasibility_violations;
  r.diagnostics["final_mu"] = cfg.mu_schedule.back();
  r.diagnostics["smoothed_objective"] = final_smoothed;
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

}  // namespace tlp
