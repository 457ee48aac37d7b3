// Random instances and independent reference computations shared by the tests.
// Nothing here calls the library's schedulers, objective or LP code.
#pragma once

#include "tlp/model.hpp"
#include "tlp/lp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace tlp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

enum class Kind { Log, Linear, ExpSaturating, SquareRoot };

// u(x) = c (1 - exp(-x))
inline GeneralConcave exp_saturating(double c) {
  return GeneralConcave{[c](double x) { return c * (1.0 - std::exp(-x)); },
                        [c](double x) { return c * std::exp(-x); },
                        [c](double y) { return -std::log(y / c); }, c, 0.0};
}

// u(x) = 2c (sqrt(1 + x) - 1)
inline GeneralConcave square_root(double c) {
  return GeneralConcave{[c](double x) { return 2.0 * c * (std::sqrt(1.0 + x) - 1.0); },
                        [c](double x) { return c / std::sqrt(1.0 + x); },
                        [c](double y) { return (c / y) * (c / y) - 1.0; }, c, 0.0};
}

struct InstanceShape {
  int T0 = 4;
  int L = 2;
  int T_min = 2;
  int T_max = 3;
  int types = 1;
  double zero_demand_prob = 0.0;  // chance an x_ini entry is exactly zero
  double zero_beta_prob = 0.0;    // chance a beta entry is forced to zero before renormalizing
};

inline Matrix random_stochastic_rows(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = uniform(rng, 0.05, 1.0);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

inline UtilitySpec random_utility(Rng& rng, Kind kind) {
  switch (kind) {
    case Kind::Log: return Logarithmic{uniform(rng, 0.5, 2.0)};
    case Kind::Linear: return Linear{uniform(rng, 0.5, 2.0)};
    case Kind::ExpSaturating: return exp_saturating(uniform(rng, 0.5, 2.0));
    case Kind::SquareRoot: return square_root(uniform(rng, 0.5, 2.0));
  }
  return Logarithmic{1.0};
}

inline Scenario random_scenario(Rng& rng, Kind kind, const InstanceShape& shape = {}) {
  Scenario s;
  s.T0 = shape.T0;
  s.L = shape.L;
  s.T = uniform_int(rng, shape.T_min, shape.T_max);
  s.p0 = 1.0;
  s.gamma = uniform(rng, 1.0, 10.0);
  s.capacity = uniform(rng, 0.5, 3.0);
  s.alpha = random_stochastic_rows(rng, s.T0, s.L);
  for (int a = 0; a < shape.types; ++a) {
    UserType u;
    u.utility = random_utility(rng, kind);
    u.delta = uniform(rng, 0.3, 1.0);
    u.x_ini = Matrix(s.T0, s.L);
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l)
        u.x_ini(t, l) = uniform(rng, 0.0, 1.0) < shape.zero_demand_prob ? 0.0 : uniform(rng, 0.1, 3.0);
    u.beta = LocalMobility(s.T0, s.L, s.T);
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l)
        for (int tn = t + 1; tn <= s.window_end(t); ++tn) {
          std::vector<double> w(static_cast<std::size_t>(s.L));
          double sum = 0.0;
          for (int ln = 0; ln < s.L; ++ln) {
            w[ln] = uniform(rng, 0.0, 1.0) < shape.zero_beta_prob ? 0.0 : uniform(rng, 0.05, 1.0);
            sum += w[ln];
          }
          if (sum == 0.0) {
            w[0] = 1.0;
            sum = 1.0;
          }
          for (int ln = 0; ln < s.L; ++ln) u.beta.at(t, l, tn, ln) = w[ln] / sum;
        }
    s.user_types.push_back(std::move(u));
  }
  return s;
}

inline PriceMatrix random_prices(Rng& rng, const Scenario& s) {
  PriceMatrix p(s.T0, s.L);
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) p(t, l) = uniform(rng, 0.0, s.p0);
  return p;
}

// Two slots, one location, one linear type that may defer by one slot.
inline Scenario appendix_b(double gamma = 1.0, double delta = 1.0) {
  Scenario s;
  s.T0 = 2;
  s.L = 1;
  s.T = 2;
  s.capacity = 1.0;
  s.gamma = gamma;
  s.p0 = 1.0;
  s.alpha = Matrix::Ones(2, 1);
  UserType u;
  u.utility = Linear{1.0};
  u.delta = delta;
  u.x_ini = Matrix::Ones(2, 1);
  u.beta = LocalMobility(2, 1, 2);
  u.beta.at(0, 0, 1, 0) = 1.0;
  s.user_types.push_back(std::move(u));
  return s;
}

// Heavy first slot over capacity, light second slot, log utility.
inline Scenario log_toy() {
  Scenario s;
  s.T0 = 2;
  s.L = 1;
  s.T = 2;
  s.capacity = 0.8;
  s.gamma = 30.0;
  s.p0 = 1.0;
  s.alpha = Matrix::Ones(2, 1);
  UserType u;
  u.utility = Logarithmic{1.0};
  u.delta = 0.6;
  u.x_ini = Matrix(2, 1);
  u.x_ini << 1.5, 0.1;
  u.beta = LocalMobility(2, 1, 2);
  u.beta.at(0, 0, 1, 0) = 1.0;
  s.user_types.push_back(std::move(u));
  return s;
}

// ---------------------------------------------------------------------------
// Direct scheduling arithmetic, written from the model definitions.

struct Reach {
  int t, l;
  double beta, discount;
};

inline std::vector<Reach> reachable(const Scenario& s, int a, int t, int l) {
  std::vector<Reach> out{{t, l, 1.0, 1.0}};
  const auto& u = s.user_types[a];
  for (int tn = t + 1; tn <= std::min(t + s.T - 1, s.T0 - 1); ++tn)
    for (int ln = 0; ln < s.L; ++ln)
      out.push_back({tn, ln, u.beta(t, l, tn, ln), std::pow(u.delta, tn - t)});
  return out;
}

// Conservation residual g(lambda) for a log type.
inline double log_residual(const Scenario& s, int a, int t, int l, const PriceMatrix& p, double lam) {
  const double k = std::get<Logarithmic>(s.user_types[a].utility).k;
  double total = 0.0;
  for (const auto& r : reachable(s, a, t, l)) {
    if (r.beta <= 0.0) continue;
    const double q = p(r.t, r.l) + lam;
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    total += r.beta * std::max(k * r.discount / q - 1.0, 0.0);
  }
  return total - s.user_types[a].x_ini(t, l);
}

// Sign-change point of a nonincreasing g, located by successively finer grid
// scans (1e-3, 1e-6, then 1e-9). Returns the midpoint of the last cell.
inline double grid_sign_change(const std::function<double(double)>& g, double lo, double hi) {
  double a = lo;
  double b = hi;
  for (double step : {1e-3, 1e-6, 1e-9}) {
    double x = a;
    double next = x;
    bool found = false;
    while (x < b) {
      next = std::min(x + step, b);
      if (g(next) < 0.0) {
        found = true;
        break;
      }
      x = next;
    }
    if (!found) return b;
    a = x;
    b = next;
  }
  return 0.5 * (a + b);
}

inline double oracle_lambda_log(const Scenario& s, int a, int t, int l, const PriceMatrix& p) {
  const double k = std::get<Logarithmic>(s.user_types[a].utility).k;
  const double x_ini = s.user_types[a].x_ini(t, l);
  return grid_sign_change([&](double lam) { return log_residual(s, a, t, l, p, lam); },
                          k / (x_ini + 1.0) - p(t, l), k);
}

// Aggregate load for an all-log population, with multipliers solved by a
// plain 200-step bisection.
inline Matrix reference_log_load(const Scenario& s, const PriceMatrix& p) {
  Matrix load = Matrix::Zero(s.T0, s.L);
  for (int a = 0; a < s.num_types(); ++a) {
    const double k = std::get<Logarithmic>(s.user_types[a].utility).k;
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        if (s.user_types[a].x_ini(t, l) <= 0.0) continue;
        double lo = k / (s.user_types[a].x_ini(t, l) + 1.0) - p(t, l);
        double hi = k;
        for (int i = 0; i < 200; ++i) {
          const double mid = 0.5 * (lo + hi);
          (log_residual(s, a, t, l, p, mid) >= 0.0 ? lo : hi) = mid;
        }
        const double lam = 0.5 * (lo + hi);
        for (const auto& r : reachable(s, a, t, l))
          if (r.beta > 0.0) load(r.t, r.l) += r.beta * std::max(k * r.discount / (p(r.t, r.l) + lam) - 1.0, 0.0);
      }
  }
  return load;
}

inline double reference_cost(const Scenario& s, const PriceMatrix& p, const Matrix& load) {
  double h = 0.0;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l)
      h += s.alpha(t, l) * (s.gamma * std::max(load(t, l) - s.capacity, 0.0) - p(t, l) * load(t, l));
  return h;
}

inline double reference_log_H(const Scenario& s, const PriceMatrix& p) {
  return reference_cost(s, p, reference_log_load(s, p));
}

// Linear population: every user-optimal pure choice (all demand on one
// maximizing cell) is enumerated and the operator's best is kept.
inline double reference_linear_H(const Scenario& s, const PriceMatrix& p, double tie_tol = 1e-12) {
  struct Alt {
    std::vector<std::pair<int, int>> cells;
    double demand;
  };
  std::vector<Alt> alts;
  for (int a = 0; a < s.num_types(); ++a) {
    const double rho = std::get<Linear>(s.user_types[a].utility).rho;
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        const double d = s.user_types[a].x_ini(t, l);
        if (d <= 0.0) continue;
        double best = -std::numeric_limits<double>::infinity();
        const auto cells = reachable(s, a, t, l);
        for (const auto& r : cells)
          if (r.beta > 0.0) best = std::max(best, r.discount * rho - p(r.t, r.l));
        Alt alt{{}, d};
        for (const auto& r : cells)
          if (r.beta > 0.0 && r.discount * rho - p(r.t, r.l) >= best - tie_tol) alt.cells.push_back({r.t, r.l});
        alts.push_back(std::move(alt));
      }
  }
  std::vector<std::size_t> pick(alts.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    Matrix load = Matrix::Zero(s.T0, s.L);
    for (std::size_t i = 0; i < alts.size(); ++i) {
      const auto [t, l] = alts[i].cells[pick[i]];
      load(t, l) += alts[i].demand;
    }
    best = std::min(best, reference_cost(s, p, load));
    std::size_t i = 0;
    while (i < alts.size() && ++pick[i] == alts[i].cells.size()) pick[i++] = 0;
    if (i == alts.size()) break;
  }
  return best;
}

// Worst violation of the user problem's optimality system at (amounts, lambda):
// stationarity sign, complementarity, nonnegativity, conservation, and zero
// traffic on cells the user never visits.
inline double kkt_violation(const Scenario& s, int a, int t, int l, const PriceMatrix& p,
                            const std::vector<double>& x, double lam) {
  const auto& u = s.user_types[a];
  auto marginal = [&](double v) {
    if (const auto* lg = std::get_if<Logarithmic>(&u.utility)) return lg->k / (1.0 + v);
    return std::get<GeneralConcave>(u.utility).marginal(v);
  };
  const auto cells = reachable(s, a, t, l);
  if (x.size() != cells.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  double conserved = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& r = cells[i];
    worst = std::max(worst, -x[i]);
    if (r.beta <= 0.0) {
      worst = std::max(worst, std::abs(x[i]));
      continue;
    }
    const double slack = p(r.t, r.l) + lam - r.discount * marginal(x[i]);
    worst = std::max(worst, -r.beta * slack);
    worst = std::max(worst, std::abs(r.beta * x[i] * slack));
    conserved += r.beta * x[i];
  }
  return std::max(worst, std::abs(conserved - u.x_ini(t, l)));
}

// Central differences of f at p, one entry per price.
inline Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& p, double h) {
  Matrix g(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Matrix up = p, down = p;
    up.data()[i] += h;
    down.data()[i] -= h;
    g.data()[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

struct GridBest {
  Eigen::VectorXd z;
  double H = std::numeric_limits<double>::infinity();
};

// Exhaustive scan of {lo, lo+step, ..., hi}^dim.
inline GridBest grid_search(const std::function<double(const Eigen::VectorXd&)>& H, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi, double step) {
  const int dim = static_cast<int>(lo.size());
  std::vector<int> n(static_cast<std::size_t>(dim)), idx(static_cast<std::size_t>(dim), 0);
  for (int i = 0; i < dim; ++i) n[i] = static_cast<int>(std::floor((hi[i] - lo[i]) / step + 1e-9)) + 1;
  GridBest g;
  Eigen::VectorXd z(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) z[i] = std::min(lo[i] + idx[i] * step, hi[i]);
    const double h = H(z);
    if (h < g.H) {
      g.H = h;
      g.z = z;
    }
    int i = 0;
    while (i < dim && ++idx[i] == n[i]) idx[i++] = 0;
    if (i == dim) break;
  }
  return g;
}

// Grid at `step`, then repeated 10x finer scans of the neighbourhood of the
// incumbent until the spacing reaches `final_step`.
inline GridBest refined_grid_search(const std::function<double(const Eigen::VectorXd&)>& H, int dim, double p0,
                                    double step, double final_step) {
  GridBest g = grid_search(H, Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Constant(dim, p0), step);
  for (double h = step; h > final_step * 1.0001; h /= 10.0) {
    const Eigen::VectorXd lo = (g.z.array() - h).max(0.0);
    const Eigen::VectorXd hi = (g.z.array() + h).min(p0);
    const GridBest local = grid_search(H, lo, hi, h / 10.0);
    if (local.H < g.H) g = local;
  }
  return g;
}

// Bounded LP with at most six variables, feasible by construction around an
// interior point of the box.
inline LpProblem random_bounded_lp(Rng& rng) {
  const int n = uniform_int(rng, 1, 6);
  const int m_eq = uniform_int(rng, 0, std::min(2, n - 1));
  const int m_ub = uniform_int(rng, 0, 4);
  LpProblem lp;
  lp.c = Eigen::VectorXd(n);
  lp.lower = Eigen::VectorXd(n);
  lp.upper = Eigen::VectorXd(n);
  Eigen::VectorXd z0(n);
  for (int j = 0; j < n; ++j) {
    lp.c[j] = uniform(rng, -1.0, 1.0);
    lp.lower[j] = uniform(rng, -2.0, 0.0);
    lp.upper[j] = lp.lower[j] + uniform(rng, 0.5, 3.0);
    z0[j] = uniform(rng, lp.lower[j], lp.upper[j]);
  }
  lp.A_eq = Eigen::MatrixXd(m_eq, n);
  lp.A_ub = Eigen::MatrixXd(m_ub, n);
  for (int i = 0; i < m_eq; ++i)
    for (int j = 0; j < n; ++j) lp.A_eq(i, j) = uniform(rng, -1.0, 1.0);
  for (int i = 0; i < m_ub; ++i)
    for (int j = 0; j < n; ++j) lp.A_ub(i, j) = uniform(rng, -1.0, 1.0);
  lp.b_eq = lp.A_eq * z0;
  lp.b_ub = lp.A_ub * z0;
  for (int i = 0; i < m_ub; ++i) lp.b_ub[i] += uniform(rng, 0.0, 0.5);
  return lp;
}

// ---------------------------------------------------------------------------
// Brute-force LP: every basic solution of the bounded problem.

inline double vertex_enumeration_min(const LpProblem& lp, double feas_tol = 1e-9) {
  const int n = lp.num_vars();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<bool> is_eq;
  for (Eigen::Index i = 0; i < lp.A_eq.rows(); ++i) {
    rows.push_back(lp.A_eq.row(i));
    rhs.push_back(lp.b_eq[i]);
    is_eq.push_back(true);
  }
  for (Eigen::Index i = 0; i < lp.A_ub.rows(); ++i) {
    rows.push_back(lp.A_ub.row(i));
    rhs.push_back(lp.b_ub[i]);
    is_eq.push_back(false);
  }
  for (int j = 0; j < n; ++j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
    const double lo = lp.lower.size() ? lp.lower[j] : 0.0;
    const double hi = lp.upper.size() ? lp.upper[j] : std::numeric_limits<double>::infinity();
    if (std::isfinite(hi)) {
      e[j] = 1.0;
      rows.push_back(e);
      rhs.push_back(hi);
      is_eq.push_back(false);
    }
    if (std::isfinite(lo)) {
      e[j] = -1.0;
      rows.push_back(e);
      rhs.push_back(-lo);
      is_eq.push_back(false);
    }
  }
  const int m = static_cast<int>(rows.size());
  auto feasible = [&](const Eigen::VectorXd& z) {
    for (int i = 0; i < m; ++i) {
      const double v = rows[i].dot(z) - rhs[i];
      if (is_eq[i] ? std::abs(v) > feas_tol : v > feas_tol) return false;
    }
    return true;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> choose(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd A(n, n);
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) {
        A.row(i) = rows[choose[i]];
        b[i] = rhs[choose[i]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < n) return;
      const Eigen::VectorXd z = lu.solve(b);
      if (feasible(z)) best = std::min(best, lp.c.dot(z));
      return;
    }
    for (int i = start; i <= m - (n - depth); ++i) {
      choose[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace tlp::testing
