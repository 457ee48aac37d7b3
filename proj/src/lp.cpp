#include "tlp/lp.hpp"

#include "tlp/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace tlp {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr double kInf = std::numeric_limits<double>::infinity();

// z_j = offset + sum coef * y_col
struct VarMap {
  double offset = 0.0;
  int col_a = -1;
  double coef_a = 0.0;
  int col_b = -1;
  double coef_b = 0.0;
};

// Standard form: min cost'y, rows y = rhs, y >= 0, with the tableau kept in
// canonical form for the current basis. The last tableau row holds reduced
// costs and minus the objective in its rhs.
class Tableau {
 public:
  Tableau(RowMatrix rows, std::vector<int> basis, const LpOptions& opts)
      : t_(std::move(rows)), basis_(std::move(basis)), opts_(opts) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  double rhs(int i) const { return t_(i, cols()); }
  double objective() const { return -t_(rows(), cols()); }
  const std::vector<int>& basis() const { return basis_; }
  double at(int i, int j) const { return t_(i, j); }
  long pivots() const { return pivots_; }

  void set_cost(const Eigen::VectorXd& cost) {
    const int m = rows();
    const int n = cols();
    for (int j = 0; j < n; ++j) t_(m, j) = cost[j];
    t_(m, n) = 0.0;
    for (int i = 0; i < m; ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  enum class Outcome { Optimal, Unbounded };

  // Bland's rule: lowest-index improving column enters; among ratio ties the
  // lowest-index basic variable leaves.
  Outcome run(int allowed_cols) {
    const int m = rows();
    const int n = cols();
    for (;;) {
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j) {
        if (t_(m, j) < -opts_.feasibility_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Outcome::Optimal;

      int leave = -1;
      double best = kInf;
      for (int i = 0; i < m; ++i) {
        const double a = t_(i, enter);
        if (a <= opts_.pivot_tol) continue;
        const double ratio = std::max(t_(i, n), 0.0) / a;
        const double slack = 1e-12 * (1.0 + std::abs(best));
        if (leave < 0 || ratio < best - slack ||
            (ratio <= best + slack && basis_[i] < basis_[leave])) {
          if (leave < 0 || ratio < best - slack) best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return Outcome::Unbounded;
      pivot(leave, enter);
    }
  }

  void pivot(int r, int c) {
    if (++pivots_ > opts_.max_pivots)
      throw Error(ErrorCode::NumericalStall, "simplex exceeded its pivot budget");
    t_.row(r) /= t_(r, c);
    for (int i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[r] = c;
  }

  void drop_row(int r) {
    const int total = static_cast<int>(t_.rows());
    RowMatrix next(total - 1, t_.cols());
    for (int i = 0, k = 0; i < total; ++i)
      if (i != r) next.row(k++) = t_.row(i);
    t_ = std::move(next);
    basis_.erase(basis_.begin() + r);
  }

 private:
  RowMatrix t_;
  std::vector<int> basis_;
  LpOptions opts_;
  long pivots_ = 0;
};

void check_shapes(const LpProblem& p) {
  const Eigen::Index n = p.c.size();
  auto bad = [](const char* what) { throw Error(ErrorCode::InvalidScenario, what); };
  if (p.A_eq.rows() != p.b_eq.size()) bad("LP: A_eq and b_eq disagree");
  if (p.A_ub.rows() != p.b_ub.size()) bad("LP: A_ub and b_ub disagree");
  if (p.A_eq.rows() > 0 && p.A_eq.cols() != n) bad("LP: A_eq has wrong column count");
  if (p.A_ub.rows() > 0 && p.A_ub.cols() != n) bad("LP: A_ub has wrong column count");
  if (p.lower.size() != 0 && p.lower.size() != n) bad("LP: lower bound size mismatch");
  if (p.upper.size() != 0 && p.upper.size() != n) bad("LP: upper bound size mismatch");
  if (!p.c.allFinite() || !p.A_eq.allFinite() || !p.b_eq.allFinite() || !p.A_ub.allFinite() ||
      !p.b_ub.allFinite())
    bad("LP: non-finite data");
}

}  // namespace

LpSolution solve_lp(const LpProblem& prob, const LpOptions& opts) {
  check_shapes(prob);
  const int n = prob.num_vars();
  const int m_eq = static_cast<int>(prob.b_eq.size());
  const int m_ub = static_cast<int>(prob.b_ub.size());

  // Map original variables onto nonnegative columns.
  std::vector<VarMap> map(n);
  std::vector<std::pair<int, double>> box_rows;  // (column, upper - lower)
  int ncols = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = prob.lower.size() ? prob.lower[j] : 0.0;
    const double hi = prob.upper.size() ? prob.upper[j] : kInf;
    if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
      throw Error(ErrorCode::InvalidScenario, "LP: inconsistent bounds on variable " + std::to_string(j));
    VarMap& v = map[j];
    if (std::isfinite(lo)) {
      v.offset = lo;
      v.col_a = ncols++;
      v.coef_a = 1.0;
      if (std::isfinite(hi)) box_rows.emplace_back(v.col_a, hi - lo);
    } else if (std::isfinite(hi)) {
      v.offset = hi;
      v.col_a = ncols++;
      v.coef_a = -1.0;
    } else {
      v.col_a = ncols++;
      v.coef_a = 1.0;
      v.col_b = ncols++;
      v.coef_b = -1.0;
    }
  }
  const int n_struct = ncols;
  const int n_slack = m_ub + static_cast<int>(box_rows.size());
  const int m = m_eq + n_slack;

  // Rows in structural + slack columns, before sign normalization.
  RowMatrix body = RowMatrix::Zero(m, n_struct + n_slack);
  Eigen::VectorXd rhs(m);
  auto emit = [&](int row, const Eigen::RowVectorXd& coeffs, double b) {
    double shifted = b;
    for (int j = 0; j < n; ++j) {
      const double a = coeffs[j];
      if (a == 0.0) continue;
      shifted -= a * map[j].offset;
      body(row, map[j].col_a) += a * map[j].coef_a;
      if (map[j].col_b >= 0) body(row, map[j].col_b) += a * map[j].coef_b;
    }
    rhs[row] = shifted;
  };
  for (int i = 0; i < m_eq; ++i) emit(i, prob.A_eq.row(i), prob.b_eq[i]);
  for (int i = 0; i < m_ub; ++i) {
    emit(m_eq + i, prob.A_ub.row(i), prob.b_ub[i]);
    body(m_eq + i, n_struct + i) = 1.0;
  }
  for (std::size_t k = 0; k < box_rows.size(); ++k) {
    const int row = m_eq + m_ub + static_cast<int>(k);
    body(row, box_rows[k].first) = 1.0;
    body(row, n_struct + m_ub + static_cast<int>(k)) = 1.0;
    rhs[row] = box_rows[k].second;
  }

  // Basis: a slack with +1 coefficient when the row allows it, else an artificial.
  std::vector<int> basis(m, -1);
  int n_art = 0;
  for (int i = 0; i < m; ++i) {
    if (rhs[i] < 0.0) {
      body.row(i) *= -1.0;
      rhs[i] = -rhs[i];
    }
    if (i >= m_eq && body(i, n_struct + (i - m_eq)) == 1.0)
      basis[i] = n_struct + (i - m_eq);
    else
      ++n_art;
  }
  const int n_total = n_struct + n_slack + n_art;
  RowMatrix tab = RowMatrix::Zero(m + 1, n_total + 1);
  tab.block(0, 0, m, n_struct + n_slack) = body;
  tab.block(0, n_total, m, 1) = rhs;
  for (int i = 0, a = 0; i < m; ++i) {
    if (basis[i] >= 0) continue;
    const int col = n_struct + n_slack + a++;
    tab(i, col) = 1.0;
    basis[i] = col;
  }

  Tableau T(std::move(tab), std::move(basis), opts);
  const int first_art = n_struct + n_slack;

  LpSolution sol;
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n_total);
    phase1.tail(n_art).setOnes();
    T.set_cost(phase1);
    T.run(n_total);
    const double scale = std::max(1.0, rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0);
    if (T.objective() > opts.feasibility_tol * scale) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = T.pivots();
      return sol;
    }
    // Pivot remaining zero-level artificials out; drop redundant rows.
    for (int i = T.rows() - 1; i >= 0; --i) {
      if (T.basis()[i] < first_art) continue;
      int enter = -1;
      for (int j = 0; j < first_art; ++j) {
        if (std::abs(T.at(i, j)) > opts.pivot_tol) {
          enter = j;
          break;
        }
      }
      if (enter >= 0)
        T.pivot(i, enter);
      else
        T.drop_row(i);
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_total);
  for (int j = 0; j < n; ++j) {
    cost[map[j].col_a] += prob.c[j] * map[j].coef_a;
    if (map[j].col_b >= 0) cost[map[j].col_b] += prob.c[j] * map[j].coef_b;
  }
  T.set_cost(cost);
  const auto outcome = T.run(first_art);
  sol.iterations = T.pivots();
  if (outcome == Tableau::Outcome::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_total);
  for (int i = 0; i < T.rows(); ++i) y[T.basis()[i]] = std::max(T.rhs(i), 0.0);
  sol.x.resize(n);
  for (int j = 0; j < n; ++j) {
    double v = map[j].offset + map[j].coef_a * y[map[j].col_a];
    if (map[j].col_b >= 0) v += map[j].coef_b * y[map[j].col_b];
    sol.x[j] = v;
  }
  sol.objective = prob.c.dot(sol.x);
  sol.status = LpStatus::Optimal;
  return sol;
}

double lp_primal_residual(const LpProblem& prob, const Eigen::VectorXd& z) {
  double r = 0.0;
  if (prob.A_eq.rows() > 0) r = std::max(r, (prob.A_eq * z - prob.b_eq).cwiseAbs().maxCoeff());
  if (prob.A_ub.rows() > 0) r = std::max(r, (prob.A_ub * z - prob.b_ub).cwiseMax(0.0).maxCoeff());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double lo = prob.lower.size() ? prob.lower[j] : 0.0;
    const double hi = prob.upper.size() ? prob.upper[j] : kInf;
    r = std::max({r, lo - z[j], z[j] - hi});
  }
  return r;
}

}  // namespace tlp
