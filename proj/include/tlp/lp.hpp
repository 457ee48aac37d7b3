#ifndef TLP_LP_HPP
#define TLP_LP_HPP

#include <Eigen/Core>

namespace tlp {

/// minimize c'z  subject to  A_eq z = b_eq,  A_ub z <= b_ub,  lower <= z <= upper.
///
/// Bounds may be +-infinity. Empty bound vectors mean z >= 0. Empty
/// constraint blocks are allowed (zero rows, matching column count).
struct LpProblem {
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_ub;
  Eigen::VectorXd b_ub;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int num_vars() const { return static_cast<int>(c.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  long iterations = 0;
};

struct LpOptions {
  double pivot_tol = 1e-10;
  double feasibility_tol = 1e-9;
  long max_pivots = 1'000'000;
};

/// Two-phase primal simplex on a dense tableau with Bland's rule throughout.
/// Throws Error(InvalidScenario) on malformed input and Error(NumericalStall)
/// when the pivot budget is exhausted.
LpSolution solve_lp(const LpProblem& prob, const LpOptions& opts = {});

/// max(|A_eq z - b_eq|, max(A_ub z - b_ub, 0), bound violations).
double lp_primal_residual(const LpProblem& prob, const Eigen::VectorXd& z);

}  // namespace tlp

#endif
