#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "tlp/lp.hpp"
#include "tlp/model.hpp"

#include <cmath>
#include <limits>

using namespace tlp;
namespace tt = tlp::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LpProblem box_problem(int n) {
  LpProblem lp;
  lp.c = VectorXd::Zero(n);
  lp.A_eq = MatrixXd(0, n);
  lp.b_eq = VectorXd(0);
  lp.A_ub = MatrixXd(0, n);
  lp.b_ub = VectorXd(0);
  return lp;
}

}  // namespace

TEST_CASE("single bounded variable") {
  LpProblem lp = box_problem(1);
  lp.c << -1.0;
  lp.lower = VectorXd::Zero(1);
  lp.upper = VectorXd::Ones(1);
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.objective == doctest::Approx(-1.0));
}

TEST_CASE("equality forces the objective; Bland lands on the first vertex") {
  LpProblem lp = box_problem(2);
  lp.c << 1.0, 1.0;
  lp.A_eq = MatrixXd::Ones(1, 2);
  lp.b_eq = VectorXd::Constant(1, 2.0);
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0));
  CHECK(sol.x[0] == doctest::Approx(2.0));
  CHECK(sol.x[1] == doctest::Approx(0.0));
}

TEST_CASE("infeasible and unbounded problems") {
  LpProblem infeasible = box_problem(1);
  infeasible.c << 1.0;
  infeasible.A_ub = MatrixXd::Constant(1, 1, 1.0);
  infeasible.b_ub = VectorXd::Constant(1, -1.0);
  CHECK(solve_lp(infeasible).status == LpStatus::Infeasible);

  LpProblem unbounded = box_problem(2);
  unbounded.c << -1.0, 0.0;
  unbounded.A_ub = MatrixXd(1, 2);
  unbounded.A_ub << 0.0, 1.0;
  unbounded.b_ub = VectorXd::Constant(1, 1.0);
  CHECK(solve_lp(unbounded).status == LpStatus::Unbounded);
}

TEST_CASE("free and negative-range variables") {
  // min x - y with x free, -3 <= y <= -1, x >= y + 0.5 and x <= 4.
  LpProblem lp = box_problem(2);
  lp.c << 1.0, -1.0;
  lp.lower = VectorXd(2);
  lp.upper = VectorXd(2);
  lp.lower << -kInf, -3.0;
  lp.upper << kInf, -1.0;
  lp.A_ub = MatrixXd(2, 2);
  lp.A_ub << -1.0, 1.0, 1.0, 0.0;
  lp.b_ub = VectorXd(2);
  lp.b_ub << -0.5, 4.0;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.5));
  CHECK(lp_primal_residual(lp, sol.x) <= 1e-9);
}

TEST_CASE("malformed input is rejected") {
  LpProblem lp = box_problem(2);
  lp.c << 1.0, 1.0;
  lp.lower = VectorXd::Constant(2, 1.0);
  lp.upper = VectorXd::Constant(2, 0.0);
  try {
    solve_lp(lp);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidScenario);
  }
  LpProblem shape = box_problem(2);
  shape.A_ub = MatrixXd::Ones(1, 3);
  shape.b_ub = VectorXd::Ones(1);
  CHECK_THROWS_AS(solve_lp(shape), Error);
}

TEST_CASE("random bounded problems against vertex enumeration") {
  tt::Rng rng(31);
  for (int n = 0; n < 200; ++n) {
    const LpProblem lp = tt::random_bounded_lp(rng);
    const LpSolution sol = solve_lp(lp);
    const double ref = tt::vertex_enumeration_min(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(std::abs(sol.objective - ref) <= 1e-7);
    CHECK(lp_primal_residual(lp, sol.x) <= 1e-9);
    CHECK(std::abs(sol.objective - lp.c.dot(sol.x)) <= 1e-9);
  }
}

TEST_CASE("no sampled feasible point beats the optimum") {
  tt::Rng rng(32);
  int checked = 0;
  for (int n = 0; n < 100; ++n) {
    LpProblem lp = tt::random_bounded_lp(rng);
    lp.A_eq = MatrixXd(0, lp.num_vars());
    lp.b_eq = VectorXd(0);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    for (int k = 0; k < 200; ++k) {
      VectorXd z(lp.num_vars());
      for (int j = 0; j < lp.num_vars(); ++j) z[j] = tt::uniform(rng, lp.lower[j], lp.upper[j]);
      if (lp_primal_residual(lp, z) > 0.0) continue;
      ++checked;
      CHECK(lp.c.dot(z) >= sol.objective - 1e-7);
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("identical problems give identical answers") {
  tt::Rng rng(33);
  for (int n = 0; n < 20; ++n) {
    const LpProblem lp = tt::random_bounded_lp(rng);
    const LpSolution a = solve_lp(lp);
    const LpSolution b = solve_lp(lp);
    CHECK(a.iterations == b.iterations);
    CHECK(a.x == b.x);
  }
}
