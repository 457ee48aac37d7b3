#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "tlp/objective.hpp"

#include <cmath>

using namespace tlp;
namespace tt = tlp::testing;

TEST_CASE("two-slot example: loads and objective at the two probe prices") {
  const Scenario s = tt::appendix_b();
  const double eps = 0.01;
  PriceMatrix p1(2, 1), p2(2, 1);
  p1 << 1.0, 1.0 - eps;
  p2 << 1.0 - eps, 1.0;

  const Evaluation e1 = evaluate_H(s, p1);
  CHECK(e1.load.x_aft(0, 0) == 0.0);
  CHECK(e1.load.x_aft(1, 0) == 2.0);
  CHECK(std::abs(e1.H - (2 * eps - 1.0)) <= 1e-12);

  const Evaluation e2 = evaluate_H(s, p2);
  CHECK(e2.load.x_aft(0, 0) == 1.0);
  CHECK(e2.load.x_aft(1, 0) == 1.0);
  CHECK(std::abs(e2.H - (eps - 2.0)) <= 1e-12);
}

TEST_CASE("operator-preferred resolution of a tie") {
  const Scenario s = tt::appendix_b();
  const PriceMatrix p = flat_prices(s);
  CHECK(evaluate_H(s, p, TieBreak::OperatorPreferred).H == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(evaluate_H(s, p, TieBreak::Lexicographic).H == doctest::Approx(-2.0).epsilon(1e-12));
  // Splitting puts 1.5 in slot 2, over capacity.
  CHECK(evaluate_H(s, p, TieBreak::SplitUniform).H == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("operator-preferred is never worse than any pure tie choice") {
  tt::Rng rng(21);
  for (int n = 0; n < 30; ++n) {
    const Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
    // Coarse prices make ties common.
    PriceMatrix p = tt::random_prices(rng, s);
    p = (p.array() * 4.0).round() / 4.0;
    const double op = evaluate_H(s, p, TieBreak::OperatorPreferred).H;
    const double lex = evaluate_H(s, p, TieBreak::Lexicographic).H;
    CHECK(op <= tt::reference_linear_H(s, p) + 1e-9);
    CHECK(op <= lex + 1e-9);
  }
}

TEST_CASE("log objective agrees with the reference computation") {
  tt::Rng rng(22);
  tt::InstanceShape shape;
  shape.types = 2;
  shape.zero_demand_prob = 0.1;
  for (int n = 0; n < 30; ++n) {
    const Scenario s = tt::random_scenario(rng, tt::Kind::Log, shape);
    const PriceMatrix p = tt::random_prices(rng, s);
    const Evaluation e = evaluate_H(s, p);
    const Matrix ref = tt::reference_log_load(s, p);
    CHECK((e.load.x_aft - ref).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(e.H - tt::reference_log_H(s, p)) <= 1e-8);
    CHECK(e.load.total() == doctest::Approx(initial_load(s).sum()).epsilon(1e-9));
    CHECK((e.load.x_aft.array() >= 0.0).all());
  }
}

TEST_CASE("discounted flat pricing leaves the load untouched") {
  tt::Rng rng(23);
  for (int n = 0; n < 10; ++n) {
    Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
    s.user_types[0].delta = std::min(s.user_types[0].delta, 0.99);
    const PriceMatrix p = flat_prices(s);
    const Evaluation e = evaluate_H(s, p);
    CHECK(e.load.x_aft.isApprox(initial_load(s)));
    double expect = 0.0;
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) {
        const double x = initial_load(s)(t, l);
        expect += s.alpha(t, l) * (s.gamma * std::max(x - s.capacity, 0.0) - s.p0 * x);
      }
    CHECK(e.H == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("aggregation needs every positive-demand origin") {
  const Scenario s = tt::appendix_b();
  ScheduleSet partial(s);
  partial.set(schedule_linear(s, 0, 0, 0, flat_prices(s)));
  try {
    aggregate_load(s, partial);
    FAIL("expected MissingSchedule");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSchedule);
  }
}

TEST_CASE("prices outside the box are rejected") {
  const Scenario s = tt::appendix_b();
  PriceMatrix p = flat_prices(s);
  p(1, 0) = 1.2;
  try {
    evaluate_H(s, p);
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
}

TEST_CASE("metrics") {
  Matrix load(2, 2);
  load << 1.0, 3.0, 0.0, 4.0;
  CHECK(excess_cost(3.0, 1.0, 2.5) == 5.0);
  CHECK(excess_cost(0.5, 1.0, 2.5) == 0.0);
  CHECK(excess_demand(load, 2.0) == 3.0);
  CHECK(traffic_variance(load) == doctest::Approx(2.5));

  const Scenario s = tt::appendix_b();
  PriceMatrix p(2, 1);
  p << 0.5, 1.0;
  CHECK(average_discount(s, p) == doctest::Approx(0.25));
  CHECK(average_discount(s, flat_prices(s)) == 0.0);
}

TEST_CASE("cost breakdown adds up to the objective plus flat revenue") {
  tt::Rng rng(24);
  const Scenario s = tt::random_scenario(rng, tt::Kind::Log);
  const PriceMatrix p = tt::random_prices(rng, s);
  const Evaluation e = evaluate_H(s, p);
  const CostBreakdown c = cost_breakdown(s, p, e.load);
  double revenue_at_p0 = 0.0;
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) revenue_at_p0 += s.alpha(t, l) * s.p0 * e.load.x_aft(t, l);
  CHECK(c.total() - revenue_at_p0 == doctest::Approx(e.H).epsilon(1e-12));
  CHECK(c.discount_loss >= 0.0);
}

TEST_CASE("report re-evaluates its own prices") {
  tt::Rng rng(25);
  const Scenario s = tt::random_scenario(rng, tt::Kind::Log);
  const PriceMatrix p = tt::random_prices(rng, s);
  const SolveReport r = build_report(s, p, TieBreak::Lexicographic, "probe");
  CHECK(r.solver == "probe");
  CHECK(std::abs(r.objective - evaluate_H(s, p).H) <= 1e-12);
  CHECK(r.metrics.average_discount == doctest::Approx(average_discount(s, p)));
  CHECK(r.load.rows() == s.T0);
}
