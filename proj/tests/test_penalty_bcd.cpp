#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "tlp/penalty_bcd.hpp"

#include <cmath>

using namespace tlp;
namespace tt = tlp::testing;

namespace {

// Linear-utility optimality of every schedule in the state, checked from the
// definitions: dual feasibility, nonnegativity, conservation, and the summed
// complementarity products.
struct Certificate {
  double worst = 0.0;
  double products = 0.0;
};

Certificate certify(const Scenario& s, const PenaltyState& st) {
  Certificate c;
  st.schedules.for_each([&](const Schedule& x) {
    const double rho = std::get<Linear>(s.user_types[x.type].utility).rho;
    const auto cells = tt::reachable(s, x.type, x.t, x.l);
    double conserved = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& r = cells[i];
      c.worst = std::max(c.worst, -x.amounts[i]);
      if (r.beta <= 0.0) continue;
      const double slack = st.p(r.t, r.l) + *x.lambda - r.discount * rho;
      c.worst = std::max(c.worst, -slack);
      c.products += r.beta * x.amounts[i] * std::max(slack, 0.0);
      conserved += r.beta * x.amounts[i];
    }
    c.worst = std::max(c.worst, std::abs(conserved - s.user_types[x.type].x_ini(x.t, x.l)));
  });
  return c;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("initial state is feasible with zero residual at flat prices") {
  tt::Rng rng(51);
  const Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
  const PenaltyState st = initial_penalty_state(s, 1.0);
  CHECK(st.p == flat_prices(s));
  CHECK(st.load.isApprox(initial_load(s)));
  const Certificate c = certify(s, st);
  CHECK(c.worst <= 1e-12);
  CHECK(st.residual == doctest::Approx(c.products).epsilon(1e-12));
  CHECK(st.residual == doctest::Approx(complementarity_residual(s, st.p, st.schedules)));
  CHECK(st.penalty_objective ==
        doctest::Approx(penalty_objective(s, st.p, st.schedules, 1.0)).epsilon(1e-12));
}

TEST_CASE("first price block never raises the penalty objective") {
  tt::Rng rng(52);
  for (int n = 0; n < 10; ++n) {
    Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
    s.user_types[0].delta = std::min(s.user_types[0].delta, 0.99);
    const BcdRun run = bcd_iterate(s, initial_penalty_state(s, default_tau0(s)), 1e-6, 1);
    REQUIRE(run.penalty_trace.size() >= 2);
    CHECK(run.penalty_trace[1] <= run.penalty_trace[0]);
  }
}

TEST_CASE("penalty objective is nonincreasing on random instances") {
  tt::Rng rng(53);
  for (int n = 0; n < 20; ++n) {
    const Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
    PenaltyState st = initial_penalty_state(s, default_tau0(s));
    for (int e = 0; e < 3; ++e) {
      const BcdRun run = bcd_iterate(s, st);
      CHECK(nonincreasing(run.penalty_trace));
      CHECK(prices_feasible(s, run.state.p, 1e-9));
      CHECK(certify(s, run.state).worst <= 1e-6);
      st = run.state;
      st.tau *= 10.0;
    }
  }
}

TEST_CASE("two-slot example reaches the grid optimum") {
  const Scenario s = tt::appendix_b();
  PenaltyConfig cfg;
  cfg.tau0 = 10.0 * s.gamma;
  const SolveReport r = penalty_escalate(s, cfg);
  CHECK(r.diagnostics.at("tolerance_met") == 1.0);
  CHECK(r.diagnostics.at("residual") <= 1e-6);
  CHECK(r.diagnostics.at("escalations") <= 1.0);
  CHECK(std::abs(r.objective - (-2.0)) <= 1e-6);
  CHECK(r.diagnostics.at("monotonicity_violations") == 0.0);
}

TEST_CASE("no-shift optimum needs no escalation") {
  Scenario s = tt::appendix_b(1.0, 0.5);
  s.capacity = 10.0;
  const SolveReport r = penalty_escalate(s);
  CHECK(r.diagnostics.at("escalations") == 0.0);
  CHECK(r.diagnostics.at("residual") == 0.0);
  CHECK(r.best_prices == flat_prices(s));
}

TEST_CASE("escalated solutions are certified user responses") {
  tt::Rng rng(54);
  for (int n = 0; n < 10; ++n) {
    const Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
    PenaltyState st = initial_penalty_state(s, default_tau0(s));
    BcdRun run;
    for (int e = 0; e <= 6; ++e) {
      run = bcd_iterate(s, st);
      if (run.state.residual <= 1e-6) break;
      st = run.state;
      st.tau *= 10.0;
    }
    if (run.state.residual > 1e-6) continue;
    const Certificate c = certify(s, run.state);
    CHECK(c.worst <= 1e-6);
    CHECK(c.products <= 1e-6);
  }
}

TEST_CASE("reported prices are feasible and never worse than flat") {
  tt::Rng rng(55);
  for (int n = 0; n < 10; ++n) {
    const Scenario s = tt::random_scenario(rng, tt::Kind::Linear);
    const SolveReport r = penalty_escalate(s);
    CHECK(prices_feasible(s, r.best_prices));
    CHECK(r.objective <= evaluate_H(s, flat_prices(s), TieBreak::OperatorPreferred).H + 1e-12);
    CHECK(r.tie_break == TieBreak::OperatorPreferred);
  }
}

TEST_CASE("input checks") {
  const Scenario lg = tt::log_toy();
  try {
    penalty_escalate(lg);
    FAIL("expected Incompatible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Incompatible);
  }
  const Scenario s = tt::appendix_b();
  PenaltyConfig cfg;
  cfg.factor = 1.0;
  CHECK_THROWS_AS(penalty_escalate(s, cfg), Error);
  CHECK_THROWS_AS(bcd_iterate(s, initial_penalty_state(s, 0.0)), Error);
}
