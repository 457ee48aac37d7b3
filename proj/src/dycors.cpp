#include "tlp/dycors.hpp"

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace tlp {

DycorsConfig resolve_defaults(DycorsConfig c, int d) {
  if (c.n0 <= 0) c.n0 = 2 * (d + 1);
  if (c.m <= 0) c.m = std::min(100 * d, 1000);
  if (c.phi0 <= 0.0) c.phi0 = std::min(20.0 / d, 1.0);
  return c;
}

void validate_config(const DycorsConfig& c, int d) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidScenario, "DYCORS config: " + m); };
  if (d < 1) bad("decision dimension must be >= 1");
  if (c.n0 < d + 1) bad("need n0 >= dimension + 1");
  if (c.m < 1) bad("need m >= 1");
  // n0 design points plus the flat point, then at least one iteration.
  if (c.max_evals < c.n0 + 2) bad("budget must allow the initial design, the flat point and one iteration");
  if (!(c.phi0 > 0.0 && c.phi0 <= 1.0)) bad("need phi0 in (0, 1]");
  if (!(c.sigma0 > 0.0)) bad("need sigma0 > 0");
  if (!(c.sigma_min > 0.0 && c.sigma_min <= c.sigma0)) bad("need 0 < sigma_min <= sigma0");
  if (c.fail_tol < 1 || c.succ_tol < 1) bad("failure and success thresholds must be >= 1");
}

double RbfSurrogate::operator()(const Eigen::VectorXd& x) const {
  double v = tail[0] + tail.tail(tail.size() - 1).dot(x);
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    const double r = (centers.row(i).transpose() - x).norm();
    v += weights[i] * r * r * r;
  }
  return v;
}

RbfSurrogate rbf_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (values.size() != n) throw Error(ErrorCode::InvalidScenario, "rbf_fit: one value per point");
  if (n < d + 1) throw Error(ErrorCode::InvalidScenario, "rbf_fit: need at least dimension + 1 points");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + d + 1, n + d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = (points.row(i) - points.row(j)).norm();
      A(i, j) = A(j, i) = r * r * r;
    }
    A(i, n) = A(n, i) = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) A(i, n + 1 + k) = A(n + 1 + k, i) = points(i, k);
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + d + 1);
  rhs.head(n) = values;

  auto good = [&](const Eigen::MatrixXd& M, const Eigen::VectorXd& sol) {
    return sol.allFinite() && (M * sol - rhs).norm() <= 1e-9 * (1.0 + rhs.norm());
  };

  RbfSurrogate out;
  out.centers = points;
  Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
  if (!good(A, sol)) {
    out.regularized = true;
    A.topLeftCorner(n, n).diagonal().array() += 1e-10;
    sol = A.partialPivLu().solve(rhs);
    // Affinely dependent centers leave the tail block singular; fall back to
    // the minimum-norm least-squares solution.
    if (!good(A, sol)) sol = A.completeOrthogonalDecomposition().solve(rhs);
  }
  out.weights = sol.head(n);
  out.tail = sol.tail(d + 1);
  return out;
}

Eigen::MatrixXd symmetric_latin_hypercube(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw Error(ErrorCode::InvalidScenario, "latin hypercube needs n, d >= 1");
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd X(n, d);
  const int half = n / 2;
  std::vector<int> pairs(static_cast<std::size_t>(half));
  std::bernoulli_distribution flip(0.5);
  for (int j = 0; j < d; ++j) {
    std::iota(pairs.begin(), pairs.end(), 0);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (int i = 0; i < half; ++i) {
      // Stratum k and its mirror n-1-k.
      int k = pairs[static_cast<std::size_t>(i)];
      if (flip(rng)) k = n - 1 - k;
      X(i, j) = (k + 0.5) / n;
      X(n - 1 - i, j) = 1.0 - X(i, j);
    }
    if (n % 2 == 1) X(half, j) = 0.5;
  }
  return X;
}

namespace {

bool affinely_spanning(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd P(X.rows(), X.cols() + 1);
  P.col(0).setOnes();
  P.rightCols(X.cols()) = X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(P);
  lu.setThreshold(1e-10);
  return lu.rank() == X.cols() + 1;
}

}  // namespace

SolveReport dycors_solve(const Scenario& s, const DycorsConfig& config, PricingMode mode) {
  const auto started = std::chrono::steady_clock::now();
  require_valid(s);
  if (mode == PricingMode::Flat) {
    SolveReport r = build_report(s, flat_prices(s), config.tie_break, "dycors");
    r.mode = to_string(mode);
    r.seed = config.seed;
    r.trace = {r.objective};
    r.evaluations = 1;
    return r;
  }

  const int d = decision_dim(s, mode);
  const DycorsConfig c = resolve_defaults(config, d);
  validate_config(c, d);

  std::mt19937_64 rng(c.seed);
  Eigen::MatrixXd X(c.max_evals, d);
  Eigen::VectorXd F(c.max_evals);
  int n = 0;
  int best = 0;
  auto evaluate = [&](const Eigen::VectorXd& z) {
    X.row(n) = z.transpose();
    F[n] = evaluate_H(s, expand_prices(s, mode, z), c.tie_break).H;
    if (F[n] < F[best]) best = n;
    return F[n++];
  };

  evaluate(Eigen::VectorXd::Constant(d, s.p0));
  Eigen::MatrixXd design;
  for (int attempt = 0; attempt < 100; ++attempt) {
    design = s.p0 * symmetric_latin_hypercube(c.n0, d, rng());
    Eigen::MatrixXd all(c.n0 + 1, d);
    all.row(0) = X.row(0);
    all.bottomRows(c.n0) = design;
    if (affinely_spanning(all)) break;
  }
  for (int i = 0; i < c.n0; ++i) evaluate(design.row(i).transpose());
  const int n_init = n;

  constexpr std::array<double, 4> kWeights = {0.3, 0.5, 0.8, 0.95};
  const double dup_tol = 1e-9 * s.p0;
  double sigma = c.sigma0 * s.p0;
  int fails = 0;
  int successes = 0;
  int regularized = 0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, d - 1);
  const double log_span = std::log(static_cast<double>(c.max_evals - n_init));

  for (int iter = 0; n < c.max_evals; ++iter) {
    const RbfSurrogate sur = rbf_fit(X.topRows(n), F.head(n));
    if (sur.regularized) ++regularized;

    double phi = c.phi0;
    if (log_span > 0.0) phi *= 1.0 - std::log(static_cast<double>(n - n_init + 1)) / log_span;
    phi = std::max(phi, 0.0);

    const Eigen::VectorXd incumbent = X.row(best).transpose();
    std::vector<Eigen::VectorXd> cand;
    std::vector<double> sval, dist;
    cand.reserve(static_cast<std::size_t>(c.m));
    for (int k = 0; k < c.m; ++k) {
      Eigen::VectorXd y = incumbent;
      bool any = false;
      for (int j = 0; j < d; ++j)
        if (unif(rng) < phi) {
          y[j] += sigma * gauss(rng);
          any = true;
        }
      if (!any) y[pick(rng)] += sigma * gauss(rng);
      y = y.cwiseMax(0.0).cwiseMin(s.p0);
      const double dmin = (X.topRows(n).rowwise() - y.transpose()).rowwise().norm().minCoeff();
      if (dmin <= dup_tol) continue;
      cand.push_back(y);
      sval.push_back(sur(y));
      dist.push_back(dmin);
    }
    if (cand.empty()) {
      // Every trial coincided with an evaluated point; shrink and retry.
      sigma = std::max(0.5 * sigma, c.sigma_min * s.p0);
      fails = successes = 0;
      if (iter > 100 * c.max_evals) break;
      continue;
    }

    const double w = kWeights[static_cast<std::size_t>(iter) % kWeights.size()];
    const auto [smin, smax] = std::minmax_element(sval.begin(), sval.end());
    const auto [dmin, dmax] = std::minmax_element(dist.begin(), dist.end());
    std::size_t choice = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cand.size(); ++k) {
      const double vs = *smax > *smin ? (sval[k] - *smin) / (*smax - *smin) : 1.0;
      const double vd = *dmax > *dmin ? (*dmax - dist[k]) / (*dmax - *dmin) : 1.0;
      const double score = w * vs + (1.0 - w) * vd;
      if (score < best_score) {
        best_score = score;
        choice = k;
      }
    }

    const double before = F[best];
    const double f = evaluate(cand[choice]);
    if (f < before - 1e-3 * std::abs(before)) {
      ++successes;
      fails = 0;
    } else {
      ++fails;
      successes = 0;
    }
    if (fails >= c.fail_tol) {
      sigma = std::max(0.5 * sigma, c.sigma_min * s.p0);
      fails = 0;
    }
    if (successes >= c.succ_tol) {
      sigma = std::min(2.0 * sigma, s.p0);
      successes = 0;
    }
  }

  SolveReport r = build_report(s, expand_prices(s, mode, X.row(best).transpose()), c.tie_break, "dycors");
  r.mode = to_string(mode);
  r.seed = c.seed;
  r.trace.assign(F.data(), F.data() + n);
  r.evaluations = n;
  r.diagnostics["best_index"] = best;
  r.diagnostics["regularized_fits"] = regularized;
  r.diagnostics["n0"] = c.n0;
  r.diagnostics["m"] = c.m;
  r.diagnostics["phi0"] = c.phi0;
  r.diagnostics["final_sigma"] = sigma;
  bool linear = false;
  for (const auto& u : s.user_types) linear = linear || std::holds_alternative<Linear>(u.utility);
  r.diagnostics["discontinuous_objective"] = linear ? 1.0 : 0.0;
  if (linear)
    r.notes.push_back("linear utilities make H discontinuous; convergence guarantee does not apply");
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

}  // namespace tlp
