#ifndef TLP_DYCORS_HPP
#define TLP_DYCORS_HPP

#include "tlp/model.hpp"
#include "tlp/objective.hpp"
#include "tlp/pricing_mode.hpp"

#include <cstdint>

namespace tlp {

/// Zero for n0, m or phi0 selects the dimension-dependent default:
/// n0 = 2 (d + 1), m = min(100 d, 1000), phi0 = min(20 / d, 1).
struct DycorsConfig {
  int n0 = 0;
  int m = 0;
  int max_evals = 300;  // total budget, initial design and flat point included
  double phi0 = 0.0;
  double sigma0 = 0.2;  // fraction of p0
  double sigma_min = 1e-5;  // fraction of p0
  int fail_tol = 3;
  int succ_tol = 3;
  std::uint64_t seed = 0;
  TieBreak tie_break = TieBreak::Lexicographic;
};

/// Fills the zero defaults for dimension d.
DycorsConfig resolve_defaults(DycorsConfig c, int d);
/// Throws InvalidScenario on a resolved config that breaks its invariants.
void validate_config(const DycorsConfig& c, int d);

/// Cubic radial basis interpolant with a linear tail:
/// s(x) = sum_i w_i |x - c_i|^3 + b_0 + b' x.
struct RbfSurrogate {
  Eigen::MatrixXd centers;  // one center per row
  Eigen::VectorXd weights;
  Eigen::VectorXd tail;     // b_0 then b
  bool regularized = false;

  double operator()(const Eigen::VectorXd& x) const;
};

/// Interpolates (points.row(i), values[i]). A singular system is refitted
/// with 1e-10 added to the kernel diagonal and the result is flagged.
RbfSurrogate rbf_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values);

/// n points in [0,1]^d, one per stratum in every coordinate, with point i
/// mirrored by point n-1-i through the cube center.
Eigen::MatrixXd symmetric_latin_hypercube(int n, int d, std::uint64_t seed);

/// Surrogate search over the price box. The trace holds every evaluated H
/// in order; the flat point is always the first evaluation.
///
/// Diagnostics: best_index, regularized_fits, n0, m, phi0, final_sigma,
/// discontinuous_objective (1 when any utility is linear).
SolveReport dycors_solve(const Scenario& s, const DycorsConfig& config = {},
                         PricingMode mode = PricingMode::TimeLocation);

}  // namespace tlp

#endif
