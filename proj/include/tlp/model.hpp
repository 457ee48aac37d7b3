#ifndef TLP_MODEL_HPP
#define TLP_MODEL_HPP

#include <Eigen/Core>

#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tlp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Prices per traffic unit, rows are time slots and columns are locations.
/// Feasible prices satisfy 0 <= p(t,l) <= p0.
using PriceMatrix = Matrix;

enum class ErrorCode {
  InvalidScenario,
  InvalidOrigin,
  NonConcaveUtility,
  NonLinearUtility,
  NoSignChange,
  DomainError,
  MissingSchedule,
  LpInfeasible,
  LpUnbounded,
  NumericalStall,
  NonFinite,
  Incompatible,
  DimensionGuard,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Utilities

/// u(x) = k log(1 + x)
struct Logarithmic {
  double k = 1.0;
};

/// u(x) = rho x
struct Linear {
  double rho = 1.0;
};

/// Any strictly concave, increasing, smooth utility. The caller supplies u,
/// its derivative and the inverse of the derivative. The derivative maps
/// [0, inf) onto (marginal_infimum, marginal_at_zero]; marginal_at_zero may be
/// +inf when u'(0) is unbounded.
struct GeneralConcave {
  std::function<double(double)> value;
  std::function<double(double)> marginal;
  std::function<double(double)> marginal_inverse;
  double marginal_at_zero = std::numeric_limits<double>::infinity();
  double marginal_infimum = 0.0;
};

using UtilitySpec = std::variant<Logarithmic, Linear, GeneralConcave>;

double utility_value(const UtilitySpec& u, double x);
double marginal_utility(const UtilitySpec& u, double x);
std::string utility_kind(const UtilitySpec& u);

/// Wraps k log(1+x) as a GeneralConcave so the generic KKT scheduler can be
/// cross-checked against the closed form.
GeneralConcave as_general(const Logarithmic& u);

// ---------------------------------------------------------------------------
// Mobility

/// Local mobility profile beta(t',l'|t,l) for t' in (t, t+T-1] clipped at the
/// horizon. Indices are 0-based. Entries not set are zero.
class LocalMobility {
 public:
  LocalMobility() = default;
  LocalMobility(int T0, int L, int T);

  double operator()(int t, int l, int t_next, int l_next) const {
    return data_[index(t, l, t_next, l_next)];
  }
  double& at(int t, int l, int t_next, int l_next) {
    return data_[index(t, l, t_next, l_next)];
  }
  bool contains(int t, int l, int t_next, int l_next) const;

  int horizon() const { return T0_; }
  int locations() const { return L_; }
  int interval() const { return T_; }

  /// beta(t',l'|t,l) = 1/L for every admissible entry.
  static LocalMobility uniform(int T0, int L, int T);

 private:
  std::size_t index(int t, int l, int t_next, int l_next) const;

  int T0_ = 0;
  int L_ = 0;
  int T_ = 1;
  std::vector<double> data_;
};

struct UserType {
  UtilitySpec utility;
  double delta = 1.0;
  LocalMobility beta;
  Matrix x_ini;  // T0 x L
};

struct Scenario {
  int T0 = 1;
  int L = 1;
  int T = 1;
  double capacity = 0.0;
  double gamma = 1.0;
  double p0 = 1.0;
  Matrix alpha;  // T0 x L, rows sum to one
  std::vector<UserType> user_types;

  int num_types() const { return static_cast<int>(user_types.size()); }
  /// Last slot reachable from origin slot t (0-based, inclusive).
  int window_end(int t) const { return std::min(t + T - 1, T0 - 1); }
};

/// The set {(t,l)} U ({t+1..T_t} x {1..L}).
struct SchedulingWindow {
  int t = 0;
  int end = 0;
  int L = 1;

  int size() const { return 1 + (end - t) * L; }
};

SchedulingWindow scheduling_window(const Scenario& s, int t);

/// One entry of a scheduling window seen from a particular user type.
/// Index 0 is always the origin cell itself.
struct WindowCell {
  int t = 0;
  int l = 0;
  double weight = 1.0;    // 1 for the origin cell, beta(t',l'|t,l) otherwise
  double discount = 1.0;  // delta^(t'-t)
};

std::vector<WindowCell> window_cells(const Scenario& s, int type, int t, int l);

// ---------------------------------------------------------------------------
// Validation

inline constexpr double kProfileTolerance = 1e-9;
inline constexpr double kRenormalizeTolerance = 1e-6;

struct Violation {
  std::string path;
  std::string message;
};

std::vector<Violation> validate_scenario(const Scenario& s);

/// Rescales alpha and beta rows whose sums deviate from one by at most
/// kRenormalizeTolerance. Larger deviations are left for validation to flag.
void renormalize_profiles(Scenario& s);

/// Throws InvalidScenario listing every violation.
void require_valid(const Scenario& s);

/// Throws InvalidOrigin if (t,l) or the type index is out of range.
void check_origin(const Scenario& s, int type, int t, int l);

PriceMatrix flat_prices(const Scenario& s);
bool prices_feasible(const Scenario& s, const PriceMatrix& p, double tol = 0.0);

}  // namespace tlp

#endif
