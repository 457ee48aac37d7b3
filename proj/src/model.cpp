#include "tlp/model.hpp"

#include <cmath>
#include <sstream>

namespace tlp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidOrigin: return "InvalidOrigin";
    case ErrorCode::NonConcaveUtility: return "NonConcaveUtility";
    case ErrorCode::NonLinearUtility: return "NonLinearUtility";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::MissingSchedule: return "MissingSchedule";
    case ErrorCode::LpInfeasible: return "LpInfeasible";
    case ErrorCode::LpUnbounded: return "LpUnbounded";
    case ErrorCode::NumericalStall: return "NumericalStall";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Incompatible: return "Incompatible";
    case ErrorCode::DimensionGuard: return "DimensionGuard";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double utility_value(const UtilitySpec& u, double x) {
  return std::visit(
      overloaded{
          [x](const Logarithmic& v) { return v.k * std::log1p(x); },
          [x](const Linear& v) { return v.rho * x; },
          [x](const GeneralConcave& v) { return v.value(x); },
      },
      u);
}

double marginal_utility(const UtilitySpec& u, double x) {
  return std::visit(
      overloaded{
          [x](const Logarithmic& v) { return v.k / (1.0 + x); },
          [](const Linear& v) { return v.rho; },
          [x](const GeneralConcave& v) { return v.marginal(x); },
      },
      u);
}

std::string utility_kind(const UtilitySpec& u) {
  return std::visit(
      overloaded{
          [](const Logarithmic&) { return std::string("log"); },
          [](const Linear&) { return std::string("linear"); },
          [](const GeneralConcave&) { return std::string("general"); },
      },
      u);
}

GeneralConcave as_general(const Logarithmic& u) {
  const double k = u.k;
  GeneralConcave g;
  g.value = [k](double x) { return k * std::log1p(x); };
  g.marginal = [k](double x) { return k / (1.0 + x); };
  g.marginal_inverse = [k](double y) { return k / y - 1.0; };
  g.marginal_at_zero = k;
  g.marginal_infimum = 0.0;
  return g;
}

// ---------------------------------------------------------------------------

LocalMobility::LocalMobility(int T0, int L, int T) : T0_(T0), L_(L), T_(T) {
  const int span = std::max(T - 1, 0);
  data_.assign(static_cast<std::size_t>(T0) * L * span * L, 0.0);
}

bool LocalMobility::contains(int t, int l, int t_next, int l_next) const {
  return t >= 0 && t < T0_ && l >= 0 && l < L_ && l_next >= 0 && l_next < L_ &&
         t_next > t && t_next < T0_ && t_next - t <= T_ - 1;
}

std::size_t LocalMobility::index(int t, int l, int t_next, int l_next) const {
  const int d = t_next - t - 1;
  return ((static_cast<std::size_t>(t) * L_ + l) * (T_ - 1) + d) * L_ + l_next;
}

LocalMobility LocalMobility::uniform(int T0, int L, int T) {
  LocalMobility m(T0, L, T);
  for (int t = 0; t < T0; ++t)
    for (int l = 0; l < L; ++l)
      for (int tn = t + 1; tn <= std::min(t + T - 1, T0 - 1); ++tn)
        for (int ln = 0; ln < L; ++ln) m.at(t, l, tn, ln) = 1.0 / L;
  return m;
}

SchedulingWindow scheduling_window(const Scenario& s, int t) {
  return SchedulingWindow{t, s.window_end(t), s.L};
}

std::vector<WindowCell> window_cells(const Scenario& s, int type, int t, int l) {
  const UserType& u = s.user_types[type];
  const SchedulingWindow w = scheduling_window(s, t);
  std::vector<WindowCell> cells;
  cells.reserve(w.size());
  cells.push_back(WindowCell{t, l, 1.0, 1.0});
  double discount = 1.0;
  for (int tn = t + 1; tn <= w.end; ++tn) {
    discount *= u.delta;
    for (int ln = 0; ln < s.L; ++ln)
      cells.push_back(WindowCell{tn, ln, u.beta(t, l, tn, ln), discount});
  }
  return cells;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

bool finite_nonnegative(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i]) || m.data()[i] < 0.0) return false;
  return true;
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  auto add = [&out](std::string path, std::string msg) {
    out.push_back(Violation{std::move(path), std::move(msg)});
  };

  if (s.T0 < 1) add("T0", "must be at least 1");
  if (s.L < 1) add("L", "must be at least 1");
  if (s.T < 1 || s.T > s.T0) add("T", "must satisfy 1 <= T <= T0");
  if (!(s.capacity >= 0.0) || !std::isfinite(s.capacity)) add("C", "must be finite and >= 0");
  if (!(s.gamma > 0.0) || !std::isfinite(s.gamma)) add("gamma", "must be finite and > 0");
  if (!(s.p0 > 0.0) || !std::isfinite(s.p0)) add("p0", "must be finite and > 0");
  if (!out.empty()) return out;

  if (s.alpha.rows() != s.T0 || s.alpha.cols() != s.L) {
    add("alpha", "must be T0 x L");
  } else if (!finite_nonnegative(s.alpha)) {
    add("alpha", "entries must be finite and >= 0");
  } else {
    for (int t = 0; t < s.T0; ++t) {
      const double sum = s.alpha.row(t).sum();
      if (std::abs(sum - 1.0) > kProfileTolerance)
        add("alpha[" + std::to_string(t + 1) + "]",
            "row sums to " + fmt_double(sum) + ", expected 1");
    }
  }

  if (s.user_types.empty()) add("user_types", "at least one user type is required");

  for (int a = 0; a < s.num_types(); ++a) {
    const UserType& u = s.user_types[a];
    const std::string base = "user_types[" + std::to_string(a) + "]";

    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, Logarithmic>) {
            if (!(spec.k > 0.0) || !std::isfinite(spec.k))
              add(base + ".utility.k", "must be finite and > 0");
          } else if constexpr (std::is_same_v<T, Linear>) {
            if (!(spec.rho > 0.0) || !std::isfinite(spec.rho))
              add(base + ".utility.rho", "must be finite and > 0");
          } else {
            if (!spec.value || !spec.marginal || !spec.marginal_inverse)
              add(base + ".utility", "general utility needs value, marginal and inverse handles");
            else if (!(spec.marginal_at_zero > spec.marginal_infimum))
              add(base + ".utility", "marginal must be strictly decreasing on its domain");
          }
        },
        u.utility);

    if (!(u.delta >= 0.0 && u.delta <= 1.0))
      add(base + ".delta", "must lie in [0,1], got " + fmt_double(u.delta));

    if (u.x_ini.rows() != s.T0 || u.x_ini.cols() != s.L)
      add(base + ".x_ini", "must be T0 x L");
    else if (!finite_nonnegative(u.x_ini))
      add(base + ".x_ini", "entries must be finite and >= 0");

    if (u.beta.horizon() != s.T0 || u.beta.locations() != s.L || u.beta.interval() != s.T) {
      add(base + ".beta", "profile shape does not match (T0, L, T)");
      continue;
    }
    for (int t = 0; t < s.T0; ++t) {
      for (int l = 0; l < s.L; ++l) {
        for (int tn = t + 1; tn <= s.window_end(t); ++tn) {
          double sum = 0.0;
          bool ok = true;
          for (int ln = 0; ln < s.L; ++ln) {
            const double b = u.beta(t, l, tn, ln);
            if (!std::isfinite(b) || b < 0.0) ok = false;
            sum += b;
          }
          const std::string where = base + ".beta[t=" + std::to_string(t + 1) +
                                    ",l=" + std::to_string(l + 1) +
                                    ",t_next=" + std::to_string(tn + 1) + "]";
          if (!ok)
            add(where, "entries must be finite and >= 0");
          else if (std::abs(sum - 1.0) > kProfileTolerance)
            add(where, "row sums to " + fmt_double(sum) + ", expected 1");
        }
      }
    }
  }
  return out;
}

void renormalize_profiles(Scenario& s) {
  auto fix = [](double sum) {
    return std::abs(sum - 1.0) > 0.0 && std::abs(sum - 1.0) <= kRenormalizeTolerance;
  };
  if (s.alpha.rows() == s.T0 && s.alpha.cols() == s.L) {
    for (int t = 0; t < s.T0; ++t) {
      const double sum = s.alpha.row(t).sum();
      if (fix(sum)) s.alpha.row(t) /= sum;
    }
  }
  for (UserType& u : s.user_types) {
    if (u.beta.horizon() != s.T0 || u.beta.locations() != s.L || u.beta.interval() != s.T)
      continue;
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l)
        for (int tn = t + 1; tn <= s.window_end(t); ++tn) {
          double sum = 0.0;
          for (int ln = 0; ln < s.L; ++ln) sum += u.beta(t, l, tn, ln);
          if (fix(sum))
            for (int ln = 0; ln < s.L; ++ln) u.beta.at(t, l, tn, ln) /= sum;
        }
  }
}

void require_valid(const Scenario& s) {
  const auto v = validate_scenario(s);
  if (v.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& e : v) msg += "\n  " + e.path + ": " + e.message;
  throw Error(ErrorCode::InvalidScenario, msg);
}

void check_origin(const Scenario& s, int type, int t, int l) {
  if (type < 0 || type >= s.num_types() || t < 0 || t >= s.T0 || l < 0 || l >= s.L)
    throw Error(ErrorCode::InvalidOrigin,
                "origin (type=" + std::to_string(type) + ", t=" + std::to_string(t + 1) +
                    ", l=" + std::to_string(l + 1) + ") is out of range");
}

PriceMatrix flat_prices(const Scenario& s) {
  return PriceMatrix::Constant(s.T0, s.L, s.p0);
}

bool prices_feasible(const Scenario& s, const PriceMatrix& p, double tol) {
  if (p.rows() != s.T0 || p.cols() != s.L) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double v = p.data()[i];
    if (!std::isfinite(v) || v < -tol || v > s.p0 + tol) return false;
  }
  return true;
}

}  // namespace tlp
