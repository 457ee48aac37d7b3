#include "tlp/pricing_mode.hpp"

namespace tlp {

const char* to_string(PricingMode m) {
  switch (m) {
    case PricingMode::TimeLocation: return "time-location";
    case PricingMode::TimeOnly: return "time-only";
    case PricingMode::Flat: return "flat";
  }
  return "unknown";
}

PricingMode parse_pricing_mode(const std::string& name) {
  if (name == "time-location") return PricingMode::TimeLocation;
  if (name == "time-only") return PricingMode::TimeOnly;
  if (name == "flat") return PricingMode::Flat;
  throw Error(ErrorCode::Incompatible,
              "unknown pricing mode '" + name + "' (expected time-location, time-only or flat)");
}

int decision_dim(const Scenario& s, PricingMode m) {
  switch (m) {
    case PricingMode::TimeLocation: return s.T0 * s.L;
    case PricingMode::TimeOnly: return s.T0;
    case PricingMode::Flat: return 0;
  }
  return 0;
}

PriceMatrix expand_prices(const Scenario& s, PricingMode m, const Vector& z) {
  PriceMatrix p(s.T0, s.L);
  for (int t = 0; t < s.T0; ++t)
    for (int l = 0; l < s.L; ++l) {
      switch (m) {
        case PricingMode::TimeLocation: p(t, l) = z[t * s.L + l]; break;
        case PricingMode::TimeOnly: p(t, l) = z[t]; break;
        case PricingMode::Flat: p(t, l) = s.p0; break;
      }
    }
  return p;
}

Vector restrict_prices(const Scenario& s, PricingMode m, const PriceMatrix& p) {
  Vector z(decision_dim(s, m));
  if (m == PricingMode::TimeLocation) {
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) z[t * s.L + l] = p(t, l);
  } else if (m == PricingMode::TimeOnly) {
    for (int t = 0; t < s.T0; ++t) z[t] = p.row(t).mean();
  }
  return z;
}

Vector pullback_gradient(const Scenario& s, PricingMode m, const Matrix& grad) {
  Vector g = Vector::Zero(decision_dim(s, m));
  if (m == PricingMode::TimeLocation) {
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l) g[t * s.L + l] = grad(t, l);
  } else if (m == PricingMode::TimeOnly) {
    for (int t = 0; t < s.T0; ++t) g[t] = grad.row(t).sum();
  }
  return g;
}

}  // namespace tlp
