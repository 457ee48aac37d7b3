#ifndef TLP_PRICING_MODE_HPP
#define TLP_PRICING_MODE_HPP

#include "tlp/model.hpp"

#include <string>

namespace tlp {

/// How a solver's decision vector maps onto the T0 x L price matrix.
///  - TimeLocation: one price per (t,l), t-major, l-minor.
///  - TimeOnly: one price per slot, shared by every location.
///  - Flat: no decision; every price is p0.
enum class PricingMode { TimeLocation, TimeOnly, Flat };

const char* to_string(PricingMode m);
/// Accepts "time-location", "time-only" and "flat".
PricingMode parse_pricing_mode(const std::string& name);

int decision_dim(const Scenario& s, PricingMode m);
PriceMatrix expand_prices(const Scenario& s, PricingMode m, const Vector& z);
/// Inverse of expand_prices on its image; time-only averages each row.
Vector restrict_prices(const Scenario& s, PricingMode m, const PriceMatrix& p);
/// Chain rule for expand_prices: maps dH/dp onto dH/dz.
Vector pullback_gradient(const Scenario& s, PricingMode m, const Matrix& grad);

}  // namespace tlp

#endif
