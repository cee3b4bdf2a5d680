#pragma once

// Shape checks and domain helpers shared by validation and linearization.

#include <optional>
#include <string>

#include "ehub/hub_model.hpp"

namespace ehub {

/// Reason the curve cannot be anchored piecewise on [0, range]: it must pass
/// through the origin and be nondecreasing (hence nonnegative) there.
std::optional<std::string> curve_shape_issue(const Polynomial& curve, double range);

/// Smallest value of the derivative over [lo, hi].
double min_slope(const Polynomial& curve, double lo, double hi);

/// Input range of a polynomial converter: the declared input capacity, or the
/// largest input keeping every output within its declared output capacity.
std::optional<double> polynomial_input_range(const PolynomialCurves& curves, const Capacity& capacity);

/// Stored-energy rate while charging at `power`: eta_ch(p) * p.
inline double storage_charge_energy(const StorageCurves& s, double power) { return s.charge(power) * power; }

/// Internal draw while delivering `power`: p / eta_dis(p).
inline double storage_discharge_draw(const StorageCurves& s, double power) {
  return power == 0.0 ? 0.0 : power / s.discharge(power);
}

}  // namespace ehub
