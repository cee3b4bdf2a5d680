#include "ehub/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ehub {

double min_slope(const Polynomial& curve, double lo, double hi) {
  const Polynomial slope = curve.derivative();
  double best = std::min(slope(lo), slope(hi));
  // Critical points of the slope, exact for slopes up to quadratic.
  const Polynomial curvature = slope.derivative();
  const auto& c = curvature.coefficients();
  std::vector<double> candidates;
  if (curvature.degree() == 1 && c[1] != 0.0) {
    candidates.push_back(-c[0] / c[1]);
  } else if (curvature.degree() == 2) {
    const double disc = c[1] * c[1] - 4.0 * c[2] * c[0];
    if (disc >= 0.0) {
      candidates.push_back((-c[1] + std::sqrt(disc)) / (2.0 * c[2]));
      candidates.push_back((-c[1] - std::sqrt(disc)) / (2.0 * c[2]));
    }
  } else if (curvature.degree() > 2) {
    constexpr int kGrid = 4000;
    for (int i = 1; i < kGrid; ++i) candidates.push_back(lo + (hi - lo) * i / kGrid);
  }
  for (double x : candidates)
    if (x > lo && x < hi) best = std::min(best, slope(x));
  return best;
}

std::optional<std::string> curve_shape_issue(const Polynomial& curve, double range) {
  if (!(range > 0.0) || !std::isfinite(range)) return "domain upper bound must be positive";
  const double at_zero = curve(0.0);
  if (std::abs(at_zero) > 1e-12) return "curve must pass through the origin";
  const double scale = std::max(1.0, std::abs(curve(range)) / range);
  if (min_slope(curve, 0.0, range) < -1e-12 * scale) return "curve decreases on its domain";
  return std::nullopt;
}

std::optional<double> polynomial_input_range(const PolynomialCurves& curves, const Capacity& capacity) {
  if (capacity.input) return *capacity.input;
  std::optional<double> range;
  for (const auto& [port, poly] : curves.outputs) {
    auto cap = capacity.outputs.find(port);
    if (cap == capacity.outputs.end() || !(cap->second > 0.0)) continue;
    double hi = 1.0;
    int guard = 0;
    while (poly(hi) < cap->second && guard++ < 200) hi *= 2.0;
    if (poly(hi) < cap->second) continue;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (poly(mid) < cap->second ? lo : hi) = mid;
    }
    const double x = 0.5 * (lo + hi);
    range = range ? std::min(*range, x) : x;
  }
  return range;
}

}  // namespace ehub
