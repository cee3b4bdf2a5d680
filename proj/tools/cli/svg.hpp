#pragma once

#include <string>
#include <vector>

namespace ehub::cli {

struct SweepPoint {
  int segments = 0;
  double cost = 0;
  double relative_error = 0;  // percent
  double wall_time = 0;       // seconds
};

/// Relative error (log axis, left) and solve time (linear axis, right)
/// against the segment count.
std::string sweep_svg(const std::vector<SweepPoint>& points);

}  // namespace ehub::cli
