#pragma once

// Independent references for testing the pipeline: exact curve evaluation,
// approximation-error measurement, exhaustive MILP enumeration over a
// separate dense simplex, the fine-segment reference dispatch and the
// direct constant-efficiency dispatch LP.

#include <optional>
#include <string>
#include <vector>

#include "ehub/dispatch.hpp"

namespace ehub {

/// Output at `port` for input v_in, evaluated from the spec itself.
/// Throws std::domain_error outside the input range.
double eval_true_curve(const ComponentSpec& spec, double v_in, const std::string& port);

/// Stored-energy rate while charging (`charging`) or internal draw while
/// discharging at `power`.
double eval_true_storage(const StorageCurves& spec, double power, bool charging);

/// Input of a quadratic converter for outputs (p, q).
double eval_true_curve(const BivariateQuadratic& q, double p, double q_value);

struct CurveError {
  std::string component;
  std::string curve;  // curve kind and the port it maps to
  double max_abs = 0;
  double mean_abs = 0;
};

struct ErrorReport {
  std::vector<CurveError> curves;
  std::optional<double> cost;
  std::optional<double> reference_cost;
  std::optional<double> relative_error_percent;  // |cost - ref| / ref * 100
};

/// Offset-free exact value of one linearized curve at x.
double true_curve_value(const LinearizedComponent& lc, const LinearizedCurve& curve, double x);

/// Max and mean |pwl - exact| on `grid_points` uniform points per curve.
ErrorReport approximation_error(const LinearizedComponent& lc, int grid_points = 1000);

inline constexpr int kReferenceSegments = 300;

/// Rebuilds the dispatch at `segments` uniform segments per component and
/// solves it to a 1e-6 relative gap; returns the optimal cost.
double reference_dispatch(const HubTopology& hub, const SeriesData& series, std::size_t periods,
                          const DispatchOptions& options = {}, int segments = kReferenceSegments);

struct EnumerationResult {
  bool feasible = false;
  double objective = 0;
  std::vector<double> values;
  long lps_solved = 0;
};

/// Solves every 0/1 assignment of the integer variables with a dense
/// tableau simplex and keeps the best. At most 20 integer variables.
EnumerationResult brute_force_milp(const MilpModel& model);

struct DenseLpResult {
  bool feasible = false;
  bool unbounded = false;
  double objective = 0;
  std::vector<double> x;
};

/// Dense two-phase bounded-variable tableau simplex with Bland's rule.
DenseLpResult dense_simplex(const MilpModel& model);

/// Dispatch LP of an all-constant hub written straight from the node
/// equations, without the matrix pipeline. Storage is not supported.
MilpModel constant_dispatch_lp(const HubTopology& hub, const SeriesData& series, std::size_t periods,
                               double dt_hours = 1.0);

}  // namespace ehub
