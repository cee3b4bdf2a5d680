#pragma once

// Piecewise linearization of nonlinear component specs into parallel
// constant-efficiency processes over segment-bounded secondary branches.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehub/hub_model.hpp"

namespace ehub {

struct Segmentation {
  std::vector<double> breakpoints;  // s+1 values from 0 to the range
  std::vector<double> widths;       // s positive widths

  int count() const noexcept { return static_cast<int>(widths.size()); }
  double range() const { return breakpoints.back(); }
};

Segmentation segment_domain(double range, int segments);
Segmentation segment_domain(double range, std::span<const double> widths);

/// Chord slopes of `curve` over each segment. Throws when the curve is
/// negative or decreasing on the segmentation.
std::vector<double> secant_efficiencies(const std::function<double(double)>& curve, const Segmentation& seg);
std::vector<double> secant_efficiencies(const Polynomial& curve, const Segmentation& seg);

/// Splits x into per-segment amounts, filling segments in order.
std::vector<double> fill_order(const Segmentation& seg, double x);

/// Input = F1(P~) + F2(Q) with P~ = P + kappa*Q.
struct SimoDecomposition {
  bool swapped = false;  // true when the roles of P and Q were exchanged
  std::string p_port;
  std::string q_port;
  double p_max = 0;
  double q_max = 0;
  double kappa = 0;
  double b_tilde = 0;
  double e_tilde = 0;
  double f1 = 0;
  double f2 = 0;
  Polynomial curve_p;  // F1 over P~
  Polynomial curve_q;  // F2 over Q
  Eigen::Matrix3d mapping = Eigen::Matrix3d::Identity();  // [F P Q] -> [F~ P~ Q~]

  double operator()(double p, double q) const { return curve_p(p + kappa * q) + curve_q(q); }
};

SimoDecomposition decompose_simo(const BivariateQuadratic& q);

enum class ComponentKind { siso, simo_proportional, simo_adjustable, storage };
enum class CurveKind { conversion, mapped_p, mapped_q, charge, discharge };

std::string_view to_string(ComponentKind kind);
std::string_view to_string(CurveKind kind);

/// One segmented curve. The argument is carried by the secondaries of
/// `argument_port`; `values` holds the curve at each breakpoint, anchored at 0.
struct LinearizedCurve {
  CurveKind kind = CurveKind::conversion;
  std::size_t argument_port = 0;
  std::optional<std::size_t> value_port;  // output port of a conversion curve
  Segmentation domain;
  std::vector<double> values;
  std::vector<double> secants;
};

double pwl_eval(const LinearizedCurve& curve, double x);

/// A primary port replaced by per-segment secondaries. Ports that drive
/// binaries carry the curve argument; the others are fixed by the
/// characteristic rows.
struct SplitPort {
  std::size_t port = 0;
  std::vector<double> widths;
  bool fill_order = false;
};

struct LinearizedComponent {
  std::size_t node = 0;
  std::string node_id;
  ComponentKind kind = ComponentKind::siso;
  ComponentSpec spec;
  std::vector<std::string> port_names;  // the node's ports, by index
  int segments = 1;
  std::vector<LinearizedCurve> curves;
  std::vector<SplitPort> split_ports;  // port order of the node
  std::optional<SimoDecomposition> mapping;

  std::size_t secondary_count() const;
  const SplitPort& split_port(std::size_t port) const;
};

/// Linearizes the nonlinear spec of `node` with `segments` uniform segments,
/// or with the spec's explicit widths when `segments` is unset.
LinearizedComponent linearize_component(const HubTopology& hub, std::size_t node, std::optional<int> segments);

/// Output of a SISO component for input v_in.
double pwl_eval(const LinearizedComponent& lc, double v_in);

struct LinearizedHub {
  HubTopology topology;  // canonical
  std::size_t declared_nodes = 0;  // nodes before canonicalization added junctions
  std::vector<LinearizedComponent> components;  // nonlinear nodes in node order
  std::vector<SecondaryBranch> secondaries;
  BranchIndex index;

  const LinearizedComponent* component_for(std::size_t node) const;
};

struct LinearizeOptions {
  std::optional<int> segments;  // overrides every component's own count
  int default_segments = 1;
};

/// Validates, canonicalizes and linearizes the hub. Throws HubError listing
/// violations when the topology is invalid.
LinearizedHub linearize_hub(const HubTopology& hub, const LinearizeOptions& options = {});

/// Replaces every nonlinear spec by a constant one: maximum output over
/// maximum input for converters, the curve value at rated power for storage.
HubTopology constant_approximation(const HubTopology& hub);

}  // namespace ehub
