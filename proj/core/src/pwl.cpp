#include "ehub/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ehub/curves.hpp"
#include "ehub/format.hpp"

namespace ehub {

Segmentation segment_domain(double range, int segments) {
  if (!(range > 0.0) || !std::isfinite(range)) throw HubError("segment range must be positive, got " + format_double(range));
  if (segments < 1) throw HubError("segment count must be >= 1, got " + std::to_string(segments));
  Segmentation seg;
  seg.breakpoints.resize(static_cast<std::size_t>(segments) + 1);
  for (int k = 0; k <= segments; ++k) seg.breakpoints[k] = range * k / segments;
  seg.breakpoints.back() = range;
  for (int k = 0; k < segments; ++k) seg.widths.push_back(seg.breakpoints[k + 1] - seg.breakpoints[k]);
  return seg;
}

Segmentation segment_domain(double range, std::span<const double> widths) {
  if (!(range > 0.0) || !std::isfinite(range)) throw HubError("segment range must be positive, got " + format_double(range));
  if (widths.empty()) throw HubError("explicit segmentation needs at least one width");
  for (double w : widths)
    if (!(w > 0.0)) throw HubError("segment widths must be positive, got " + format_double(w));
  const double total = std::accumulate(widths.begin(), widths.end(), 0.0);
  if (std::abs(total - range) > 1e-9 * range)
    throw HubError("segment widths sum to " + format_double(total) + ", expected " + format_double(range));
  Segmentation seg;
  seg.widths.assign(widths.begin(), widths.end());
  seg.breakpoints.push_back(0.0);
  for (double w : widths) seg.breakpoints.push_back(seg.breakpoints.back() + w);
  seg.breakpoints.back() = range;
  return seg;
}

std::vector<double> secant_efficiencies(const std::function<double(double)>& curve, const Segmentation& seg) {
  std::vector<double> out;
  const double scale = std::max(1.0, std::abs(curve(seg.range())));
  double prev = curve(seg.breakpoints.front());
  if (prev < -1e-12 * scale) throw HubError("curve is negative at the start of its domain");
  for (std::size_t k = 1; k < seg.breakpoints.size(); ++k) {
    const double next = curve(seg.breakpoints[k]);
    if (next < -1e-12 * scale) throw HubError("curve is negative at " + format_double(seg.breakpoints[k]));
    double eta = (next - prev) / (seg.breakpoints[k] - seg.breakpoints[k - 1]);
    if (eta < 0.0) {
      if (eta < -1e-12 * scale) throw HubError("curve decreases on segment " + std::to_string(k));
      eta = 0.0;
    }
    out.push_back(eta);
    prev = next;
  }
  return out;
}

std::vector<double> secant_efficiencies(const Polynomial& curve, const Segmentation& seg) {
  if (auto issue = curve_shape_issue(curve, seg.range())) throw HubError(*issue);
  return secant_efficiencies([&](double x) { return curve(x); }, seg);
}

std::vector<double> fill_order(const Segmentation& seg, double x) {
  if (x < 0.0 || x > seg.range() * (1.0 + 1e-12))
    throw HubError("value " + format_double(x) + " outside [0, " + format_double(seg.range()) + "]");
  std::vector<double> parts;
  double rest = x;
  for (double w : seg.widths) {
    const double take = std::min(rest, w);
    parts.push_back(take);
    rest -= take;
  }
  parts.back() += rest;
  return parts;
}

SimoDecomposition decompose_simo(const BivariateQuadratic& in) {
  BivariateQuadratic q = in;
  SimoDecomposition d;
  if (q.a == 0.0 && q.c != 0.0) {
    if (q.b == 0.0) throw HubError("quadratic with a = b = 0 and c != 0 has no separable mapping");
    std::swap(q.a, q.b);
    std::swap(q.d, q.e);
    std::swap(q.p_port, q.q_port);
    std::swap(q.p_max, q.q_max);
    d.swapped = true;
  }
  d.p_port = q.p_port;
  d.q_port = q.q_port;
  d.p_max = q.p_max;
  d.q_max = q.q_max;
  if (q.a == 0.0) {
    d.kappa = 0.0;
    d.b_tilde = q.b;
    d.e_tilde = q.e;
  } else {
    d.kappa = q.c / (2.0 * q.a);
    d.b_tilde = q.b - q.c * q.c / (4.0 * q.a);
    d.e_tilde = q.e - q.c * q.d / (2.0 * q.a);
  }
  d.f1 = q.f;
  d.f2 = 0.0;
  d.curve_p = Polynomial({d.f1, q.d, q.a});
  d.curve_q = Polynomial({d.f2, d.e_tilde, d.b_tilde});
  d.mapping(1, 2) = d.kappa;
  return d;
}

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::siso: return "siso";
    case ComponentKind::simo_proportional: return "simo-proportional";
    case ComponentKind::simo_adjustable: return "simo-adjustable";
    case ComponentKind::storage: return "storage";
  }
  return "?";
}

std::string_view to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::conversion: return "conversion";
    case CurveKind::mapped_p: return "mapped-p";
    case CurveKind::mapped_q: return "mapped-q";
    case CurveKind::charge: return "charge";
    case CurveKind::discharge: return "discharge";
  }
  return "?";
}

double pwl_eval(const LinearizedCurve& curve, double x) {
  const auto parts = fill_order(curve.domain, x);
  double y = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) y += curve.secants[k] * parts[k];
  return y;
}

double pwl_eval(const LinearizedComponent& lc, double v_in) {
  if (lc.kind != ComponentKind::siso) throw HubError("pwl_eval on a component needs a SISO component");
  return pwl_eval(lc.curves.front(), v_in);
}

std::size_t LinearizedComponent::secondary_count() const {
  std::size_t n = 0;
  for (const auto& sp : split_ports) n += sp.widths.size();
  return n;
}

const SplitPort& LinearizedComponent::split_port(std::size_t port) const {
  for (const auto& sp : split_ports)
    if (sp.port == port) return sp;
  throw HubError("port " + std::to_string(port) + " of '" + node_id + "' is not split");
}

namespace {

LinearizedCurve make_curve(CurveKind kind, std::size_t arg_port, std::optional<std::size_t> value_port,
                           const Segmentation& seg, const std::function<double(double)>& f) {
  LinearizedCurve c{kind, arg_port, value_port, seg, {}, {}};
  const double origin = f(0.0);
  auto anchored = [&](double x) { return f(x) - origin; };
  c.secants = secant_efficiencies(anchored, seg);
  for (double x : seg.breakpoints) c.values.push_back(anchored(x));
  c.values.front() = 0.0;
  return c;
}

std::vector<double> value_widths(const LinearizedCurve& c) {
  std::vector<double> w;
  for (std::size_t k = 1; k < c.values.size(); ++k) w.push_back(std::max(0.0, c.values[k] - c.values[k - 1]));
  return w;
}

std::size_t only_port(const Node& n, PortDirection dir) {
  for (std::size_t p = 0; p < n.ports.size(); ++p)
    if (n.ports[p].direction == dir) return p;
  throw HubError("node '" + n.id + "' has no " + std::string(to_string(dir)) + " port");
}

}  // namespace

LinearizedComponent linearize_component(const HubTopology& hub, std::size_t node_index, std::optional<int> segments) {
  const Node& node = hub.nodes.at(node_index);
  if (!node.spec || !node.is_nonlinear()) throw HubError("node '" + node.id + "' has no nonlinear spec");
  const ComponentSpec& spec = *node.spec;

  LinearizedComponent lc;
  lc.node = node_index;
  lc.node_id = node.id;
  lc.spec = spec;
  for (const auto& port : node.ports) lc.port_names.push_back(port.name);

  auto segment = [&](double range) {
    if (segments) return segment_domain(range, *segments);
    if (!spec.segment_widths.empty()) return segment_domain(range, spec.segment_widths);
    return segment_domain(range, spec.segments.value_or(1));
  };
  const auto fail = [&](const std::string& msg) -> HubError { return HubError("node '" + node.id + "': " + msg); };

  try {
    if (const auto* poly = std::get_if<PolynomialCurves>(&spec.model)) {
      const auto range = polynomial_input_range(*poly, spec.capacity);
      if (!range) throw fail("polynomial model needs an input or output capacity");
      const Segmentation seg = segment(*range);
      const std::size_t in = only_port(node, PortDirection::input);
      lc.kind = poly->outputs.size() == 1 ? ComponentKind::siso : ComponentKind::simo_proportional;
      lc.split_ports.push_back({in, seg.widths, true});
      for (std::size_t p = 0; p < node.ports.size(); ++p) {
        if (node.ports[p].direction != PortDirection::output) continue;
        auto it = std::find_if(poly->outputs.begin(), poly->outputs.end(),
                               [&](const auto& o) { return o.first == node.ports[p].name; });
        if (it == poly->outputs.end()) throw fail("no curve for output port '" + node.ports[p].name + "'");
        if (auto issue = curve_shape_issue(it->second, *range)) throw fail("curve '" + it->first + "': " + *issue);
        const Polynomial& f = it->second;
        lc.curves.push_back(make_curve(CurveKind::conversion, in, p, seg, [&](double x) { return f(x); }));
        lc.split_ports.push_back({p, value_widths(lc.curves.back()), false});
      }
    } else if (const auto* quad = std::get_if<BivariateQuadratic>(&spec.model)) {
      lc.kind = ComponentKind::simo_adjustable;
      const SimoDecomposition d = decompose_simo(*quad);
      if (d.kappa < 0.0) throw fail("mapped output P + (c/2a)Q would be negative over the output box");
      const std::size_t in = only_port(node, PortDirection::input);
      const auto p_port = node.port_index(d.p_port);
      const auto q_port = node.port_index(d.q_port);
      if (!p_port || !q_port) throw fail("quadratic model names unknown output ports");
      if (segments || spec.segment_widths.empty()) {
        const int s = segments.value_or(spec.segments.value_or(1));
        const Segmentation seg_p = segment_domain(d.p_max + d.kappa * d.q_max, s);
        const Segmentation seg_q = segment_domain(d.q_max, s);
        lc.curves.push_back(make_curve(CurveKind::mapped_p, *p_port, in, seg_p, [&](double x) { return d.curve_p(x); }));
        lc.curves.push_back(make_curve(CurveKind::mapped_q, *q_port, in, seg_q, [&](double x) { return d.curve_q(x); }));
      } else {
        throw fail("explicit segment widths are not supported for the quadratic model");
      }
      const auto& cp = lc.curves[0];
      const auto& cq = lc.curves[1];
      std::vector<double> f_widths;
      for (std::size_t i = 0; i < cp.secants.size(); ++i)
        f_widths.push_back(cp.secants[i] * cp.domain.widths[i] + cq.secants[i] * cq.domain.widths[i]);
      std::vector<SplitPort> ports{{in, f_widths, false}, {*p_port, cp.domain.widths, true}, {*q_port, cq.domain.widths, true}};
      std::sort(ports.begin(), ports.end(), [](const SplitPort& a, const SplitPort& b) { return a.port < b.port; });
      std::stable_partition(ports.begin(), ports.end(), [&](const SplitPort& sp) { return sp.port == in; });
      lc.split_ports = std::move(ports);
      lc.mapping = d;
    } else if (const auto* st = std::get_if<StorageCurves>(&spec.model)) {
      lc.kind = ComponentKind::storage;
      const Segmentation seg = segment(st->power_capacity);
      const std::size_t in = only_port(node, PortDirection::input);
      const std::size_t out = only_port(node, PortDirection::output);
      const StorageCurves curves = *st;
      lc.curves.push_back(make_curve(CurveKind::charge, in, std::nullopt, seg,
                                     [curves](double p) { return storage_charge_energy(curves, p); }));
      lc.curves.push_back(make_curve(CurveKind::discharge, out, std::nullopt, seg,
                                     [curves](double p) { return storage_discharge_draw(curves, p); }));
      lc.split_ports.push_back({in, seg.widths, true});
      lc.split_ports.push_back({out, seg.widths, true});
    } else {
      throw fail("constant model needs no linearization");
    }
  } catch (const HubError& e) {
    const std::string msg = e.what();
    if (msg.rfind("node '", 0) == 0) throw;
    throw fail(msg);
  }
  lc.segments = lc.curves.front().domain.count();
  return lc;
}

const LinearizedComponent* LinearizedHub::component_for(std::size_t node) const {
  for (const auto& c : components)
    if (c.node == node) return &c;
  return nullptr;
}

LinearizedHub linearize_hub(const HubTopology& hub, const LinearizeOptions& options) {
  if (auto report = validate_topology(hub); !report.ok()) throw HubError("invalid hub:\n" + report.to_string());
  LinearizedHub lin;
  lin.topology = canonicalize(hub);
  lin.declared_nodes = hub.nodes.size();
  for (std::size_t n = 0; n < lin.topology.nodes.size(); ++n) {
    const Node& node = lin.topology.nodes[n];
    if (!node.is_nonlinear()) continue;
    std::optional<int> s = options.segments;
    if (!s && node.spec->segment_widths.empty()) s = node.spec->segments.value_or(options.default_segments);
    lin.components.push_back(linearize_component(lin.topology, n, s));
    const auto& lc = lin.components.back();
    for (const auto& sp : lc.split_ports)
      for (std::size_t k = 0; k < sp.widths.size(); ++k)
        lin.secondaries.push_back({n, sp.port, static_cast<int>(k) + 1,
                                   node.id + "." + node.ports[sp.port].name + "." + std::to_string(k + 1)});
  }
  lin.index = index_branches(lin.topology, lin.secondaries);
  return lin;
}

HubTopology constant_approximation(const HubTopology& hub) {
  HubTopology out = hub;
  for (auto& node : out.nodes) {
    if (!node.spec || !node.is_nonlinear()) continue;
    ComponentSpec& spec = *node.spec;
    if (const auto* poly = std::get_if<PolynomialCurves>(&spec.model)) {
      const auto range = polynomial_input_range(*poly, spec.capacity);
      if (!range) throw HubError("node '" + node.id + "': polynomial model needs a capacity");
      ConstantEfficiency c;
      for (const auto& [port, f] : poly->outputs) c.outputs.emplace_back(port, f(*range) / *range);
      spec.capacity.input = *range;
      spec.model = c;
    } else if (const auto* quad = std::get_if<BivariateQuadratic>(&spec.model)) {
      const double f_max = (*quad)(quad->p_max, quad->q_max);
      if (!(f_max > 0.0)) throw HubError("node '" + node.id + "': quadratic input at full output must be positive");
      ConstantEfficiency c;
      for (const auto& port : node.ports) {
        if (port.direction != PortDirection::output) continue;
        c.outputs.emplace_back(port.name, (port.name == quad->p_port ? quad->p_max : quad->q_max) / f_max);
      }
      spec.capacity.input = f_max;
      spec.model = c;
    } else if (auto* st = std::get_if<StorageCurves>(&spec.model)) {
      st->charge = {st->charge(st->power_capacity), 0.0};
      st->discharge = {st->discharge(st->power_capacity), 0.0};
    }
    spec.segments.reset();
    spec.segment_widths.clear();
  }
  return out;
}

}  // namespace ehub
