#include "ehub/hub_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "ehub/curves.hpp"

namespace ehub {

ParseError::ParseError(const std::string& message, std::string location)
    : HubError(location.empty() ? message : message + " (at " + location + ")"),
      location_(std::move(location)) {}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::converter: return "converter";
    case NodeKind::storage: return "storage";
    case NodeKind::splitter: return "splitter";
    case NodeKind::concentrator: return "concentrator";
    case NodeKind::junction: return "junction";
  }
  return "?";
}

std::string_view to_string(PortDirection dir) {
  return dir == PortDirection::input ? "input" : "output";
}

Polynomial::Polynomial(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  while (coefficients_.size() > 1 && coefficients_.back() == 0.0) coefficients_.pop_back();
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coefficients_.size() <= 1) return Polynomial({0.0});
  std::vector<double> d(coefficients_.size() - 1);
  for (std::size_t i = 1; i < coefficients_.size(); ++i) d[i - 1] = coefficients_[i] * static_cast<double>(i);
  return Polynomial(std::move(d));
}

int Polynomial::degree() const {
  return coefficients_.empty() ? 0 : static_cast<int>(coefficients_.size()) - 1;
}

bool is_nonlinear(const ComponentSpec& spec) {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantEfficiency>) return false;
        else if constexpr (std::is_same_v<T, StorageCurves>) return !m.is_constant();
        else return true;
      },
      spec.model);
}

std::optional<std::size_t> Node::port_index(std::string_view name) const {
  for (std::size_t i = 0; i < ports.size(); ++i)
    if (ports[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> HubTopology::find_node(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> HubTopology::find_input(std::string_view name) const {
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> HubTopology::find_output(std::string_view name) const {
  for (std::size_t i = 0; i < outputs.size(); ++i)
    if (outputs[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::size_t> HubTopology::branches_at(std::size_t node, std::size_t port) const {
  std::vector<std::size_t> out;
  const Endpoint e = Endpoint::at_port(node, port);
  for (std::size_t b = 0; b < branches.size(); ++b)
    if (branches[b].from == e || branches[b].to == e) out.push_back(b);
  return out;
}

std::vector<std::size_t> HubTopology::branches_at_input(std::size_t input) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < branches.size(); ++b)
    if (branches[b].from == Endpoint::at_input(input)) out.push_back(b);
  return out;
}

std::vector<std::size_t> HubTopology::branches_at_output(std::size_t output) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < branches.size(); ++b)
    if (branches[b].to == Endpoint::at_output(output)) out.push_back(b);
  return out;
}

std::string HubTopology::endpoint_label(const Endpoint& e) const {
  switch (e.kind) {
    case Endpoint::Kind::hub_input:
      return "input:" + (e.terminal < inputs.size() ? inputs[e.terminal].name : std::string("?"));
    case Endpoint::Kind::hub_output:
      return "output:" + (e.terminal < outputs.size() ? outputs[e.terminal].name : std::string("?"));
    case Endpoint::Kind::node_port:
      if (e.node < nodes.size() && e.port < nodes[e.node].ports.size())
        return nodes[e.node].id + "." + nodes[e.node].ports[e.port].name;
      return "?.?";
  }
  return "?";
}

std::string HubTopology::endpoint_carrier(const Endpoint& e) const {
  switch (e.kind) {
    case Endpoint::Kind::hub_input:
      return e.terminal < inputs.size() ? inputs[e.terminal].carrier : std::string();
    case Endpoint::Kind::hub_output:
      return e.terminal < outputs.size() ? outputs[e.terminal].carrier : std::string();
    case Endpoint::Kind::node_port:
      if (e.node < nodes.size() && e.port < nodes[e.node].ports.size())
        return nodes[e.node].ports[e.port].carrier;
      return {};
  }
  return {};
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    os << v.code << ": " << v.message;
    if (!v.subjects.empty()) {
      os << " [";
      for (std::size_t i = 0; i < v.subjects.size(); ++i) os << (i ? ", " : "") << v.subjects[i];
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

namespace {

class Reporter {
 public:
  void add(std::string code, std::string message, std::vector<std::string> subjects = {}) {
    report_.violations.push_back({std::move(code), std::move(message), std::move(subjects)});
  }
  ValidationReport take() { return std::move(report_); }

 private:
  ValidationReport report_;
};

bool endpoint_valid(const HubTopology& hub, const Endpoint& e) {
  switch (e.kind) {
    case Endpoint::Kind::hub_input: return e.terminal < hub.inputs.size();
    case Endpoint::Kind::hub_output: return e.terminal < hub.outputs.size();
    case Endpoint::Kind::node_port:
      return e.node < hub.nodes.size() && e.port < hub.nodes[e.node].ports.size();
  }
  return false;
}

void check_unique_ids(const HubTopology& hub, Reporter& r) {
  std::set<std::string> seen;
  for (const auto& n : hub.nodes) {
    if (!seen.insert(n.id).second) r.add("duplicate-id", "duplicate node id '" + n.id + "'", {n.id});
    std::set<std::string> ports;
    for (const auto& p : n.ports)
      if (!ports.insert(p.name).second)
        r.add("duplicate-id", "duplicate port '" + p.name + "' on node '" + n.id + "'", {n.id});
  }
  std::set<std::string> branch_ids;
  for (const auto& b : hub.branches)
    if (!branch_ids.insert(b.id).second)
      r.add("duplicate-id", "duplicate branch id '" + b.id + "'", {b.id});
  std::set<std::string> terminals;
  for (const auto& in : hub.inputs)
    if (!terminals.insert("input:" + in.name).second)
      r.add("duplicate-id", "duplicate hub input '" + in.name + "'", {in.name});
  for (const auto& out : hub.outputs)
    if (!terminals.insert("output:" + out.name).second)
      r.add("duplicate-id", "duplicate hub output '" + out.name + "'", {out.name});
}

void check_branches(const HubTopology& hub, Reporter& r) {
  for (const auto& b : hub.branches) {
    if (!endpoint_valid(hub, b.from) || !endpoint_valid(hub, b.to)) {
      r.add("unknown-endpoint", "branch '" + b.id + "' references an unknown endpoint", {b.id});
      continue;
    }
    const bool from_ok =
        b.from.kind == Endpoint::Kind::hub_input ||
        (b.from.kind == Endpoint::Kind::node_port &&
         hub.nodes[b.from.node].ports[b.from.port].direction == PortDirection::output);
    const bool to_ok =
        b.to.kind == Endpoint::Kind::hub_output ||
        (b.to.kind == Endpoint::Kind::node_port &&
         hub.nodes[b.to.node].ports[b.to.port].direction == PortDirection::input);
    if (!from_ok)
      r.add("bad-direction", "branch '" + b.id + "' must start at an output port or a hub input",
            {b.id, hub.endpoint_label(b.from)});
    if (!to_ok)
      r.add("bad-direction", "branch '" + b.id + "' must end at an input port or a hub output",
            {b.id, hub.endpoint_label(b.to)});
    const std::string cf = hub.endpoint_carrier(b.from);
    const std::string ct = hub.endpoint_carrier(b.to);
    if (cf != b.carrier || ct != b.carrier)
      r.add("carrier-mismatch",
            "branch '" + b.id + "' carries '" + b.carrier + "' but connects " +
                hub.endpoint_label(b.from) + " (" + cf + ") to " + hub.endpoint_label(b.to) +
                " (" + ct + ")",
            {b.id});
  }
}

void check_terminals_and_ports(const HubTopology& hub, Reporter& r) {
  for (std::size_t i = 0; i < hub.inputs.size(); ++i)
    if (hub.branches_at_input(i).empty())
      r.add("unconnected-terminal", "hub input '" + hub.inputs[i].name + "' has no branch",
            {"input:" + hub.inputs[i].name});
  for (std::size_t j = 0; j < hub.outputs.size(); ++j)
    if (hub.branches_at_output(j).empty())
      r.add("unconnected-terminal", "hub output '" + hub.outputs[j].name + "' has no branch",
            {"output:" + hub.outputs[j].name});
  for (std::size_t n = 0; n < hub.nodes.size(); ++n)
    for (std::size_t p = 0; p < hub.nodes[n].ports.size(); ++p)
      if (hub.branches_at(n, p).empty())
        r.add("unconnected-port", "port '" + hub.endpoint_label(Endpoint::at_port(n, p)) + "' has no branch",
              {hub.nodes[n].id});
}

void check_connectivity(const HubTopology& hub, Reporter& r) {
  // vertices: inputs, nodes, outputs
  const std::size_t ni = hub.inputs.size(), nn = hub.nodes.size(), no = hub.outputs.size();
  const std::size_t nv = ni + nn + no;
  auto vertex = [&](const Endpoint& e) -> std::optional<std::size_t> {
    if (!endpoint_valid(hub, e)) return std::nullopt;
    switch (e.kind) {
      case Endpoint::Kind::hub_input: return e.terminal;
      case Endpoint::Kind::node_port: return ni + e.node;
      case Endpoint::Kind::hub_output: return ni + nn + e.terminal;
    }
    return std::nullopt;
  };
  std::vector<std::vector<std::size_t>> fwd(nv), bwd(nv);
  for (const auto& b : hub.branches) {
    auto u = vertex(b.from), v = vertex(b.to);
    if (!u || !v) continue;
    fwd[*u].push_back(*v);
    bwd[*v].push_back(*u);
  }
  auto reach = [&](const std::vector<std::vector<std::size_t>>& adj, std::size_t first, std::size_t count) {
    std::vector<char> seen(nv, 0);
    std::deque<std::size_t> queue;
    for (std::size_t k = first; k < first + count; ++k) {
      seen[k] = 1;
      queue.push_back(k);
    }
    while (!queue.empty()) {
      auto u = queue.front();
      queue.pop_front();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          queue.push_back(v);
        }
    }
    return seen;
  };
  const auto from_inputs = reach(fwd, 0, ni);
  const auto to_outputs = reach(bwd, ni + nn, no);
  for (std::size_t n = 0; n < nn; ++n) {
    if (!from_inputs[ni + n])
      r.add("disconnected", "node '" + hub.nodes[n].id + "' is not reachable from any hub input",
            {hub.nodes[n].id});
    if (!to_outputs[ni + n])
      r.add("disconnected", "node '" + hub.nodes[n].id + "' cannot reach any hub output",
            {hub.nodes[n].id});
  }
  for (std::size_t j = 0; j < no; ++j)
    if (!from_inputs[ni + nn + j])
      r.add("disconnected", "hub output '" + hub.outputs[j].name + "' is not reachable from any hub input",
            {"output:" + hub.outputs[j].name});
}

std::size_t count_dir(const Node& n, PortDirection dir) {
  return static_cast<std::size_t>(std::count_if(n.ports.begin(), n.ports.end(),
                                                [&](const Port& p) { return p.direction == dir; }));
}

void check_spec(const Node& node, const ComponentSpec& spec, Reporter& r) {
  const auto bad = [&](const std::string& msg) { r.add("spec-invalid", "node '" + node.id + "': " + msg, {node.id}); };
  const auto output_port = [&](const std::string& name) {
    auto idx = node.port_index(name);
    return idx && node.ports[*idx].direction == PortDirection::output;
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantEfficiency>) {
          if (count_dir(node, PortDirection::input) != 1) bad("constant model needs exactly one input port");
          if (m.outputs.size() != count_dir(node, PortDirection::output))
            bad("constant model needs one efficiency per output port");
          for (const auto& [port, eta] : m.outputs) {
            if (!output_port(port)) bad("efficiency given for unknown output port '" + port + "'");
            if (!(eta > 0.0) || !std::isfinite(eta)) bad("efficiency of '" + port + "' must be positive");
          }
        } else if constexpr (std::is_same_v<T, PolynomialCurves>) {
          if (count_dir(node, PortDirection::input) != 1) bad("polynomial model needs exactly one input port");
          if (m.outputs.size() != count_dir(node, PortDirection::output))
            bad("polynomial model needs one curve per output port");
          auto range = polynomial_input_range(m, spec.capacity);
          if (!range || !(*range > 0.0)) {
            bad("polynomial model needs a positive input capacity");
            return;
          }
          for (const auto& [port, poly] : m.outputs) {
            if (!output_port(port)) bad("curve given for unknown output port '" + port + "'");
            if (auto issue = curve_shape_issue(poly, *range)) bad("curve '" + port + "': " + *issue);
          }
        } else if constexpr (std::is_same_v<T, BivariateQuadratic>) {
          if (count_dir(node, PortDirection::input) != 1 || count_dir(node, PortDirection::output) != 2)
            bad("quadratic model needs one input and two output ports");
          if (!output_port(m.p_port) || !output_port(m.q_port) || m.p_port == m.q_port)
            bad("quadratic model p_port/q_port must name the two output ports");
          if (!(m.p_max > 0.0) || !(m.q_max > 0.0)) bad("quadratic model needs positive p_max and q_max");
          if (m.a == 0.0 && m.b == 0.0 && m.c != 0.0) bad("quadratic model with a = b = 0 and c != 0 is not separable");
        } else if constexpr (std::is_same_v<T, StorageCurves>) {
          if (!(m.power_capacity > 0.0)) bad("storage needs a positive power capacity");
          if (!(m.energy_capacity > 0.0)) bad("storage needs a positive energy capacity");
          for (double p : {0.0, m.power_capacity}) {
            const double ec = m.charge(p), ed = m.discharge(p);
            if (!(ec > 0.0 && ec <= 1.0)) bad("charge efficiency must lie in (0,1] over the power range");
            if (!(ed > 0.0 && ed <= 1.0)) bad("discharge efficiency must lie in (0,1] over the power range");
          }
          if (m.initial_soc && (*m.initial_soc < 0.0 || *m.initial_soc > m.energy_capacity))
            bad("initial_soc outside [0, energy_capacity]");
        }
      },
      spec.model);
  if (spec.segments && *spec.segments < 1) bad("segments must be >= 1");
}

void check_nodes(const HubTopology& hub, Reporter& r) {
  for (const auto& n : hub.nodes) {
    const auto nin = count_dir(n, PortDirection::input);
    const auto nout = count_dir(n, PortDirection::output);
    switch (n.kind) {
      case NodeKind::converter:
        if (nin < 1 || nout < 1)
          r.add("converter-ports", "converter '" + n.id + "' needs at least one input and one output port", {n.id});
        if (!n.spec) r.add("spec-missing", "converter '" + n.id + "' has no efficiency spec", {n.id});
        else if (std::holds_alternative<StorageCurves>(n.spec->model))
          r.add("spec-invalid", "converter '" + n.id + "' cannot use a storage model", {n.id});
        break;
      case NodeKind::storage:
        if (nin != 1) r.add("storage-ports", "storage must have exactly one charging port", {n.id});
        if (nout != 1) r.add("storage-ports", "storage must have exactly one discharging port", {n.id});
        if (!n.spec) r.add("spec-missing", "storage '" + n.id + "' has no spec", {n.id});
        else if (!std::holds_alternative<StorageCurves>(n.spec->model))
          r.add("spec-invalid", "storage '" + n.id + "' needs a storage model", {n.id});
        break;
      case NodeKind::splitter:
      case NodeKind::concentrator:
      case NodeKind::junction:
        if (n.spec) r.add("spec-forbidden", std::string(to_string(n.kind)) + " '" + n.id + "' carries no efficiency spec", {n.id});
        if (nin < 1 || nout < 1)
          r.add("converter-ports", std::string(to_string(n.kind)) + " '" + n.id + "' needs input and output ports", {n.id});
        break;
    }
    if (n.spec && (n.kind == NodeKind::converter || n.kind == NodeKind::storage)) check_spec(n, *n.spec, r);
  }
}

}  // namespace

ValidationReport validate_topology(const HubTopology& hub) {
  Reporter r;
  check_unique_ids(hub, r);
  check_branches(hub, r);
  check_terminals_and_ports(hub, r);
  check_nodes(hub, r);
  check_connectivity(hub, r);
  return r.take();
}

HubTopology canonicalize(const HubTopology& hub) {
  HubTopology out = hub;
  const std::size_t original_nodes = hub.nodes.size();
  for (std::size_t n = 0; n < original_nodes; ++n) {
    if (!out.nodes[n].is_nonlinear()) continue;
    for (std::size_t p = 0; p < out.nodes[n].ports.size(); ++p) {
      auto attached = out.branches_at(n, p);
      if (attached.size() <= 1) continue;
      const Port port = out.nodes[n].ports[p];
      std::string jid = out.nodes[n].id + "__" + port.name;
      while (out.find_node(jid)) jid += "_";
      Node junction{jid, NodeKind::junction,
                    {{"in", PortDirection::input, port.carrier}, {"out", PortDirection::output, port.carrier}},
                    std::nullopt};
      out.nodes.push_back(junction);
      const std::size_t j = out.nodes.size() - 1;
      std::string link_id = jid + "__link";
      auto id_taken = [&](const std::string& id) {
        return std::any_of(out.branches.begin(), out.branches.end(), [&](const Branch& b) { return b.id == id; });
      };
      while (id_taken(link_id)) link_id += "_";
      Branch link{link_id, {}, {}, port.carrier, BranchClass::primary};
      if (port.direction == PortDirection::output) {
        for (auto b : attached) out.branches[b].from = Endpoint::at_port(j, 1);
        link.from = Endpoint::at_port(n, p);
        link.to = Endpoint::at_port(j, 0);
      } else {
        for (auto b : attached) out.branches[b].to = Endpoint::at_port(j, 0);
        link.from = Endpoint::at_port(j, 1);
        link.to = Endpoint::at_port(n, p);
      }
      out.branches.push_back(link);
    }
  }
  return out;
}

const SecondaryBranch& BranchIndex::secondary(std::size_t column) const {
  if (column < primary_count_ || column >= labels_.size())
    throw std::out_of_range("BranchIndex::secondary: column is not a secondary branch");
  return secondaries_[column - primary_count_];
}

std::optional<std::size_t> BranchIndex::secondary_column(std::size_t node, std::size_t port, int segment) const {
  for (std::size_t k = 0; k < secondaries_.size(); ++k) {
    const auto& s = secondaries_[k];
    if (s.node == node && s.port == port && s.segment == segment) return primary_count_ + k;
  }
  return std::nullopt;
}

std::vector<std::size_t> BranchIndex::secondary_columns(std::size_t node, std::size_t port) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < secondaries_.size(); ++k)
    if (secondaries_[k].node == node && secondaries_[k].port == port) out.push_back(primary_count_ + k);
  return out;
}

BranchIndex index_branches(const HubTopology& hub, std::span<const SecondaryBranch> secondaries) {
  BranchIndex index;
  index.primary_count_ = hub.branches.size();
  for (const auto& b : hub.branches) index.labels_.push_back(b.id);
  std::vector<SecondaryBranch> sorted(secondaries.begin(), secondaries.end());
  auto rank = [&](const SecondaryBranch& s) {
    const auto& node = hub.nodes.at(s.node);
    const bool is_output = node.ports.at(s.port).direction == PortDirection::output;
    return std::tuple(s.node, is_output ? 1 : 0, s.port, s.segment);
  };
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](const SecondaryBranch& a, const SecondaryBranch& b) { return rank(a) < rank(b); });
  for (const auto& s : sorted) index.labels_.push_back(s.label);
  index.secondaries_ = std::move(sorted);
  return index;
}

}  // namespace ehub
