#pragma once

// Energy-hub graph: nodes with typed ports, branches between ports and hub
// terminals, and per-node efficiency specifications.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ehub {

class HubError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed hub documents. `location()` is a JSON pointer for
/// schema problems or "byte N" for syntax errors.
class ParseError : public HubError {
 public:
  ParseError(const std::string& message, std::string location);
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

enum class PortDirection { input, output };
enum class NodeKind { converter, storage, splitter, concentrator, junction };
enum class BranchClass { primary, secondary };

std::string_view to_string(NodeKind kind);
std::string_view to_string(PortDirection dir);

struct Port {
  std::string name;
  PortDirection direction = PortDirection::input;
  std::string carrier;

  friend bool operator==(const Port&, const Port&) = default;
};

/// c0 + c1*x + c2*x^2 + ...
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients);

  double operator()(double x) const;
  Polynomial derivative() const;
  int degree() const;
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<double> coefficients_;
};

/// One process per output port, each relating the single input port to
/// that output with a fixed efficiency.
struct ConstantEfficiency {
  std::vector<std::pair<std::string, double>> outputs;

  friend bool operator==(const ConstantEfficiency&, const ConstantEfficiency&) = default;
};

/// Output power of each output port as a polynomial of the input power.
/// A single output is a SISO converter; several make a SIMO converter whose
/// outputs are each proportional-in-shape to the shared input.
struct PolynomialCurves {
  std::vector<std::pair<std::string, Polynomial>> outputs;

  friend bool operator==(const PolynomialCurves&, const PolynomialCurves&) = default;
};

/// Input = a*P^2 + b*Q^2 + c*P*Q + d*P + e*Q + f for a converter whose
/// split between outputs P and Q is adjustable.
struct BivariateQuadratic {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
  std::string p_port;
  std::string q_port;
  double p_max = 0;
  double q_max = 0;

  double operator()(double p, double q) const {
    return a * p * p + b * q * q + c * p * q + d * p + e * q + f;
  }
  friend bool operator==(const BivariateQuadratic&, const BivariateQuadratic&) = default;
};

/// eta(power) = intercept + slope * power
struct AffineEfficiency {
  double intercept = 1.0;
  double slope = 0.0;

  double operator()(double power) const { return intercept + slope * power; }
  friend bool operator==(const AffineEfficiency&, const AffineEfficiency&) = default;
};

struct StorageCurves {
  AffineEfficiency charge;
  AffineEfficiency discharge;
  double energy_capacity = 0;  // kWh
  double power_capacity = 0;   // kW, applies to both ports
  std::optional<double> initial_soc;  // kWh; default half of energy_capacity

  bool is_constant() const { return charge.slope == 0.0 && discharge.slope == 0.0; }
  friend bool operator==(const StorageCurves&, const StorageCurves&) = default;
};

using EfficiencyModel =
    std::variant<ConstantEfficiency, PolynomialCurves, BivariateQuadratic, StorageCurves>;

struct Capacity {
  std::optional<double> input;               // kW at the input port
  std::map<std::string, double> outputs;     // kW per output port

  friend bool operator==(const Capacity&, const Capacity&) = default;
};

struct ComponentSpec {
  EfficiencyModel model;
  Capacity capacity;
  std::optional<int> segments;
  std::vector<double> segment_widths;  // explicit widths; empty means uniform

  friend bool operator==(const ComponentSpec&, const ComponentSpec&) = default;
};

/// True when the spec needs piecewise linearization.
bool is_nonlinear(const ComponentSpec& spec);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::converter;
  std::vector<Port> ports;
  std::optional<ComponentSpec> spec;

  std::optional<std::size_t> port_index(std::string_view name) const;
  bool is_nonlinear() const { return spec && ehub::is_nonlinear(*spec); }
  friend bool operator==(const Node&, const Node&) = default;
};

struct Endpoint {
  enum class Kind { node_port, hub_input, hub_output };
  Kind kind = Kind::node_port;
  std::size_t node = 0;
  std::size_t port = 0;
  std::size_t terminal = 0;  // index into inputs / outputs

  static Endpoint at_port(std::size_t node, std::size_t port) {
    return {Kind::node_port, node, port, 0};
  }
  static Endpoint at_input(std::size_t i) { return {Kind::hub_input, 0, 0, i}; }
  static Endpoint at_output(std::size_t j) { return {Kind::hub_output, 0, 0, j}; }
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct Branch {
  std::string id;
  Endpoint from;
  Endpoint to;
  std::string carrier;
  BranchClass branch_class = BranchClass::primary;

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct HubInput {
  std::string name;
  std::string carrier;
  std::string price_series;
  bool allow_export = false;

  friend bool operator==(const HubInput&, const HubInput&) = default;
};

struct HubOutput {
  std::string name;
  std::string carrier;
  std::string demand_series;

  friend bool operator==(const HubOutput&, const HubOutput&) = default;
};

struct HubTopology {
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  std::vector<HubInput> inputs;
  std::vector<HubOutput> outputs;
  std::vector<std::pair<std::string, std::string>> series;  // name -> CSV reference
  std::filesystem::path base_dir;  // where relative series paths resolve

  std::optional<std::size_t> find_node(std::string_view id) const;
  std::optional<std::size_t> find_input(std::string_view name) const;
  std::optional<std::size_t> find_output(std::string_view name) const;

  std::vector<std::size_t> branches_at(std::size_t node, std::size_t port) const;
  std::vector<std::size_t> branches_at_input(std::size_t input) const;
  std::vector<std::size_t> branches_at_output(std::size_t output) const;

  std::string endpoint_label(const Endpoint& e) const;
  std::string endpoint_carrier(const Endpoint& e) const;

  friend bool operator==(const HubTopology&, const HubTopology&) = default;
};

struct ParseOptions {
  bool check_carriers = true;  // carrier mismatch as a parse error
};

/// Parses the JSON hub description. Node and branch order follow the document.
HubTopology parse_hub(std::string_view document, const ParseOptions& options = {});
HubTopology load_hub(const std::filesystem::path& path, const ParseOptions& options = {});
std::string serialize_hub(const HubTopology& hub);

struct Violation {
  std::string code;
  std::string message;
  std::vector<std::string> subjects;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
  std::string to_string() const;
};

ValidationReport validate_topology(const HubTopology& hub);

/// Inserts a summing junction wherever a nonlinear component port is wired to
/// more than one branch, so every such port ends up with exactly one branch.
HubTopology canonicalize(const HubTopology& hub);

/// Branch created by splitting a primary branch at a nonlinear port.
struct SecondaryBranch {
  std::size_t node = 0;
  std::size_t port = 0;
  int segment = 1;  // 1-based
  std::string label;

  friend bool operator==(const SecondaryBranch&, const SecondaryBranch&) = default;
};

/// Column order of every matrix: primary branches in declaration order, then
/// secondaries grouped by node, input-port secondaries before output-port
/// secondaries, segments ascending.
class BranchIndex {
 public:
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t primary_count() const noexcept { return primary_count_; }
  std::size_t secondary_count() const noexcept { return secondaries_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t column) const { return labels_.at(column); }

  bool is_secondary(std::size_t column) const { return column >= primary_count_; }
  const SecondaryBranch& secondary(std::size_t column) const;
  std::optional<std::size_t> secondary_column(std::size_t node, std::size_t port,
                                              int segment) const;
  std::vector<std::size_t> secondary_columns(std::size_t node, std::size_t port) const;

  friend bool operator==(const BranchIndex&, const BranchIndex&) = default;

 private:
  friend BranchIndex index_branches(const HubTopology&, std::span<const SecondaryBranch>);
  std::size_t primary_count_ = 0;
  std::vector<std::string> labels_;
  std::vector<SecondaryBranch> secondaries_;
};

BranchIndex index_branches(const HubTopology& hub, std::span<const SecondaryBranch> secondaries);

}  // namespace ehub
