#include <fstream>
#include <sstream>

#include "ehub/hub_model.hpp"
#include "json.hpp"

namespace ehub {
namespace {

using Json = nlohmann::ordered_json;

std::string child(const std::string& pointer, std::string_view key) {
  std::string escaped;
  for (char ch : key) {
    if (ch == '~') escaped += "~0";
    else if (ch == '/') escaped += "~1";
    else escaped.push_back(ch);
  }
  return pointer + "/" + escaped;
}

std::string child(const std::string& pointer, std::size_t index) {
  return pointer + "/" + std::to_string(index);
}

[[noreturn]] void schema_error(const std::string& message, const std::string& pointer) {
  throw ParseError("schema error: " + message, pointer.empty() ? "/" : pointer);
}

const Json& require(const Json& obj, std::string_view key, const std::string& pointer) {
  if (!obj.is_object()) schema_error("expected an object", pointer);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) schema_error("missing key '" + std::string(key) + "'", pointer);
  return *it;
}

std::string get_string(const Json& obj, std::string_view key, const std::string& pointer) {
  const Json& v = require(obj, key, pointer);
  if (!v.is_string()) schema_error("expected a string", child(pointer, key));
  return v.get<std::string>();
}

double as_number(const Json& v, const std::string& pointer) {
  if (!v.is_number()) schema_error("expected a number", pointer);
  return v.get<double>();
}

double get_number(const Json& obj, std::string_view key, const std::string& pointer) {
  return as_number(require(obj, key, pointer), child(pointer, key));
}

const Json& require_array(const Json& obj, std::string_view key, const std::string& pointer) {
  const Json& v = require(obj, key, pointer);
  if (!v.is_array()) schema_error("expected an array", child(pointer, key));
  return v;
}

std::vector<double> number_list(const Json& v, const std::string& pointer) {
  if (!v.is_array()) schema_error("expected an array of numbers", pointer);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(pointer, i)));
  return out;
}

AffineEfficiency affine(const Json& v, const std::string& pointer) {
  auto c = number_list(v, pointer);
  if (c.size() != 2) schema_error("expected [intercept, slope]", pointer);
  return {c[0], c[1]};
}

EfficiencyModel parse_model(const std::string& model, const Json& params, const std::string& ptr) {
  if (model == "constant") {
    ConstantEfficiency m;
    const Json& eff = require(params, "efficiency", ptr);
    if (!eff.is_object()) schema_error("expected an object of port -> efficiency", child(ptr, "efficiency"));
    for (auto it = eff.begin(); it != eff.end(); ++it)
      m.outputs.emplace_back(it.key(), as_number(it.value(), child(child(ptr, "efficiency"), it.key())));
    return m;
  }
  if (model == "polynomial") {
    PolynomialCurves m;
    const Json& outs = require(params, "outputs", ptr);
    if (!outs.is_object()) schema_error("expected an object of port -> coefficients", child(ptr, "outputs"));
    for (auto it = outs.begin(); it != outs.end(); ++it)
      m.outputs.emplace_back(it.key(), Polynomial(number_list(it.value(), child(child(ptr, "outputs"), it.key()))));
    return m;
  }
  if (model == "quadratic") {
    BivariateQuadratic m;
    m.a = get_number(params, "a", ptr);
    m.b = get_number(params, "b", ptr);
    m.c = get_number(params, "c", ptr);
    m.d = get_number(params, "d", ptr);
    m.e = get_number(params, "e", ptr);
    m.f = get_number(params, "f", ptr);
    m.p_port = get_string(params, "p_port", ptr);
    m.q_port = get_string(params, "q_port", ptr);
    m.p_max = get_number(params, "p_max", ptr);
    m.q_max = get_number(params, "q_max", ptr);
    return m;
  }
  if (model == "storage") {
    StorageCurves m;
    m.charge = affine(require(params, "charge_efficiency", ptr), child(ptr, "charge_efficiency"));
    m.discharge = affine(require(params, "discharge_efficiency", ptr), child(ptr, "discharge_efficiency"));
    m.energy_capacity = get_number(params, "energy_capacity", ptr);
    m.power_capacity = get_number(params, "power_capacity", ptr);
    if (params.contains("initial_soc")) m.initial_soc = get_number(params, "initial_soc", ptr);
    return m;
  }
  schema_error("unknown model '" + model + "'", child(ptr, "model"));
}

ComponentSpec parse_spec(const Json& j, const std::string& ptr) {
  ComponentSpec spec;
  const std::string model = get_string(j, "model", ptr);
  const Json empty = Json::object();
  const Json& params = j.contains("params") ? j.at("params") : empty;
  spec.model = parse_model(model, params, child(ptr, "params"));
  if (j.contains("capacity")) {
    const Json& cap = j.at("capacity");
    const std::string cptr = child(ptr, "capacity");
    if (!cap.is_object()) schema_error("expected an object", cptr);
    if (cap.contains("input")) spec.capacity.input = get_number(cap, "input", cptr);
    if (cap.contains("outputs")) {
      const Json& outs = cap.at("outputs");
      if (!outs.is_object()) schema_error("expected an object", child(cptr, "outputs"));
      for (auto it = outs.begin(); it != outs.end(); ++it)
        spec.capacity.outputs[it.key()] = as_number(it.value(), child(child(cptr, "outputs"), it.key()));
    }
  }
  if (j.contains("segments")) {
    const Json& s = j.at("segments");
    if (!s.is_number_integer()) schema_error("expected an integer", child(ptr, "segments"));
    spec.segments = s.get<int>();
  }
  if (j.contains("segment_widths")) spec.segment_widths = number_list(j.at("segment_widths"), child(ptr, "segment_widths"));
  return spec;
}

NodeKind parse_kind(const std::string& s, const std::string& ptr) {
  if (s == "converter") return NodeKind::converter;
  if (s == "storage") return NodeKind::storage;
  if (s == "splitter") return NodeKind::splitter;
  if (s == "concentrator") return NodeKind::concentrator;
  if (s == "junction") return NodeKind::junction;
  schema_error("unknown node kind '" + s + "'", ptr);
}

Endpoint resolve_endpoint(const HubTopology& hub, const std::string& text, const std::string& ptr) {
  if (text.rfind("input:", 0) == 0) {
    auto i = hub.find_input(text.substr(6));
    if (!i) throw ParseError("unknown hub input '" + text.substr(6) + "'", ptr);
    return Endpoint::at_input(*i);
  }
  if (text.rfind("output:", 0) == 0) {
    auto j = hub.find_output(text.substr(7));
    if (!j) throw ParseError("unknown hub output '" + text.substr(7) + "'", ptr);
    return Endpoint::at_output(*j);
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) schema_error("endpoint must be 'node.port', 'input:NAME' or 'output:NAME'", ptr);
  const std::string node_id = text.substr(0, dot);
  const std::string port = text.substr(dot + 1);
  auto n = hub.find_node(node_id);
  if (!n) throw ParseError("unknown node '" + node_id + "'", ptr);
  auto p = hub.nodes[*n].port_index(port);
  if (!p) throw ParseError("unknown port '" + port + "' on node '" + node_id + "'", ptr);
  return Endpoint::at_port(*n, *p);
}

}  // namespace

HubTopology parse_hub(std::string_view document, const ParseOptions& options) {
  Json root;
  try {
    root = Json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what(), "byte " + std::to_string(e.byte));
  }
  if (!root.is_object()) schema_error("top level must be an object", "");

  HubTopology hub;
  auto dup = [](const std::string& what, const std::string& id, const std::string& ptr) {
    throw ParseError("duplicate " + what + " '" + id + "'", ptr);
  };

  const Json& inputs = require_array(root, "inputs", "");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string ptr = child("/inputs", i);
    HubInput in{get_string(inputs[i], "name", ptr), get_string(inputs[i], "carrier", ptr), {}, false};
    if (inputs[i].contains("price")) in.price_series = get_string(inputs[i], "price", ptr);
    if (inputs[i].contains("allow_export")) {
      if (!inputs[i].at("allow_export").is_boolean()) schema_error("expected a boolean", child(ptr, "allow_export"));
      in.allow_export = inputs[i].at("allow_export").get<bool>();
    }
    if (hub.find_input(in.name)) dup("hub input", in.name, ptr);
    hub.inputs.push_back(std::move(in));
  }

  const Json& outputs = require_array(root, "outputs", "");
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    const std::string ptr = child("/outputs", j);
    HubOutput out{get_string(outputs[j], "name", ptr), get_string(outputs[j], "carrier", ptr), {}};
    if (outputs[j].contains("demand")) out.demand_series = get_string(outputs[j], "demand", ptr);
    if (hub.find_output(out.name)) dup("hub output", out.name, ptr);
    hub.outputs.push_back(std::move(out));
  }

  const Json& nodes = require_array(root, "nodes", "");
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const std::string ptr = child("/nodes", n);
    Node node;
    node.id = get_string(nodes[n], "id", ptr);
    node.kind = parse_kind(get_string(nodes[n], "kind", ptr), child(ptr, "kind"));
    const Json& ports = require_array(nodes[n], "ports", ptr);
    for (std::size_t p = 0; p < ports.size(); ++p) {
      const std::string pptr = child(child(ptr, "ports"), p);
      Port port;
      port.name = get_string(ports[p], "name", pptr);
      const std::string dir = get_string(ports[p], "dir", pptr);
      if (dir == "input") port.direction = PortDirection::input;
      else if (dir == "output") port.direction = PortDirection::output;
      else schema_error("port dir must be 'input' or 'output'", child(pptr, "dir"));
      port.carrier = get_string(ports[p], "carrier", pptr);
      if (node.port_index(port.name)) dup("port", port.name, pptr);
      node.ports.push_back(std::move(port));
    }
    if (nodes[n].contains("spec")) node.spec = parse_spec(nodes[n].at("spec"), child(ptr, "spec"));
    if (hub.find_node(node.id)) dup("node id", node.id, ptr);
    hub.nodes.push_back(std::move(node));
  }

  const Json& branches = require_array(root, "branches", "");
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const std::string ptr = child("/branches", b);
    Branch br;
    br.id = get_string(branches[b], "id", ptr);
    br.from = resolve_endpoint(hub, get_string(branches[b], "from", ptr), child(ptr, "from"));
    br.to = resolve_endpoint(hub, get_string(branches[b], "to", ptr), child(ptr, "to"));
    br.carrier = get_string(branches[b], "carrier", ptr);
    for (const auto& other : hub.branches)
      if (other.id == br.id) dup("branch id", br.id, ptr);
    if (options.check_carriers) {
      for (const auto& end : {br.from, br.to}) {
        const std::string c = hub.endpoint_carrier(end);
        if (c != br.carrier)
          throw ParseError("carrier mismatch: branch '" + br.id + "' carries '" + br.carrier + "' but " +
                               hub.endpoint_label(end) + " carries '" + c + "'",
                           ptr);
      }
    }
    hub.branches.push_back(std::move(br));
  }

  if (root.contains("series")) {
    const Json& series = root.at("series");
    if (!series.is_object()) schema_error("expected an object of name -> CSV path", "/series");
    for (auto it = series.begin(); it != series.end(); ++it) {
      if (!it.value().is_string()) schema_error("expected a string", child("/series", it.key()));
      hub.series.emplace_back(it.key(), it.value().get<std::string>());
    }
  }
  return hub;
}

HubTopology load_hub(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HubError("cannot open hub file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  HubTopology hub = parse_hub(buf.str(), options);
  hub.base_dir = path.parent_path();
  return hub;
}

namespace {

std::string endpoint_text(const HubTopology& hub, const Endpoint& e) { return hub.endpoint_label(e); }

Json spec_json(const ComponentSpec& spec) {
  Json j = Json::object();
  Json params = Json::object();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantEfficiency>) {
          j["model"] = "constant";
          Json eff = Json::object();
          for (const auto& [port, eta] : m.outputs) eff[port] = eta;
          params["efficiency"] = eff;
        } else if constexpr (std::is_same_v<T, PolynomialCurves>) {
          j["model"] = "polynomial";
          Json outs = Json::object();
          for (const auto& [port, poly] : m.outputs) outs[port] = poly.coefficients();
          params["outputs"] = outs;
        } else if constexpr (std::is_same_v<T, BivariateQuadratic>) {
          j["model"] = "quadratic";
          params["a"] = m.a;
          params["b"] = m.b;
          params["c"] = m.c;
          params["d"] = m.d;
          params["e"] = m.e;
          params["f"] = m.f;
          params["p_port"] = m.p_port;
          params["q_port"] = m.q_port;
          params["p_max"] = m.p_max;
          params["q_max"] = m.q_max;
        } else {
          j["model"] = "storage";
          params["charge_efficiency"] = {m.charge.intercept, m.charge.slope};
          params["discharge_efficiency"] = {m.discharge.intercept, m.discharge.slope};
          params["energy_capacity"] = m.energy_capacity;
          params["power_capacity"] = m.power_capacity;
          if (m.initial_soc) params["initial_soc"] = *m.initial_soc;
        }
      },
      spec.model);
  j["params"] = params;
  if (spec.capacity.input || !spec.capacity.outputs.empty()) {
    Json cap = Json::object();
    if (spec.capacity.input) cap["input"] = *spec.capacity.input;
    if (!spec.capacity.outputs.empty()) {
      Json outs = Json::object();
      for (const auto& [port, v] : spec.capacity.outputs) outs[port] = v;
      cap["outputs"] = outs;
    }
    j["capacity"] = cap;
  }
  if (spec.segments) j["segments"] = *spec.segments;
  if (!spec.segment_widths.empty()) j["segment_widths"] = spec.segment_widths;
  return j;
}

}  // namespace

std::string serialize_hub(const HubTopology& hub) {
  Json root = Json::object();
  Json inputs = Json::array();
  for (const auto& in : hub.inputs) {
    Json j = {{"name", in.name}, {"carrier", in.carrier}};
    if (!in.price_series.empty()) j["price"] = in.price_series;
    if (in.allow_export) j["allow_export"] = true;
    inputs.push_back(j);
  }
  Json outputs = Json::array();
  for (const auto& out : hub.outputs) {
    Json j = {{"name", out.name}, {"carrier", out.carrier}};
    if (!out.demand_series.empty()) j["demand"] = out.demand_series;
    outputs.push_back(j);
  }
  Json nodes = Json::array();
  for (const auto& n : hub.nodes) {
    Json j = {{"id", n.id}, {"kind", std::string(to_string(n.kind))}};
    Json ports = Json::array();
    for (const auto& p : n.ports)
      ports.push_back({{"name", p.name}, {"dir", std::string(to_string(p.direction))}, {"carrier", p.carrier}});
    j["ports"] = ports;
    if (n.spec) j["spec"] = spec_json(*n.spec);
    nodes.push_back(j);
  }
  Json branches = Json::array();
  for (const auto& b : hub.branches)
    branches.push_back({{"id", b.id},
                        {"from", endpoint_text(hub, b.from)},
                        {"to", endpoint_text(hub, b.to)},
                        {"carrier", b.carrier}});
  root["inputs"] = inputs;
  root["outputs"] = outputs;
  root["nodes"] = nodes;
  root["branches"] = branches;
  if (!hub.series.empty()) {
    Json series = Json::object();
    for (const auto& [name, path] : hub.series) series[name] = path;
    root["series"] = series;
  }
  return root.dump(2) + "\n";
}

}  // namespace ehub
