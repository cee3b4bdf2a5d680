#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ehub/curves.hpp"
#include "ehub/dispatch.hpp"
#include "ehub/format.hpp"

namespace ehub {
namespace {

std::string suffix(std::size_t t) { return "_t" + std::to_string(t + 1); }

double port_capacity(const Node& node, std::size_t port_index) {
  if (!node.spec) return kInf;
  const ComponentSpec& spec = *node.spec;
  const Port& port = node.ports[port_index];
  const bool is_input = port.direction == PortDirection::input;
  auto declared_output = [&]() -> double {
    auto it = spec.capacity.outputs.find(port.name);
    return it == spec.capacity.outputs.end() ? kInf : it->second;
  };
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StorageCurves>) {
          return m.power_capacity;
        } else if constexpr (std::is_same_v<T, PolynomialCurves>) {
          const auto range = polynomial_input_range(m, spec.capacity);
          if (is_input) return range.value_or(kInf);
          double cap = declared_output();
          if (range)
            for (const auto& [name, f] : m.outputs)
              if (name == port.name) cap = std::min(cap, f(*range));
          return cap;
        } else if constexpr (std::is_same_v<T, BivariateQuadratic>) {
          if (is_input) return spec.capacity.input.value_or(kInf);
          if (port.name == m.p_port) return std::min(m.p_max, declared_output());
          if (port.name == m.q_port) return std::min(m.q_max, declared_output());
          return declared_output();
        } else {
          return is_input ? spec.capacity.input.value_or(kInf) : declared_output();
        }
      },
      spec.model);
}

double branch_capacity(const HubTopology& hub, const Branch& b) {
  double cap = kInf;
  for (const auto& e : {b.from, b.to})
    if (e.kind == Endpoint::Kind::node_port) cap = std::min(cap, port_capacity(hub.nodes[e.node], e.port));
  return cap;
}

bool exports_allowed(const HubTopology& hub, const Branch& b) {
  return b.from.kind == Endpoint::Kind::hub_input && hub.inputs[b.from.terminal].allow_export;
}

void append_matrix_rows(MilpModel& model, const LabeledMatrix& m, const std::vector<std::size_t>& cols,
                        const std::string& tag, const std::vector<double>* rhs,
                        const std::vector<std::size_t>* extra_vars) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m.values(r, c) != 0.0) terms.emplace_back(cols[static_cast<std::size_t>(c)], m.values(r, c));
    if (extra_vars) terms.emplace_back((*extra_vars)[static_cast<std::size_t>(r)], -1.0);
    const double b = rhs ? (*rhs)[static_cast<std::size_t>(r)] : 0.0;
    model.add_row(m.row_labels[static_cast<std::size_t>(r)] + tag, b, b, std::move(terms));
  }
}

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::gap_limit: return "gap-limit";
    case SolveStatus::time_limit: return "time-limit";
    case SolveStatus::imported: return "imported";
  }
  return "?";
}

std::vector<std::size_t> add_continuity_constraints(MilpModel& model, const FillGroup& group, const std::string& tag) {
  std::vector<std::size_t> rows;
  const std::size_t s = group.flows.size();
  if (s < 2) return rows;
  for (std::size_t k = 0; k + 1 < s; ++k)
    rows.push_back(model.add_row("fill_lo_" + tag + "_" + std::to_string(k + 1), 0.0, kInf,
                                 {{group.flows[k], 1.0}, {group.binaries[k], -group.widths[k]}}));
  for (std::size_t k = 1; k < s; ++k)
    rows.push_back(model.add_row("fill_hi_" + tag + "_" + std::to_string(k + 1), -kInf, 0.0,
                                 {{group.flows[k], 1.0}, {group.binaries[k - 1], -group.widths[k]}}));
  return rows;
}

void add_storage_dynamics(DispatchProblem& problem, StorageBlock& block) {
  const auto& lin = problem.lin;
  const Node& node = lin.topology.nodes[block.node];
  const auto& curves = std::get<StorageCurves>(node.spec->model);
  const double dt = problem.options.dt_hours;
  std::size_t in_port = 0, out_port = 0;
  for (std::size_t p = 0; p < node.ports.size(); ++p)
    (node.ports[p].direction == PortDirection::input ? in_port : out_port) = p;
  const LinearizedComponent* lc = lin.component_for(block.node);

  for (std::size_t t = 0; t < problem.periods; ++t) {
    const auto& flows = problem.flow_vars[t];
    std::vector<std::pair<std::size_t, double>> terms{{block.soc[t], 1.0}};
    if (t > 0) terms.emplace_back(block.soc[t - 1], -1.0);
    if (lc) {
      const auto& charge = lc->curves[0];
      const auto& draw = lc->curves[1];
      const auto ch = lin.index.secondary_columns(block.node, in_port);
      const auto dis = lin.index.secondary_columns(block.node, out_port);
      for (std::size_t k = 0; k < ch.size(); ++k) terms.emplace_back(flows[ch[k]], -dt * charge.secants[k]);
      for (std::size_t k = 0; k < dis.size(); ++k) terms.emplace_back(flows[dis[k]], dt * draw.secants[k]);
    } else {
      for (std::size_t b : lin.topology.branches_at(block.node, in_port))
        terms.emplace_back(flows[b], -dt * curves.charge.intercept);
      for (std::size_t b : lin.topology.branches_at(block.node, out_port))
        terms.emplace_back(flows[b], dt / curves.discharge.intercept);
    }
    const double rhs = t == 0 ? block.initial : 0.0;
    block.soc_rows.push_back(problem.model.add_row("soc_" + node.id + suffix(t), rhs, rhs, std::move(terms)));
  }
  if (problem.options.cyclic_storage && problem.periods > 0)
    block.cyclic_row = problem.model.add_row("cyclic_" + node.id, block.initial, block.initial,
                                             {{block.soc[problem.periods - 1], 1.0}});
  if (problem.options.storage_exclusion) {
    for (std::size_t t = 0; t < problem.periods; ++t) {
      const auto& flows = problem.flow_vars[t];
      std::vector<std::pair<std::size_t, double>> ch{{block.exclusion[t], -block.power_capacity}};
      std::vector<std::pair<std::size_t, double>> dis{{block.exclusion[t], block.power_capacity}};
      for (std::size_t b : lin.topology.branches_at(block.node, in_port)) ch.emplace_back(flows[b], 1.0);
      for (std::size_t b : lin.topology.branches_at(block.node, out_port)) dis.emplace_back(flows[b], 1.0);
      problem.model.add_row("excl_ch_" + node.id + suffix(t), -kInf, 0.0, std::move(ch));
      problem.model.add_row("excl_dis_" + node.id + suffix(t), -kInf, block.power_capacity, std::move(dis));
    }
  }
}

DispatchProblem build_dispatch_problem(const LinearizedHub& lin, const SeriesData& series, std::size_t periods,
                                       const DispatchOptions& options) {
  DispatchProblem p;
  p.lin = lin;
  p.system = assemble_system(lin);
  p.series = series;
  p.periods = periods;
  p.options = options;
  const auto& hub = p.lin.topology;
  const auto& sys = p.system;

  if (series.prices.size() != hub.inputs.size() || series.demands.size() != hub.outputs.size())
    throw HubError("series do not match the hub's inputs and outputs");
  for (const auto* group : {&series.prices, &series.demands})
    for (const auto& s : *group)
      if (s.size() < periods)
        throw HubError("series has " + std::to_string(s.size()) + " periods, horizon is " + std::to_string(periods));
  if (!(options.dt_hours > 0.0)) throw HubError("period length must be positive");

  const std::size_t cols = p.lin.index.size();
  std::vector<double> col_lower(cols, 0.0), col_upper(cols, kInf);
  for (std::size_t b = 0; b < hub.branches.size(); ++b) {
    col_upper[b] = branch_capacity(hub, hub.branches[b]);
    if (exports_allowed(hub, hub.branches[b])) col_lower[b] = std::isfinite(col_upper[b]) ? -col_upper[b] : -kInf;
  }
  for (const auto& lc : p.lin.components)
    for (const auto& sp : lc.split_ports) {
      const auto secs = p.lin.index.secondary_columns(lc.node, sp.port);
      for (std::size_t k = 0; k < secs.size(); ++k) col_upper[secs[k]] = sp.widths[k];
    }

  for (std::size_t n = 0; n < hub.nodes.size(); ++n) {
    if (hub.nodes[n].kind != NodeKind::storage) continue;
    const auto& curves = std::get<StorageCurves>(hub.nodes[n].spec->model);
    StorageBlock block;
    block.node = n;
    block.energy_capacity = curves.energy_capacity;
    block.power_capacity = curves.power_capacity;
    block.initial = curves.initial_soc.value_or(0.5 * curves.energy_capacity);
    p.storages.push_back(block);
  }

  for (std::size_t t = 0; t < periods; ++t) {
    const std::string tag = suffix(t);
    std::vector<std::size_t> flows(cols);
    for (std::size_t c = 0; c < cols; ++c)
      flows[c] = p.model.add_variable(p.lin.index.label(c) + tag, col_lower[c], col_upper[c]);
    std::vector<std::size_t> inputs;
    for (std::size_t i = 0; i < hub.inputs.size(); ++i)
      inputs.push_back(p.model.add_variable("in_" + hub.inputs[i].name + tag,
                                            hub.inputs[i].allow_export ? -kInf : 0.0, kInf,
                                            series.prices[i][t] * options.dt_hours / 1000.0));
    for (const auto& lc : p.lin.components) {
      const Node& node = hub.nodes[lc.node];
      for (const auto& sp : lc.split_ports) {
        if (!sp.fill_order) continue;
        FillGroup g;
        g.period = t;
        g.node = lc.node;
        g.port = sp.port;
        for (std::size_t c : p.lin.index.secondary_columns(lc.node, sp.port)) g.flows.push_back(flows[c]);
        g.widths = sp.widths;
        for (std::size_t k = 1; k < sp.widths.size(); ++k)
          g.binaries.push_back(p.model.add_variable(
              "u_" + node.id + "_" + node.ports[sp.port].name + "_" + std::to_string(k) + tag, 0.0, 1.0, 0.0, true));
        p.groups.push_back(std::move(g));
      }
    }
    for (auto& block : p.storages) {
      const std::string& id = hub.nodes[block.node].id;
      block.soc.push_back(p.model.add_variable("soc_" + id + tag, 0.0, block.energy_capacity));
      if (options.storage_exclusion) block.exclusion.push_back(p.model.add_variable("z_" + id + tag, 0.0, 1.0, 0.0, true));
    }
    p.flow_vars.push_back(std::move(flows));
    p.input_vars.push_back(std::move(inputs));
  }

  for (std::size_t t = 0; t < periods; ++t) {
    const std::string tag = suffix(t);
    PeriodRows rows;
    rows.flow_begin = p.model.rows().size();
    std::vector<double> demand;
    for (const auto& d : series.demands) demand.push_back(d[t]);
    append_matrix_rows(p.model, sys.X, p.flow_vars[t], tag, nullptr, &p.input_vars[t]);
    append_matrix_rows(p.model, sys.Y, p.flow_vars[t], tag, &demand, nullptr);
    append_matrix_rows(p.model, sys.Z, p.flow_vars[t], tag, nullptr, nullptr);
    append_matrix_rows(p.model, sys.W, p.flow_vars[t], tag, nullptr, nullptr);
    rows.continuity_begin = p.model.rows().size();
    for (const auto& g : p.groups) {
      if (g.period != t) continue;
      const Node& node = hub.nodes[g.node];
      add_continuity_constraints(p.model, g, node.id + "_" + node.ports[g.port].name + tag);
    }
    rows.continuity_end = p.model.rows().size();
    // Branch bounds cover single-branch ports; shared ports need a sum row.
    for (std::size_t n = 0; n < hub.nodes.size(); ++n)
      for (std::size_t port = 0; port < hub.nodes[n].ports.size(); ++port) {
        const auto branches = hub.branches_at(n, port);
        const double cap = port_capacity(hub.nodes[n], port);
        if (branches.size() < 2 || !std::isfinite(cap)) continue;
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t b : branches) terms.emplace_back(p.flow_vars[t][b], 1.0);
        p.model.add_row("cap_" + hub.nodes[n].id + "_" + hub.nodes[n].ports[port].name + tag, -kInf, cap,
                        std::move(terms));
      }
    p.period_rows.push_back(rows);
  }
  for (auto& block : p.storages) add_storage_dynamics(p, block);

  if (options.check_capacity && periods > 0) {
    const auto caps = deliverable_capacity(p);
    for (std::size_t j = 0; j < hub.outputs.size(); ++j)
      for (std::size_t t = 0; t < periods; ++t) {
        const double d = series.demands[j][t];
        if (d > caps[j] + 1e-6 * std::max(1.0, caps[j]))
          throw InfeasibleDemand("demand of " + format_double(d) + " kW for output '" + hub.outputs[j].name +
                                     "' (carrier " + hub.outputs[j].carrier + ") in period " + std::to_string(t + 1) +
                                     " exceeds the deliverable " + format_double(caps[j]) + " kW",
                                 hub.outputs[j].carrier);
      }
  }
  return p;
}

std::vector<double> deliverable_capacity(const DispatchProblem& problem) {
  // Single-period relaxation: flow, balance and splitter rows of period 1,
  // no demands, no storage state, no loading order.
  const auto& sys = problem.system;
  const auto& full = problem.model;
  const std::size_t first = problem.period_rows.at(0).flow_begin;
  const auto x_rows = static_cast<std::size_t>(sys.X.rows());
  const auto y_rows = static_cast<std::size_t>(sys.Y.rows());
  const auto zw_rows = static_cast<std::size_t>(sys.Z.rows() + sys.W.rows());

  MilpModel relaxed;
  std::map<std::size_t, std::size_t> remap;
  auto var = [&](std::size_t j) {
    auto it = remap.find(j);
    if (it != remap.end()) return it->second;
    const auto& v = full.variables()[j];
    const std::size_t k = relaxed.add_variable(v.name, v.lower, v.upper);
    remap.emplace(j, k);
    return k;
  };
  for (std::size_t j : problem.flow_vars[0]) var(j);
  for (std::size_t j : problem.input_vars[0]) var(j);
  auto copy_row = [&](std::size_t i) {
    const auto& r = full.rows()[i];
    std::vector<std::pair<std::size_t, double>> terms;
    for (const auto& [j, v] : r.terms) terms.emplace_back(var(j), v);
    relaxed.add_row(r.name, r.lower, r.upper, std::move(terms));
  };
  for (std::size_t i = 0; i < x_rows; ++i) copy_row(first + i);
  for (std::size_t i = 0; i < zw_rows; ++i) copy_row(first + x_rows + y_rows + i);

  std::vector<double> caps;
  for (std::size_t j = 0; j < y_rows; ++j) {
    MilpModel m = relaxed;
    for (const auto& [col, v] : full.rows()[first + x_rows + j].terms) m.variable(remap.at(col)).cost -= v;
    const LpResult res = solve_lp(m.relaxation());
    if (res.status == LpStatus::unbounded) caps.push_back(kInf);
    else if (res.status == LpStatus::optimal) caps.push_back(std::max(0.0, -res.objective));
    else caps.push_back(0.0);
  }
  return caps;
}

double flow_residual(const DispatchProblem& problem, const DispatchSolution& solution) {
  double worst = 0;
  for (std::size_t t = 0; t < problem.periods; ++t) {
    std::vector<double> v, vin, vout;
    for (std::size_t j : problem.flow_vars[t]) v.push_back(solution.values.at(j));
    for (std::size_t j : problem.input_vars[t]) vin.push_back(solution.values.at(j));
    for (const auto& d : problem.series.demands) vout.push_back(d[t]);
    worst = std::max(worst, check_flow(problem.system, v, vin, vout));
  }
  return worst;
}

double fill_order_violation(const DispatchProblem& problem, const DispatchSolution& solution) {
  double worst = 0;
  for (const auto& g : problem.groups) {
    for (std::size_t k = 1; k < g.flows.size(); ++k) {
      if (solution.values.at(g.flows[k]) <= 1e-6 * std::max(1.0, g.widths[k])) continue;
      for (std::size_t j = 0; j < k; ++j) worst = std::max(worst, g.widths[j] - solution.values.at(g.flows[j]));
    }
  }
  return worst;
}

DispatchSolution import_solution(const DispatchProblem& problem, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw HubError("cannot open solution file '" + file.string() + "'");
  const auto names = lp_names(problem.model);
  std::map<std::string, std::size_t> lookup;
  for (std::size_t j = 0; j < names.size(); ++j) lookup.emplace(names[j], j);
  DispatchSolution sol;
  sol.status = SolveStatus::imported;
  sol.values.assign(names.size(), 0.0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string name;
    double value = 0;
    if (!(ss >> name) || name[0] == '#') continue;
    if (!(ss >> value)) throw HubError(file.string() + ":" + std::to_string(lineno) + ": expected 'name value'");
    auto it = lookup.find(name);
    if (it == lookup.end()) throw HubError(file.string() + ":" + std::to_string(lineno) + ": unknown variable '" + name + "'");
    sol.values[it->second] = value;
  }
  sol.objective = sol.bound = problem.model.objective(sol.values);
  return sol;
}

}  // namespace ehub
