#include <algorithm>
#include <sstream>

#include "ehub/dispatch.hpp"
#include "ehub/format.hpp"

namespace ehub {

DispatchSchedule extract_schedule(const DispatchProblem& problem, const DispatchSolution& solution) {
  const auto& hub = problem.lin.topology;
  const auto& x = solution.values;
  if (x.size() != problem.model.variables().size()) throw HubError("solution does not match the dispatch model");

  std::vector<std::size_t> shown;
  DispatchSchedule schedule;
  for (std::size_t n = 0; n < problem.lin.declared_nodes; ++n) {
    const Node& node = hub.nodes[n];
    if (node.kind != NodeKind::converter && node.kind != NodeKind::storage) continue;
    shown.push_back(n);
    for (const auto& port : node.ports)
      if (port.direction == PortDirection::output &&
          std::find(schedule.carriers.begin(), schedule.carriers.end(), port.carrier) == schedule.carriers.end())
        schedule.carriers.push_back(port.carrier);
  }
  for (const auto& in : hub.inputs) schedule.inputs.push_back(in.name);

  for (std::size_t t = 0; t < problem.periods; ++t) {
    PeriodSchedule ps;
    ps.period = t;
    const auto& flows = problem.flow_vars[t];
    for (std::size_t n : shown) {
      const Node& node = hub.nodes[n];
      ComponentState cs;
      cs.component = node.id;
      cs.output_kw.assign(schedule.carriers.size(), 0.0);
      for (std::size_t p = 0; p < node.ports.size(); ++p) {
        double sum = 0;
        for (std::size_t b : hub.branches_at(n, p)) sum += x[flows[b]];
        if (node.ports[p].direction == PortDirection::input) {
          cs.input_kw += sum;
        } else {
          const auto it = std::find(schedule.carriers.begin(), schedule.carriers.end(), node.ports[p].carrier);
          cs.output_kw[static_cast<std::size_t>(it - schedule.carriers.begin())] += sum;
        }
      }
      for (const auto& block : problem.storages)
        if (block.node == n) cs.soc_kwh = x[block.soc[t]];
      ps.components.push_back(std::move(cs));
    }
    for (std::size_t i = 0; i < hub.inputs.size(); ++i) {
      const double kw = x[problem.input_vars[t][i]];
      ps.purchased_kw.push_back(kw);
      ps.cost += problem.series.prices[i][t] * kw * problem.options.dt_hours / 1000.0;
    }
    schedule.total_cost += ps.cost;
    schedule.periods.push_back(std::move(ps));
  }
  return schedule;
}

std::string schedule_csv(const DispatchSchedule& schedule) {
  std::ostringstream out;
  out << "period,component,input_kw";
  for (const auto& c : schedule.carriers) out << ",out_" << sanitize_identifier(c) << "_kw";
  out << ",soc_kwh";
  for (const auto& i : schedule.inputs) out << ",purchased_" << sanitize_identifier(i) << "_kw";
  out << ",cost\n";
  const std::string empty_purchases(schedule.inputs.size(), ',');
  for (const auto& ps : schedule.periods) {
    const std::string period = std::to_string(ps.period + 1);
    for (const auto& cs : ps.components) {
      out << period << ',' << cs.component << ',' << format_double(cs.input_kw);
      for (double v : cs.output_kw) out << ',' << format_double(v);
      out << ',' << (cs.soc_kwh ? format_double(*cs.soc_kwh) : "") << empty_purchases << ",\n";
    }
    out << period << ",hub," << std::string(schedule.carriers.size(), ',') << ',';
    for (double v : ps.purchased_kw) out << ',' << format_double(v);
    out << ',' << format_double(ps.cost) << '\n';
  }
  return out.str();
}

}  // namespace ehub
