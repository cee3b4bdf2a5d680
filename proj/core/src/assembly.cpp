#include "ehub/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace ehub {
namespace {

std::string port_label(const Node& node, std::size_t port) { return node.id + "." + node.ports[port].name; }

LabeledMatrix empty_matrix(std::vector<std::string> cols) {
  LabeledMatrix m;
  m.values = Eigen::MatrixXd::Zero(0, static_cast<Eigen::Index>(cols.size()));
  m.col_labels = std::move(cols);
  return m;
}

}  // namespace

std::vector<ExpandedPort> expanded_ports(const LinearizedHub& lin, std::size_t node_index) {
  const Node& node = lin.topology.nodes.at(node_index);
  std::vector<ExpandedPort> out;
  const LinearizedComponent* lc = lin.component_for(node_index);
  if (!lc) {
    for (std::size_t p = 0; p < node.ports.size(); ++p) out.push_back({p, 0, std::nullopt, port_label(node, p)});
    return out;
  }
  std::vector<std::size_t> order;
  for (const auto& sp : lc->split_ports) order.push_back(sp.port);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ao = node.ports[a].direction == PortDirection::output;
    const bool bo = node.ports[b].direction == PortDirection::output;
    return ao != bo ? !ao : a < b;
  });
  for (std::size_t p : order) {
    for (std::size_t col : lin.index.secondary_columns(node_index, p)) {
      const int k = lin.index.secondary(col).segment;
      out.push_back({p, k, col, port_label(node, p) + "." + std::to_string(k)});
    }
  }
  return out;
}

LabeledMatrix build_port_branch_incidence(const LinearizedHub& lin, std::size_t node_index) {
  const Node& node = lin.topology.nodes.at(node_index);
  const auto ports = expanded_ports(lin, node_index);
  LabeledMatrix m;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ports.size()), static_cast<Eigen::Index>(lin.index.size()));
  m.col_labels = lin.index.labels();
  for (std::size_t r = 0; r < ports.size(); ++r) {
    const auto& ep = ports[r];
    m.row_labels.push_back(ep.label);
    const double sign = node.ports[ep.port].direction == PortDirection::input ? 1.0 : -1.0;
    if (ep.column) {
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*ep.column)) = sign;
      continue;
    }
    const auto branches = lin.topology.branches_at(node_index, ep.port);
    if (branches.empty()) throw HubError("port '" + ep.label + "' has no branch");
    for (std::size_t b : branches) m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = sign;
  }
  return m;
}

LabeledMatrix build_characteristic(const LinearizedHub& lin, std::size_t node_index) {
  const Node& node = lin.topology.nodes.at(node_index);
  const auto ports = expanded_ports(lin, node_index);
  std::vector<std::string> cols;
  for (const auto& ep : ports) cols.push_back(ep.label);
  auto col_of = [&](std::size_t port, int segment) -> Eigen::Index {
    for (std::size_t i = 0; i < ports.size(); ++i)
      if (ports[i].port == port && ports[i].segment == segment) return static_cast<Eigen::Index>(i);
    throw HubError("no expanded port " + std::to_string(port) + "/" + std::to_string(segment) + " on '" + node.id + "'");
  };

  struct Row {
    std::string label;
    std::vector<std::pair<Eigen::Index, double>> entries;
  };
  std::vector<Row> rows;

  if (const LinearizedComponent* lc = lin.component_for(node_index)) {
    const int s = lc->segments;
    switch (lc->kind) {
      case ComponentKind::siso:
      case ComponentKind::simo_proportional:
        for (const auto& c : lc->curves)
          for (int k = 1; k <= s; ++k)
            rows.push_back({node.id + ":" + node.ports[*c.value_port].name + "." + std::to_string(k),
                            {{col_of(c.argument_port, k), c.secants[k - 1]}, {col_of(*c.value_port, k), 1.0}}});
        break;
      case ComponentKind::simo_adjustable: {
        const auto& cp = lc->curves[0];
        const auto& cq = lc->curves[1];
        const std::size_t in = *cp.value_port;
        for (int k = 1; k <= s; ++k) {
          const double alpha = cp.secants[k - 1];
          const double beta = cq.secants[k - 1];
          const double scale = std::max(alpha, beta);
          Row row{node.id + ":map." + std::to_string(k), {}};
          if (scale > 0.0) {
            row.entries = {{col_of(in, k), 1.0 / scale},
                           {col_of(cp.argument_port, k), alpha / scale},
                           {col_of(cq.argument_port, k), beta / scale}};
          } else {
            row.entries = {{col_of(in, k), 1.0}};
          }
          rows.push_back(std::move(row));
        }
        break;
      }
      case ComponentKind::storage:
        break;
    }
  } else if (node.kind == NodeKind::converter) {
    const auto& model = std::get<ConstantEfficiency>(node.spec->model);
    std::size_t in = 0;
    for (std::size_t p = 0; p < node.ports.size(); ++p)
      if (node.ports[p].direction == PortDirection::input) in = p;
    for (const auto& [port_name, eta] : model.outputs) {
      const std::size_t out = *node.port_index(port_name);
      rows.push_back({node.id + ":" + port_name, {{col_of(in, 0), eta}, {col_of(out, 0), 1.0}}});
    }
  } else if (node.kind != NodeKind::storage) {
    Row row{node.id + ":balance", {}};
    for (std::size_t p = 0; p < node.ports.size(); ++p) row.entries.push_back({col_of(p, 0), 1.0});
    rows.push_back(std::move(row));
  }

  LabeledMatrix m;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  m.col_labels = std::move(cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.row_labels.push_back(rows[r].label);
    for (const auto& [c, v] : rows[r].entries) m.values(static_cast<Eigen::Index>(r), c) = v;
  }
  return m;
}

LabeledMatrix nodal_balance(const LabeledMatrix& incidence, const LabeledMatrix& characteristic) {
  if (characteristic.cols() != incidence.rows())
    throw HubError("characteristic has " + std::to_string(characteristic.cols()) + " columns but incidence has " +
                   std::to_string(incidence.rows()) + " rows");
  LabeledMatrix z;
  z.values = characteristic.values * incidence.values;
  z.row_labels = characteristic.row_labels;
  z.col_labels = incidence.col_labels;
  return z;
}

LabeledMatrix build_splitter_concentrator(const LinearizedHub& lin, std::size_t node_index) {
  const LinearizedComponent* lc = lin.component_for(node_index);
  const Node& node = lin.topology.nodes.at(node_index);
  if (!lc) throw HubError("node '" + node.id + "' is linear and has no splitter/concentrator");
  const auto ports = expanded_ports(lin, node_index);
  std::vector<std::size_t> split_order;
  for (const auto& ep : ports)
    if (split_order.empty() || split_order.back() != ep.port) split_order.push_back(ep.port);

  LabeledMatrix m;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(split_order.size()), static_cast<Eigen::Index>(lin.index.size()));
  m.col_labels = lin.index.labels();
  for (std::size_t r = 0; r < split_order.size(); ++r) {
    const std::size_t p = split_order[r];
    const auto row = static_cast<Eigen::Index>(r);
    const bool is_input = node.ports[p].direction == PortDirection::input;
    m.row_labels.push_back(port_label(node, p) + (is_input ? ":split" : ":concentrate"));
    for (std::size_t b : lin.topology.branches_at(node_index, p)) m.values(row, static_cast<Eigen::Index>(b)) = -1.0;
    for (std::size_t c : lin.index.secondary_columns(node_index, p)) m.values(row, static_cast<Eigen::Index>(c)) = 1.0;
    if (lc->mapping && lc->mapping->kappa != 0.0 && p == lc->curves[0].argument_port)
      for (std::size_t c : lin.index.secondary_columns(node_index, lc->curves[1].argument_port))
        m.values(row, static_cast<Eigen::Index>(c)) = -lc->mapping->kappa;
  }
  return m;
}

IoIncidence build_io_incidence(const LinearizedHub& lin) {
  const auto& hub = lin.topology;
  const auto cols = static_cast<Eigen::Index>(lin.index.size());
  IoIncidence io;
  io.X.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hub.inputs.size()), cols);
  io.Y.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hub.outputs.size()), cols);
  io.X.col_labels = io.Y.col_labels = lin.index.labels();
  for (std::size_t i = 0; i < hub.inputs.size(); ++i) {
    io.X.row_labels.push_back("input:" + hub.inputs[i].name);
    for (std::size_t b : hub.branches_at_input(i)) io.X.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = 1.0;
  }
  for (std::size_t j = 0; j < hub.outputs.size(); ++j) {
    io.Y.row_labels.push_back("output:" + hub.outputs[j].name);
    for (std::size_t b : hub.branches_at_output(j)) io.Y.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = 1.0;
  }
  return io;
}

namespace {

void append_rows(LabeledMatrix& into, const LabeledMatrix& block) {
  if (block.rows() == 0) return;
  Eigen::MatrixXd next(into.rows() + block.rows(), into.cols());
  next << into.values, block.values;
  into.values = std::move(next);
  into.row_labels.insert(into.row_labels.end(), block.row_labels.begin(), block.row_labels.end());
}

}  // namespace

EnergyFlowSystem assemble_system(const LinearizedHub& lin) {
  EnergyFlowSystem sys;
  sys.index = lin.index;
  auto io = build_io_incidence(lin);
  sys.X = std::move(io.X);
  sys.Y = std::move(io.Y);
  sys.Z = empty_matrix(lin.index.labels());
  sys.W = empty_matrix(lin.index.labels());

  for (std::size_t n = 0; n < lin.topology.nodes.size(); ++n) {
    NodeBlock block;
    block.node = n;
    block.A = build_port_branch_incidence(lin, n);
    block.H = build_characteristic(lin, n);
    block.Z = nodal_balance(block.A, block.H);
    append_rows(sys.Z, block.Z);
    const LinearizedComponent* lc = lin.component_for(n);
    for (Eigen::Index r = 0; r < block.Z.rows(); ++r) {
      BalanceRow row{n, std::nullopt};
      if (lc) {
        // The row's dependent secondary: the unit-coefficient output for
        // conversion rows, the input secondary for mapped rows.
        for (Eigen::Index c = static_cast<Eigen::Index>(lin.index.primary_count()); c < block.Z.cols(); ++c) {
          const double v = block.Z.values(r, c);
          if (v == 0.0) continue;
          const auto col = static_cast<std::size_t>(c);
          const auto& sec = lin.index.secondary(col);
          const bool is_output = lin.topology.nodes[n].ports[sec.port].direction == PortDirection::output;
          if (lc->kind == ComponentKind::simo_adjustable ? !is_output : is_output) row.dependent = col;
        }
      }
      sys.z_rows.push_back(row);
    }
    if (lc) {
      block.W = build_splitter_concentrator(lin, n);
      append_rows(sys.W, *block.W);
      std::optional<std::size_t> last;
      for (const auto& ep : expanded_ports(lin, n)) {
        if (last == ep.port) continue;
        sys.w_rows.push_back({n, ep.port});
        last = ep.port;
      }
    }
    sys.nodes.push_back(std::move(block));
  }
  return sys;
}

Eigen::MatrixXd EnergyFlowSystem::stacked() const {
  Eigen::MatrixXd m(rows(), cols());
  Eigen::Index r = 0;
  for (const auto* block : {&X, &Y, &Z, &W}) {
    if (block->rows() > 0) m.middleRows(r, block->rows()) = block->values;
    r += block->rows();
  }
  return m;
}

std::vector<std::string> EnergyFlowSystem::row_labels() const {
  std::vector<std::string> out;
  for (const auto* block : {&X, &Y, &Z, &W}) out.insert(out.end(), block->row_labels.begin(), block->row_labels.end());
  return out;
}

double check_flow(const EnergyFlowSystem& sys, std::span<const double> v, std::span<const double> v_in,
                  std::span<const double> v_out) {
  if (static_cast<Eigen::Index>(v.size()) != sys.cols() || static_cast<Eigen::Index>(v_in.size()) != sys.X.rows() ||
      static_cast<Eigen::Index>(v_out.size()) != sys.Y.rows())
    throw HubError("check_flow: vector lengths do not match the system");
  const Eigen::Map<const Eigen::VectorXd> flows(v.data(), static_cast<Eigen::Index>(v.size()));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.rows());
  for (std::size_t i = 0; i < v_in.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = v_in[i];
  for (std::size_t j = 0; j < v_out.size(); ++j) rhs(sys.X.rows() + static_cast<Eigen::Index>(j)) = v_out[j];
  const Eigen::VectorXd residual = sys.stacked() * flows - rhs;
  return residual.size() == 0 ? 0.0 : residual.cwiseAbs().maxCoeff();
}

std::string matrix_json(const LabeledMatrix& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["row_labels"] = m.row_labels;
  j["col_labels"] = m.col_labels;
  auto triplets = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m.values(r, c) != 0.0) triplets.push_back({r, c, m.values(r, c)});
  j["triplets"] = triplets;
  return j.dump(2) + "\n";
}

}  // namespace ehub
