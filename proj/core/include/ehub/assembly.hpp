#pragma once

// Incidence, characteristic, balance and splitter/concentrator matrices, and
// the stacked energy-flow system built from them.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehub/pwl.hpp"

namespace ehub {

struct LabeledMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Ports of a node as seen by the expanded model: split ports contribute one
/// entry per segment, in index order.
struct ExpandedPort {
  std::size_t port = 0;
  int segment = 0;  // 0 for an unsplit port
  std::optional<std::size_t> column;  // secondary column when split
  std::string label;
};

std::vector<ExpandedPort> expanded_ports(const LinearizedHub& lin, std::size_t node);

LabeledMatrix build_port_branch_incidence(const LinearizedHub& lin, std::size_t node);
LabeledMatrix build_characteristic(const LinearizedHub& lin, std::size_t node);
LabeledMatrix nodal_balance(const LabeledMatrix& incidence, const LabeledMatrix& characteristic);
LabeledMatrix build_splitter_concentrator(const LinearizedHub& lin, std::size_t node);

struct IoIncidence {
  LabeledMatrix X;
  LabeledMatrix Y;
};
IoIncidence build_io_incidence(const LinearizedHub& lin);

struct BalanceRow {
  std::size_t node = 0;
  std::optional<std::size_t> dependent;  // secondary column fixed by this row
};

struct SplitRow {
  std::size_t node = 0;
  std::size_t port = 0;
};

struct NodeBlock {
  std::size_t node = 0;
  LabeledMatrix A;
  LabeledMatrix H;
  LabeledMatrix Z;
  std::optional<LabeledMatrix> W;
};

struct EnergyFlowSystem {
  BranchIndex index;
  LabeledMatrix X;
  LabeledMatrix Y;
  LabeledMatrix Z;
  LabeledMatrix W;
  std::vector<BalanceRow> z_rows;
  std::vector<SplitRow> w_rows;
  std::vector<NodeBlock> nodes;

  Eigen::Index cols() const { return static_cast<Eigen::Index>(index.size()); }
  Eigen::Index rows() const { return X.rows() + Y.rows() + Z.rows() + W.rows(); }
  Eigen::MatrixXd stacked() const;
  std::vector<std::string> row_labels() const;
};

EnergyFlowSystem assemble_system(const LinearizedHub& lin);

/// Infinity norm of [X;Y;Z;W]v - [v_in; v_out; 0; 0].
double check_flow(const EnergyFlowSystem& sys, std::span<const double> v, std::span<const double> v_in,
                  std::span<const double> v_out);

/// {rows, cols, row_labels, col_labels, triplets:[[r,c,value]]}
std::string matrix_json(const LabeledMatrix& m);

}  // namespace ehub
