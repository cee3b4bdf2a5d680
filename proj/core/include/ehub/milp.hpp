#pragma once

// Generic mixed-integer linear model with named variables and ranged rows.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ehub/lp.hpp"

namespace ehub {

struct MilpVariable {
  std::string name;
  double lower = 0;
  double upper = kInf;
  double cost = 0;
  bool integer = false;
};

struct MilpRow {
  std::string name;
  double lower = -kInf;
  double upper = kInf;
  std::vector<std::pair<std::size_t, double>> terms;
};

class MilpModel {
 public:
  std::size_t add_variable(std::string name, double lower, double upper, double cost = 0, bool integer = false);
  std::size_t add_row(std::string name, double lower, double upper, std::vector<std::pair<std::size_t, double>> terms);

  const std::vector<MilpVariable>& variables() const noexcept { return vars_; }
  const std::vector<MilpRow>& rows() const noexcept { return rows_; }
  MilpVariable& variable(std::size_t j) { return vars_.at(j); }
  MilpRow& row(std::size_t i) { return rows_.at(i); }
  std::size_t binary_count() const;

  /// Continuous relaxation.
  LpProblem relaxation() const;

  double objective(std::span<const double> x) const;
  /// Largest bound, row or integrality violation of x.
  double max_violation(std::span<const double> x) const;

  /// CPLEX LP text format; ranged rows become a pair of rows.
  std::string to_lp_format() const;

 private:
  std::vector<MilpVariable> vars_;
  std::vector<MilpRow> rows_;
};

/// Unique LP-format identifiers for the model's variables, in order.
std::vector<std::string> lp_names(const MilpModel& model);

}  // namespace ehub
