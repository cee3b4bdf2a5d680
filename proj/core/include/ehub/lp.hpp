#pragma once

// Bounded-variable revised primal simplex for
//   min c'x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.

#include <Eigen/SparseCore>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

namespace ehub {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpProblem {
  std::shared_ptr<const Eigen::SparseMatrix<double>> matrix;  // rows x cols, column major
  std::vector<double> cost;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<double> row_lower;
  std::vector<double> row_upper;

  std::size_t cols() const { return cost.size(); }
  std::size_t rows() const { return row_lower.size(); }
};

enum class VarStatus : std::uint8_t { basic, at_lower, at_upper, free_zero };

/// Status of every structural column followed by every row's logical.
struct Basis {
  std::vector<VarStatus> status;
  bool empty() const { return status.empty(); }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0;
  std::vector<double> x;
  std::vector<double> row_activity;
  Basis basis;
  long iterations = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 100;
  long max_iterations = 0;  // 0 picks a limit from the problem size
};

/// Starts from `warm` when it describes a basis of the right shape, from the
/// all-logical basis otherwise.
LpResult solve_lp(const LpProblem& problem, const LpOptions& options = {}, const Basis* warm = nullptr);

}  // namespace ehub
