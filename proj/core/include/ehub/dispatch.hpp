#pragma once

// Multi-period optimal dispatch: problem construction, branch-and-bound
// solve, schedule extraction and external-solver exchange.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ehub/assembly.hpp"
#include "ehub/milp.hpp"
#include "ehub/series.hpp"

namespace ehub {

/// Demand that no dispatch can meet, detected before solving.
class InfeasibleDemand : public HubError {
 public:
  InfeasibleDemand(const std::string& message, std::string carrier)
      : HubError(message), carrier_(std::move(carrier)) {}
  const std::string& carrier() const noexcept { return carrier_; }

 private:
  std::string carrier_;
};

struct DispatchOptions {
  double dt_hours = 1.0;
  bool cyclic_storage = true;     // E_T = E_0
  bool storage_exclusion = true;  // no simultaneous charge and discharge
  bool check_capacity = true;     // pre-solve deliverable-capacity diagnostic
};

/// Secondaries of one split port in one period whose loading order is
/// enforced by s-1 binaries.
struct FillGroup {
  std::size_t period = 0;
  std::size_t node = 0;
  std::size_t port = 0;
  std::vector<std::size_t> flows;     // model variables, segment order
  std::vector<std::size_t> binaries;  // u_1 .. u_{s-1}
  std::vector<double> widths;
};

struct StorageBlock {
  std::size_t node = 0;
  double initial = 0;          // E_0, kWh
  double energy_capacity = 0;  // kWh
  double power_capacity = 0;   // kW
  std::vector<std::size_t> soc;        // E_1 .. E_T
  std::vector<std::size_t> exclusion;  // z_t, 1 while charging is allowed
  std::vector<std::size_t> soc_rows;
  std::optional<std::size_t> cyclic_row;
};

struct PeriodRows {
  std::size_t flow_begin = 0;  // X, Y, Z, W rows of the energy-flow system
  std::size_t continuity_begin = 0;
  std::size_t continuity_end = 0;
};

struct DispatchProblem {
  LinearizedHub lin;
  EnergyFlowSystem system;
  SeriesData series;
  std::size_t periods = 0;
  DispatchOptions options;

  MilpModel model;
  std::vector<std::vector<std::size_t>> flow_vars;   // [t][column]
  std::vector<std::vector<std::size_t>> input_vars;  // [t][input]
  std::vector<FillGroup> groups;
  std::vector<StorageBlock> storages;
  std::vector<PeriodRows> period_rows;
};

DispatchProblem build_dispatch_problem(const LinearizedHub& lin, const SeriesData& series, std::size_t periods,
                                       const DispatchOptions& options = {});

/// Fill-order rows for one group: w_k u_k <= v_k for k < s and
/// v_k <= w_k u_{k-1} for k > 1. Returns the row indices.
std::vector<std::size_t> add_continuity_constraints(MilpModel& model, const FillGroup& group, const std::string& tag);

/// State-of-charge recursion, bounds and boundary condition for one storage.
void add_storage_dynamics(DispatchProblem& problem, StorageBlock& block);

/// Largest power each hub output could receive in one period when every
/// other output is free; used by the capacity diagnostic.
std::vector<double> deliverable_capacity(const DispatchProblem& problem);

enum class SolveStatus { optimal, infeasible, gap_limit, time_limit, imported };
std::string_view to_string(SolveStatus status);

struct SolveOptions {
  double relative_gap = 1e-6;
  double integrality_tol = 1e-6;
  std::optional<double> time_limit_seconds;
  std::optional<long> node_limit;
};

struct DispatchSolution {
  SolveStatus status = SolveStatus::infeasible;
  double objective = 0;
  double bound = 0;
  double root_bound = 0;
  double gap = 0;
  std::vector<double> values;  // one per model variable
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0;
};

/// Best-first branch-and-bound on the fill-order binaries.
DispatchSolution solve(const DispatchProblem& problem, const SolveOptions& options = {});

/// Largest per-period residual of the energy-flow equations.
double flow_residual(const DispatchProblem& problem, const DispatchSolution& solution);

/// Largest violation of the segment loading order over all groups.
double fill_order_violation(const DispatchProblem& problem, const DispatchSolution& solution);

struct ComponentState {
  std::string component;
  double input_kw = 0;
  std::vector<double> output_kw;  // one per schedule carrier
  std::optional<double> soc_kwh;
};

struct PeriodSchedule {
  std::size_t period = 0;
  std::vector<ComponentState> components;
  std::vector<double> purchased_kw;  // one per hub input
  double cost = 0;
};

struct DispatchSchedule {
  std::vector<std::string> carriers;
  std::vector<std::string> inputs;
  std::vector<PeriodSchedule> periods;
  double total_cost = 0;
};

DispatchSchedule extract_schedule(const DispatchProblem& problem, const DispatchSolution& solution);
std::string schedule_csv(const DispatchSchedule& schedule);

/// Reads whitespace-separated "name value" lines keyed by LP-format names.
DispatchSolution import_solution(const DispatchProblem& problem, const std::filesystem::path& file);

}  // namespace ehub
