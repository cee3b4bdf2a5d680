#include <gtest/gtest.h>

#include <fstream>

#include "ehub/dispatch.hpp"
#include "ehub/oracle.hpp"
#include "instances.hpp"

namespace ehub {
namespace {

using testing::fixture;

DispatchProblem cchp_problem(double el, double heat, double cool) {
  const LinearizedHub lin = linearize_hub(load_hub(fixture("cchp/hub.json")));
  SeriesData series;
  series.prices = {{20}};
  series.demands = {{el}, {heat}, {cool}};
  return build_dispatch_problem(lin, series, 1);
}

const FillGroup& group_of(const DispatchProblem& p, const std::string& node) {
  for (const FillGroup& g : p.groups)
    if (p.lin.topology.nodes[g.node].id == node) return g;
  throw std::runtime_error("no group for " + node);
}

void expect_conserving(const DispatchProblem& p, const DispatchSolution& s) {
  EXPECT_LE(flow_residual(p, s), 1e-6);
  EXPECT_LE(fill_order_violation(p, s), 1e-6);
  EXPECT_LE(p.model.max_violation(s.values), 1e-6);
}

TEST(Dispatch, PassThroughCost) {
  const HubTopology hub = load_hub(fixture("passthrough/hub.json"));
  const DispatchProblem p = build_dispatch_problem(linearize_hub(hub), load_series(hub), 1);
  EXPECT_EQ(p.model.binary_count(), 0u);
  const DispatchSolution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
  EXPECT_EQ(schedule_csv(extract_schedule(p, s)), "period,component,input_kw,soc_kwh,purchased_grid_kw,cost\n1,hub,,,50,1\n");
}

TEST(Dispatch, HospitalDayProblemShape) {
  const HubTopology hub = load_hub(fixture("hospital_day/hub.json"));
  const DispatchProblem p = build_dispatch_problem(linearize_hub(hub, {.segments = 2}), load_series(hub), 24);
  // chp input, cerg input, storage charge and discharge groups, plus the
  // charge/discharge exclusion binary.
  EXPECT_EQ(p.model.binary_count(), 24u * (4u * (2 - 1) + 1));
  ASSERT_EQ(p.storages.size(), 1u);
  EXPECT_EQ(p.storages[0].soc.size(), 24u);
  ASSERT_TRUE(p.storages[0].cyclic_row);
  const MilpRow& cyclic = p.model.rows()[*p.storages[0].cyclic_row];
  EXPECT_EQ(cyclic.lower, cyclic.upper);
  EXPECT_EQ(p.period_rows.size(), 24u);
}

TEST(Dispatch, SingleSegmentNeedsNoFillBinaries) {
  const DispatchProblem p = build_dispatch_problem(
      linearize_hub(load_hub(fixture("cchp/hub.json")), {.segments = 1}),
      SeriesData{.prices = {{20}}, .demands = {{35}, {20}, {16}}}, 1);
  EXPECT_EQ(p.model.binary_count(), 0u);
}

TEST(Dispatch, ConstantHubIsPureLp) {
  const HubTopology hub = constant_approximation(load_hub(fixture("cchp/hub.json")));
  const DispatchProblem p =
      build_dispatch_problem(linearize_hub(hub), SeriesData{.prices = {{20}}, .demands = {{35}, {20}, {0.72 * 25}}}, 1);
  EXPECT_EQ(p.model.binary_count(), 0u);
  EXPECT_EQ(solve(p).status, SolveStatus::optimal);
}

TEST(Dispatch, SecondSegmentSetsFirstBinaryOnly) {
  // 400 kW gas, 150 kW heat into the WARG: segment 1 full, segment 2 half.
  const DispatchProblem p = cchp_problem(140, 30, 0.64 * 100 + 0.72 * 50);
  const DispatchSolution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  const FillGroup& g = group_of(p, "warg");
  ASSERT_EQ(g.binaries.size(), 2u);
  EXPECT_NEAR(s.values[g.binaries[0]], 1.0, 1e-9);
  EXPECT_NEAR(s.values[g.binaries[1]], 0.0, 1e-9);
  EXPECT_NEAR(s.values[g.flows[0]], 100.0, 1e-6);
  EXPECT_NEAR(s.values[g.flows[1]], 50.0, 1e-6);
  EXPECT_NEAR(s.objective, 20 * 0.4, 1e-9);
  expect_conserving(p, s);

  const EnumerationResult brute = brute_force_milp(p.model);
  ASSERT_TRUE(brute.feasible);
  EXPECT_NEAR(brute.objective, s.objective, 1e-9);
}

TEST(Dispatch, InfeasibleBalanceMatchesOracle) {
  // All CHP heat must go to the WARG, which then makes cooling nobody takes.
  const DispatchProblem p = cchp_problem(140, 0, 0);
  EXPECT_EQ(solve(p).status, SolveStatus::infeasible);
  EXPECT_FALSE(brute_force_milp(p.model).feasible);
}

TEST(Dispatch, UndeliverableDemandIsDiagnosed) {
  try {
    cchp_problem(35, 20, 5000);
    FAIL() << "expected InfeasibleDemand";
  } catch (const InfeasibleDemand& e) {
    EXPECT_EQ(e.carrier(), "cool");
  }
}

TEST(Dispatch, ZeroDemandDispatchesNothing) {
  const DispatchProblem p = cchp_problem(0, 0, 0);
  const DispatchSolution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  const DispatchSchedule schedule = extract_schedule(p, s);
  for (const ComponentState& c : schedule.periods[0].components) {
    EXPECT_NEAR(c.input_kw, 0.0, 1e-9) << c.component;
    for (double out : c.output_kw) EXPECT_NEAR(out, 0.0, 1e-9) << c.component;
  }
  EXPECT_NEAR(schedule.total_cost, 0.0, 1e-12);
}

TEST(Dispatch, WargInputIsSumOfSecondaries) {
  const DispatchProblem p = cchp_problem(140, 30, 0.64 * 100 + 0.72 * 50);
  const DispatchSolution s = solve(p);
  const DispatchSchedule schedule = extract_schedule(p, s);
  const FillGroup& g = group_of(p, "warg");
  double sum = 0;
  for (std::size_t f : g.flows) sum += s.values[f];
  for (const ComponentState& c : schedule.periods[0].components)
    if (c.component == "warg") EXPECT_NEAR(c.input_kw, sum, 1e-9);
}

TEST(Dispatch, MatchesEnumerationOnRandomInstances) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const testing::Instance inst = testing::random_small_instance(seed, 8);
    const DispatchProblem p = build_dispatch_problem(linearize_hub(inst.hub), inst.series, inst.periods);
    const DispatchSolution s = solve(p);
    const EnumerationResult brute = brute_force_milp(p.model);
    ASSERT_EQ(s.status == SolveStatus::optimal, brute.feasible) << inst.description;
    if (!brute.feasible) continue;
    EXPECT_NEAR(s.objective, brute.objective, 1e-6 * std::max(1.0, std::abs(brute.objective))) << inst.description;
    expect_conserving(p, s);
  }
}

TEST(Dispatch, ScheduleCostMatchesObjective) {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const testing::Instance inst = testing::random_small_instance(seed);
    const DispatchProblem p = build_dispatch_problem(linearize_hub(inst.hub), inst.series, inst.periods);
    const DispatchSolution s = solve(p);
    if (s.status != SolveStatus::optimal) continue;
    const DispatchSchedule schedule = extract_schedule(p, s);
    double recomputed = 0;
    for (const PeriodSchedule& period : schedule.periods)
      for (std::size_t i = 0; i < period.purchased_kw.size(); ++i)
        recomputed += inst.series.prices[i][period.period] * period.purchased_kw[i] / 1000.0;
    EXPECT_NEAR(recomputed, s.objective, 1e-6 * std::max(1.0, std::abs(s.objective))) << inst.description;
    EXPECT_NEAR(schedule.total_cost, s.objective, 1e-6 * std::max(1.0, std::abs(s.objective)));
  }
}

TEST(Dispatch, ImportedSolutionRoundTrip) {
  const DispatchProblem p = cchp_problem(140, 30, 0.64 * 100 + 0.72 * 50);
  const DispatchSolution s = solve(p);
  const auto path = std::filesystem::temp_directory_path() / "ehub_import_roundtrip.sol";
  {
    std::ofstream out(path);
    out << "# name value\n";
    const std::vector<std::string> names = lp_names(p.model);
    for (std::size_t j = 0; j < names.size(); ++j) out << names[j] << ' ' << s.values[j] << '\n';
  }
  const DispatchSolution imported = import_solution(p, path);
  EXPECT_EQ(imported.status, SolveStatus::imported);
  EXPECT_NEAR(imported.objective, s.objective, 1e-9);
  std::filesystem::remove(path);
}

TEST(Dispatch, NodeLimitReportsGapLimit) {
  const HubTopology hub = load_hub(fixture("hospital_day/hub.json"));
  const DispatchProblem p = build_dispatch_problem(linearize_hub(hub, {.segments = 8}), load_series(hub), 24);
  const DispatchSolution s = solve(p, {.node_limit = 3});
  EXPECT_EQ(s.status, SolveStatus::gap_limit);
  EXPECT_EQ(s.nodes, 3);
  if (s.values.empty()) EXPECT_EQ(s.objective, kInf);
  else EXPECT_LE(s.bound, s.objective + 1e-9);
}

}  // namespace
}  // namespace ehub
