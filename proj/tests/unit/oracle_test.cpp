#include <gtest/gtest.h>

#include "ehub/oracle.hpp"
#include "instances.hpp"

namespace ehub {
namespace {

using testing::fixture;

const ComponentSpec& spec_of(const HubTopology& hub, const std::string& id) {
  return *hub.nodes[*hub.find_node(id)].spec;
}

TEST(TrueCurve, ComponentCurveValues) {
  const HubTopology hub = load_hub(fixture("hospital_day/hub.json"));
  EXPECT_NEAR(eval_true_curve(spec_of(hub, "cerg"), 200, "cool"), 568.98, 0.005);
  EXPECT_NEAR(eval_true_curve(spec_of(hub, "chp"), 898.7, "heat"), 420.2, 0.05);
  EXPECT_DOUBLE_EQ(eval_true_curve(spec_of(hub, "hp"), 100, "heat"), 300.0);
  EXPECT_DOUBLE_EQ(eval_true_curve(spec_of(hub, "ab"), 250, "heat"), 200.0);
  EXPECT_THROW(eval_true_curve(spec_of(hub, "cerg"), 401, "cool"), std::domain_error);
}

TEST(TrueCurve, Storage) {
  const HubTopology hub = load_hub(fixture("hospital_day/hub.json"));
  const auto& hs = std::get<StorageCurves>(spec_of(hub, "hs").model);
  EXPECT_NEAR(eval_true_storage(hs, 400, true), 364.0, 1e-9);
  EXPECT_NEAR(eval_true_storage(hs, 800, false), 898.876, 5e-4);
  EXPECT_EQ(eval_true_storage(hs, 0, false), 0.0);
}

TEST(TrueCurve, Quadratic) {
  const BivariateQuadratic q{.a = 2, .b = 3, .c = 2, .d = 4, .e = 6, .f = 10, .p_port = "p", .q_port = "q", .p_max = 5, .q_max = 5};
  EXPECT_DOUBLE_EQ(eval_true_curve(q, 1, 2), 2 + 12 + 4 + 4 + 12 + 10);
}

TEST(ApproximationError, ShrinksFromTwoToEightSegments) {
  const HubTopology hub = load_hub(fixture("hospital_day/hub.json"));
  const std::size_t chp = *hub.find_node("chp");
  const ErrorReport coarse = approximation_error(linearize_component(hub, chp, 2));
  const ErrorReport fine = approximation_error(linearize_component(hub, chp, 8));
  ASSERT_EQ(coarse.curves.size(), fine.curves.size());
  for (std::size_t i = 0; i < coarse.curves.size(); ++i) {
    EXPECT_LT(fine.curves[i].max_abs, coarse.curves[i].max_abs) << coarse.curves[i].curve;
    EXPECT_LE(fine.curves[i].mean_abs, fine.curves[i].max_abs);
  }
}

TEST(ApproximationError, LinearCurveIsExact) {
  const HubTopology hub = parse_hub(R"({
    "inputs": [{"name": "gas", "carrier": "gas"}],
    "outputs": [{"name": "heat", "carrier": "heat"}],
    "nodes": [{"id": "boiler", "kind": "converter",
               "ports": [{"name": "gas", "dir": "input", "carrier": "gas"},
                         {"name": "heat", "dir": "output", "carrier": "heat"}],
               "spec": {"model": "polynomial", "params": {"outputs": {"heat": [0, 0.85]}},
                        "capacity": {"input": 500}, "segments": 5}}],
    "branches": [{"id": "v1", "from": "input:gas", "to": "boiler.gas", "carrier": "gas"},
                 {"id": "v2", "from": "boiler.heat", "to": "output:heat", "carrier": "heat"}]
  })");
  for (const CurveError& e : approximation_error(linearize_component(hub, 0, 5)).curves) EXPECT_LE(e.max_abs, 1e-12);
}

TEST(BruteForce, ZeroBinariesIsTheLp) {
  const testing::Instance inst = testing::random_constant_instance(3);
  const DispatchProblem p = build_dispatch_problem(linearize_hub(inst.hub), inst.series, inst.periods);
  const EnumerationResult brute = brute_force_milp(p.model);
  ASSERT_TRUE(brute.feasible);
  EXPECT_EQ(brute.lps_solved, 1);
  EXPECT_NEAR(brute.objective, solve(p).objective, 1e-9 * std::max(1.0, brute.objective));
}

TEST(BruteForce, RejectsLargeModels) {
  MilpModel model;
  for (int j = 0; j < 21; ++j) model.add_variable("u" + std::to_string(j), 0, 1, 1, true);
  EXPECT_THROW(brute_force_milp(model), std::invalid_argument);
}

TEST(ConstantLp, MatchesPipeline) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const testing::Instance inst = testing::random_constant_instance(seed);
    const DispatchProblem p = build_dispatch_problem(linearize_hub(inst.hub), inst.series, inst.periods);
    const DispatchSolution s = solve(p);
    const DenseLpResult direct = dense_simplex(constant_dispatch_lp(inst.hub, inst.series, inst.periods));
    ASSERT_EQ(s.status == SolveStatus::optimal, direct.feasible) << inst.description;
    if (direct.feasible) EXPECT_NEAR(s.objective, direct.objective, 1e-9 * std::max(1.0, direct.objective)) << inst.description;
  }
}

TEST(Reference, ConstantHubIgnoresSegments) {
  const testing::Instance inst = testing::random_constant_instance(11);
  const double lp = solve(build_dispatch_problem(linearize_hub(inst.hub), inst.series, inst.periods)).objective;
  EXPECT_NEAR(reference_dispatch(inst.hub, inst.series, inst.periods, {}, 50), lp, 1e-9 * std::max(1.0, lp));
}

TEST(Reference, Deterministic) {
  const testing::Instance inst = testing::random_small_instance(5);
  const double a = reference_dispatch(inst.hub, inst.series, inst.periods, {}, 20);
  const double b = reference_dispatch(inst.hub, inst.series, inst.periods, {}, 20);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace ehub
