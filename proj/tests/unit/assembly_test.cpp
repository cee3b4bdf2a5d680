#include <gtest/gtest.h>

#include "ehub/assembly.hpp"
#include "golden.hpp"
#include "instances.hpp"

namespace ehub {
namespace {

using testing::cchp_golden;
using testing::fixture;

class Cchp : public ::testing::Test {
 protected:
  void SetUp() override {
    lin = linearize_hub(load_hub(fixture("cchp/hub.json")));
    chp = *lin.topology.find_node("chp");
    warg = *lin.topology.find_node("warg");
  }
  LinearizedHub lin;
  std::size_t chp = 0;
  std::size_t warg = 0;
};

void expect_equal(const Eigen::MatrixXd& built, const Eigen::MatrixXd& golden) {
  ASSERT_EQ(built.rows(), golden.rows());
  ASSERT_EQ(built.cols(), golden.cols());
  for (Eigen::Index r = 0; r < built.rows(); ++r)
    for (Eigen::Index c = 0; c < built.cols(); ++c)
      EXPECT_NEAR(built(r, c), golden(r, c), 1e-12) << "entry (" << r << ", " << c << ")";
}

TEST_F(Cchp, Incidence) {
  expect_equal(build_port_branch_incidence(lin, chp).values, cchp_golden("A1"));
  expect_equal(build_port_branch_incidence(lin, warg).values, cchp_golden("A2"));
}

TEST_F(Cchp, Characteristic) {
  expect_equal(build_characteristic(lin, chp).values, cchp_golden("H1"));
  expect_equal(build_characteristic(lin, warg).values, cchp_golden("H2"));
}

TEST_F(Cchp, NodalBalance) {
  expect_equal(nodal_balance(build_port_branch_incidence(lin, chp), build_characteristic(lin, chp)).values,
               cchp_golden("Z1"));
  expect_equal(nodal_balance(build_port_branch_incidence(lin, warg), build_characteristic(lin, warg)).values,
               cchp_golden("Z2"));
}

TEST_F(Cchp, SplitterConcentrator) {
  expect_equal(build_splitter_concentrator(lin, warg).values, cchp_golden("W2"));
  EXPECT_THROW(build_splitter_concentrator(lin, chp), HubError);
}

TEST_F(Cchp, InputOutputIncidence) {
  const IoIncidence io = build_io_incidence(lin);
  expect_equal(io.X.values, cchp_golden("X"));
  expect_equal(io.Y.values, cchp_golden("Y"));
}

TEST_F(Cchp, FullSystem) {
  const EnergyFlowSystem sys = assemble_system(lin);
  expect_equal(sys.stacked(), cchp_golden("system"));
  EXPECT_EQ(sys.index.labels(), testing::cchp_golden_columns());
  EXPECT_TRUE(testing::cchp_mismatches().empty());
}

TEST_F(Cchp, CheckFlowOnForwardEvaluatedFlow) {
  const EnergyFlowSystem sys = assemble_system(lin);
  // 100 kW gas; 25 kW of the CHP heat drives the WARG inside its first segment.
  std::vector<double> v{100, 35, 20, 25, 16, 25, 0, 0, 16, 0, 0};
  const std::vector<double> v_in{100};
  const std::vector<double> v_out{35, 20, 16};
  EXPECT_LE(check_flow(sys, v, v_in, v_out), 1e-9);
  v[2] += 1.0;
  EXPECT_GE(check_flow(sys, v, v_in, v_out), 1.0);

  const std::vector<double> zeros(v.size(), 0.0), zin(1, 0.0), zout(3, 0.0);
  EXPECT_EQ(check_flow(sys, zeros, zin, zout), 0.0);
}

TEST(Assembly, ConstantHubHasNoSplitterRows) {
  const LinearizedHub lin = linearize_hub(constant_approximation(load_hub(fixture("hospital_day/hub.json"))));
  const EnergyFlowSystem sys = assemble_system(lin);
  EXPECT_EQ(sys.W.rows(), 0);
  EXPECT_EQ(static_cast<std::size_t>(sys.cols()), lin.topology.branches.size());
  for (const NodeBlock& block : sys.nodes) EXPECT_EQ(block.A.cols(), sys.cols());
}

TEST(Assembly, PassThroughForcesInputEqualOutput) {
  const EnergyFlowSystem sys = assemble_system(linearize_hub(load_hub(fixture("passthrough/hub.json"))));
  const std::vector<double> v{50}, in{50}, out{50}, bad_out{40};
  EXPECT_EQ(check_flow(sys, v, in, out), 0.0);
  EXPECT_GT(check_flow(sys, v, in, bad_out), 0.0);
}

TEST(Assembly, SegmentOverrideGrowsColumns) {
  const HubTopology hub = load_hub(fixture("hospital_day/hub.json"));
  const auto cols = [&](int s) { return assemble_system(linearize_hub(hub, {.segments = s})).cols(); };
  // chp splits its input and both outputs, cerg and hs split two ports each.
  EXPECT_EQ(cols(4) - cols(2), 2 * (3 + 2 + 2));
  EXPECT_EQ(cols(2), static_cast<Eigen::Index>(hub.branches.size()) + 2 * (3 + 2 + 2));
}

TEST(Assembly, UnitJunctionCharacteristic) {
  const HubTopology hub = parse_hub(R"({
    "inputs": [{"name": "grid", "carrier": "el"}],
    "outputs": [{"name": "load", "carrier": "el"}],
    "nodes": [{"id": "bus", "kind": "junction",
               "ports": [{"name": "in", "dir": "input", "carrier": "el"},
                         {"name": "out", "dir": "output", "carrier": "el"}]}],
    "branches": [{"id": "v1", "from": "input:grid", "to": "bus.in", "carrier": "el"},
                 {"id": "v2", "from": "bus.out", "to": "output:load", "carrier": "el"}]
  })");
  const LinearizedHub lin = linearize_hub(hub);
  expect_equal(build_characteristic(lin, 0).values, (Eigen::MatrixXd(1, 2) << 1, 1).finished());
}

TEST(Assembly, MatrixJsonHasTriplets) {
  LabeledMatrix m;
  m.values = (Eigen::MatrixXd(2, 2) << 0, 1.5, -1, 0).finished();
  m.row_labels = {"r0", "r1"};
  m.col_labels = {"c0", "c1"};
  const std::string json = matrix_json(m);
  EXPECT_NE(json.find("\"triplets\""), std::string::npos);
  EXPECT_NE(json.find("1.5"), std::string::npos);
}

}  // namespace
}  // namespace ehub
