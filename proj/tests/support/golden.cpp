#include "golden.hpp"

#include <fstream>

#include "ehub/assembly.hpp"
#include "instances.hpp"
#include "json.hpp"

namespace ehub::testing {
namespace {

const nlohmann::json& golden_document() {
  static const nlohmann::json doc = [] {
    std::ifstream in(fixture("cchp/golden.json"));
    return nlohmann::json::parse(in);
  }();
  return doc;
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

Eigen::MatrixXd cchp_golden(const std::string& name) {
  const nlohmann::json& doc = golden_document();
  const nlohmann::json& rows = doc.at(name);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const nlohmann::json& v = rows.at(r).at(c);
      m(r, c) = v.is_string() ? doc.at("bindings").at(v.get<std::string>()).get<double>() : v.get<double>();
    }
  return m;
}

std::vector<std::string> cchp_golden_columns() {
  return golden_document().at("columns").get<std::vector<std::string>>();
}

std::vector<std::string> cchp_mismatches() {
  const LinearizedHub lin = linearize_hub(load_hub(fixture("cchp/hub.json")));
  const EnergyFlowSystem sys = assemble_system(lin);
  const std::size_t chp = *lin.topology.find_node("chp");
  const std::size_t warg = *lin.topology.find_node("warg");

  std::vector<std::string> bad;
  const auto check = [&](const std::string& name, const Eigen::MatrixXd& built) {
    if (!same(built, cchp_golden(name))) bad.push_back(name);
  };
  check("A1", build_port_branch_incidence(lin, chp).values);
  check("A2", build_port_branch_incidence(lin, warg).values);
  check("H1", build_characteristic(lin, chp).values);
  check("H2", build_characteristic(lin, warg).values);
  check("Z1", nodal_balance(build_port_branch_incidence(lin, chp), build_characteristic(lin, chp)).values);
  check("Z2", nodal_balance(build_port_branch_incidence(lin, warg), build_characteristic(lin, warg)).values);
  check("W2", build_splitter_concentrator(lin, warg).values);
  check("X", sys.X.values);
  check("Y", sys.Y.values);
  check("system", sys.stacked());
  if (sys.index.labels() != cchp_golden_columns()) bad.push_back("columns");
  return bad;
}

}  // namespace ehub::testing
