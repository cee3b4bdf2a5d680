#include "instances.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>

#include "json.hpp"

namespace ehub::testing {
namespace {

using Json = nlohmann::ordered_json;

Json port(const std::string& name, const std::string& dir, const std::string& carrier) {
  return {{"name", name}, {"dir", dir}, {"carrier", carrier}};
}

Json branch(const std::string& id, const std::string& from, const std::string& to, const std::string& carrier) {
  return {{"id", id}, {"from", from}, {"to", to}, {"carrier", carrier}};
}

// Builds hubs around an electricity, a heat and a cooling bus; every
// component plugs a branch into the matching bus port.
class HubBuilder {
 public:
  HubBuilder() {
    doc_["inputs"] = Json::array({{{"name", "grid"}, {"carrier", "el"}}, {{"name", "gas"}, {"carrier", "gas"}}});
    doc_["outputs"] = Json::array({{{"name", "el"}, {"carrier", "el"}},
                                   {{"name", "heat"}, {"carrier", "heat"}},
                                   {{"name", "cool"}, {"carrier", "cool"}}});
    doc_["nodes"] = Json::array();
    doc_["branches"] = Json::array();
    bus_in("el", "grid", "input:grid");
    bus_out("el", "load", "output:el");
    bus_out("heat", "load", "output:heat");
    bus_out("cool", "load", "output:cool");
  }

  void add_node(Json node) { doc_["nodes"].push_back(std::move(node)); }

  // Energy of `carrier` flowing from `endpoint` into the bus.
  void bus_in(const std::string& carrier, const std::string& name, const std::string& endpoint) {
    buses_[carrier].push_back(port("from_" + name, "input", carrier));
    doc_["branches"].push_back(branch(carrier + "_from_" + name, endpoint, carrier + "bus.from_" + name, carrier));
  }
  void bus_out(const std::string& carrier, const std::string& name, const std::string& endpoint) {
    buses_[carrier].push_back(port("to_" + name, "output", carrier));
    doc_["branches"].push_back(branch(carrier + "_to_" + name, carrier + "bus.to_" + name, endpoint, carrier));
  }
  void gas_to(const std::string& endpoint) {
    doc_["branches"].push_back(branch("gas_" + std::to_string(gas_++), "input:gas", endpoint, "gas"));
  }

  HubTopology build() {
    Json doc = doc_;
    for (const auto& [carrier, ports] : buses_)
      doc["nodes"].push_back({{"id", carrier + "bus"}, {"kind", "junction"}, {"ports", ports}});
    return parse_hub(doc.dump());
  }

 private:
  Json doc_;
  std::map<std::string, Json> buses_{{"el", Json::array()}, {"heat", Json::array()}, {"cool", Json::array()}};
  int gas_ = 0;
};

Json converter(const std::string& id, const std::string& in_carrier,
               const std::vector<std::pair<std::string, std::string>>& outputs, Json spec) {
  Json ports = Json::array({port(in_carrier, "input", in_carrier)});
  for (const auto& [name, carrier] : outputs) ports.push_back(port(name, "output", carrier));
  return {{"id", id}, {"kind", "converter"}, {"ports", ports}, {"spec", std::move(spec)}};
}

Json constant_spec(const std::vector<std::pair<std::string, double>>& eff, std::optional<double> cap) {
  Json e = Json::object();
  for (const auto& [k, v] : eff) e[k] = v;
  Json spec{{"model", "constant"}, {"params", {{"efficiency", e}}}};
  if (cap) spec["capacity"] = {{"input", *cap}};
  return spec;
}

void add_linear_backups(HubBuilder& b) {
  b.add_node(converter("boiler", "gas", {{"heat", "heat"}}, constant_spec({{"heat", 0.8}}, std::nullopt)));
  b.gas_to("boiler.gas");
  b.bus_in("heat", "boiler", "boiler.heat");
  b.add_node(converter("chiller", "el", {{"cool", "cool"}}, constant_spec({{"cool", 2.5}}, std::nullopt)));
  b.bus_out("el", "chiller", "chiller.el");
  b.bus_in("cool", "chiller", "chiller.cool");
}

SeriesData random_series(std::mt19937_64& rng, std::size_t periods, double el_lo, double el_hi, double heat_lo,
                         double heat_hi, double cool_lo, double cool_hi) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
  SeriesData s;
  s.prices.assign(2, {});
  s.demands.assign(3, {});
  for (std::size_t t = 0; t < periods; ++t) {
    s.prices[0].push_back(round2(uni(30, 120)));
    s.prices[1].push_back(round2(uni(15, 40)));
    s.demands[0].push_back(round2(uni(el_lo, el_hi)));
    s.demands[1].push_back(round2(uni(heat_lo, heat_hi)));
    s.demands[2].push_back(round2(uni(cool_lo, cool_hi)));
  }
  return s;
}

}  // namespace

std::filesystem::path fixture(const std::string& relative) { return std::filesystem::path(EHUB_FIXTURE_DIR) / relative; }

Instance random_small_instance(std::uint64_t seed, int max_binaries) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  for (;;) {
    const std::size_t periods = static_cast<std::size_t>(pick(1, 3));
    const int count = pick(1, 2);
    std::vector<int> kinds;
    while (static_cast<int>(kinds.size()) < count) {
      const int k = pick(0, 3);
      if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    }
    std::vector<int> segments;
    int per_period = 0;
    for (int k : kinds) {
      const int s = pick(1, 4);
      segments.push_back(s);
      per_period += k == 2 ? 2 * (s - 1) + 1 : k == 3 ? 2 * (s - 1) : s - 1;
    }
    const int binaries = per_period * static_cast<int>(periods);
    if (binaries > max_binaries) continue;

    HubBuilder b;
    add_linear_backups(b);
    std::string description = "T=" + std::to_string(periods);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      const int s = segments[i];
      switch (kinds[i]) {
        case 0: {  // CHP-like SIMO with convex outputs
          const double cap = std::round(uni(300, 900));
          Json spec{{"model", "polynomial"},
                    {"params", {{"outputs", {{"el", {0, 0.2305, 0.000115}}, {"heat", {0, 0.3228, 0.0001611}}}}}},
                    {"capacity", {{"input", cap}}},
                    {"segments", s}};
          b.add_node(converter("chp", "gas", {{"el", "el"}, {"heat", "heat"}}, spec));
          b.gas_to("chp.gas");
          b.bus_in("el", "chp", "chp.el");
          b.bus_in("heat", "chp", "chp.heat");
          description += " chp(s=" + std::to_string(s) + ")";
          break;
        }
        case 1: {  // S-shaped chiller curve
          Json spec{{"model", "polynomial"},
                    {"params", {{"outputs", {{"cool", {0, 0.2593, 0.01901, -0.00003041}}}}}},
                    {"capacity", {{"input", 400}}},
                    {"segments", s}};
          b.add_node(converter("cerg", "el", {{"cool", "cool"}}, spec));
          b.bus_out("el", "cerg", "cerg.el");
          b.bus_in("cool", "cerg", "cerg.cool");
          description += " cerg(s=" + std::to_string(s) + ")";
          break;
        }
        case 2: {  // heat storage with load-dependent efficiency
          Json spec{{"model", "storage"},
                    {"params",
                     {{"charge_efficiency", {0.93, -0.0002}},
                      {"discharge_efficiency", {0.93, -0.0002}},
                      {"energy_capacity", 400},
                      {"power_capacity", 200},
                      {"initial_soc", std::round(uni(0, 400))}}},
                    {"segments", s}};
          Json node{{"id", "hs"},
                    {"kind", "storage"},
                    {"ports", Json::array({port("charge", "input", "heat"), port("discharge", "output", "heat")})},
                    {"spec", spec}};
          b.add_node(node);
          b.bus_out("heat", "hs", "hs.charge");
          b.bus_in("heat", "hs", "hs.discharge");
          description += " hs(s=" + std::to_string(s) + ")";
          break;
        }
        case 3: {  // adjustable-split gas turbine, input = F(P, Q)
          // kappa <= e/d keeps the mapped heat curve increasing from the origin.
          const double a = uni(0.0005, 0.003), d = uni(2.2, 3.2), e = uni(1.2, 1.8);
          const double kappa = uni(0.0, 0.8 * e / d);
          const double c = 2 * a * kappa, bq = a * kappa * kappa + uni(0.0005, 0.003);
          Json spec{{"model", "quadratic"},
                    {"params",
                     {{"a", a}, {"b", bq}, {"c", c}, {"d", d}, {"e", e}, {"f", 0},
                     {"p_port", "el"}, {"q_port", "heat"}, {"p_max", 200}, {"q_max", 250}}},
                    {"segments", s}};
          b.add_node(converter("gt", "gas", {{"el", "el"}, {"heat", "heat"}}, spec));
          b.gas_to("gt.gas");
          b.bus_in("el", "gt", "gt.el");
          b.bus_in("heat", "gt", "gt.heat");
          description += " gt(s=" + std::to_string(s) + ")";
          break;
        }
      }
    }
    Instance inst;
    inst.hub = b.build();
    inst.periods = periods;
    inst.series = random_series(rng, periods, 50, 300, 50, 400, 30, 300);
    inst.description = description;
    return inst;
  }
}

Instance random_constant_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto coin = [&] { return std::bernoulli_distribution(0.6)(rng); };
  const std::size_t periods = std::uniform_int_distribution<std::size_t>(1, 4)(rng);

  HubBuilder b;
  add_linear_backups(b);
  std::string description = "T=" + std::to_string(periods);
  if (coin()) {
    b.add_node(converter("chp", "gas", {{"el", "el"}, {"heat", "heat"}},
                         constant_spec({{"el", uni(0.25, 0.4)}, {"heat", uni(0.35, 0.5)}}, std::round(uni(100, 800)))));
    b.gas_to("chp.gas");
    b.bus_in("el", "chp", "chp.el");
    b.bus_in("heat", "chp", "chp.heat");
    description += " chp";
  }
  if (coin()) {
    b.add_node(converter("hp", "el", {{"heat", "heat"}}, constant_spec({{"heat", uni(2.5, 4.0)}}, std::round(uni(50, 200)))));
    b.bus_out("el", "hp", "hp.el");
    b.bus_in("heat", "hp", "hp.heat");
    description += " hp";
  }
  if (coin()) {
    b.add_node(converter("absorber", "heat", {{"cool", "cool"}},
                         constant_spec({{"cool", uni(0.6, 0.8)}}, std::round(uni(50, 300)))));
    b.bus_out("heat", "absorber", "absorber.heat");
    b.bus_in("cool", "absorber", "absorber.cool");
    description += " absorber";
  }
  if (coin()) {
    b.add_node(converter("fuelcell", "gas", {{"el", "el"}}, constant_spec({{"el", uni(0.4, 0.55)}}, std::round(uni(50, 300)))));
    b.gas_to("fuelcell.gas");
    b.bus_in("el", "fuelcell", "fuelcell.el");
    description += " fuelcell";
  }
  Instance inst;
  inst.hub = b.build();
  inst.periods = periods;
  inst.series = random_series(rng, periods, 50, 500, 50, 600, 30, 400);
  inst.description = description;
  return inst;
}

}  // namespace ehub::testing
