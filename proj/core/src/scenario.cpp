#include "swarmnet/scenario.hpp"

#include <algorithm>

#include "swarmnet/error.hpp"

namespace swarmnet {

namespace {

constexpr double kTwinJitter = 0.05;

}  // namespace

ScenarioSpec make_scenario(std::string id, std::size_t n, std::vector<NodeId> primary, std::vector<NodeId> secondary,
                           bool physical_twin, double jitter) {
  ScenarioSpec s;
  s.id = std::move(id);
  s.variants.assign(n, Variant::Normal);
  s.label.assign(n, 0);
  for (NodeId p : primary) {
    if (p >= n) throw ValidationError("scenario " + s.id + ": primary node " + std::to_string(p) + " out of range");
    s.variants[p] = Variant::Anomalous;
    s.label[p] = 1;
  }
  for (NodeId q : secondary) {
    if (q >= n) throw ValidationError("scenario " + s.id + ": secondary node " + std::to_string(q) + " out of range");
    s.label[q] = 1;
  }
  s.primary = std::move(primary);
  s.secondary = std::move(secondary);
  s.physical_twin = physical_twin;
  s.jitter = jitter;
  return s;
}

std::vector<ScenarioSpec> scenario_catalog(const SwarmGraph& swarm) {
  const std::size_t n = swarm.size();
  std::vector<ScenarioSpec> c;
  if (swarm.name() == "swarm1" && n == 4) {
    c.push_back(make_scenario("D1", n, {}, {}));
    c.push_back(make_scenario("D2", n, {}, {}));
    c.push_back(make_scenario("P1", n, {}, {}, true, kTwinJitter));
    c.push_back(make_scenario("P2", n, {}, {}, true, kTwinJitter));
    c.push_back(make_scenario("AN_0", n, {0}, {}));
    c.push_back(make_scenario("AN_1", n, {1}, {2, 3}));
    c.push_back(make_scenario("AN_2", n, {2}, {3}));
    c.push_back(make_scenario("AN_3", n, {3}, {}));
    c.push_back(make_scenario("AN_12", n, {1, 2}, {3}));
    c.push_back(make_scenario("AN_23", n, {2, 3}, {}));
    c.push_back(make_scenario("AN_13", n, {1, 3}, {2}));
    c.push_back(make_scenario("AN_123", n, {1, 2, 3}, {2, 3}));
    c.push_back(make_scenario("AN_0123", n, {0, 1, 2, 3}, {2, 3}));
    return c;
  }
  if (swarm.name() == "swarm2" && n == 6) {
    for (int i = 1; i <= 4; ++i) c.push_back(make_scenario("D" + std::to_string(i), n, {}, {}));
    c.push_back(make_scenario("AN_0", n, {0}, {}));
    c.push_back(make_scenario("AN_1", n, {1}, {2, 3}));
    c.push_back(make_scenario("AN_2", n, {2}, {3}));
    c.push_back(make_scenario("AN_3", n, {3}, {}));
    c.push_back(make_scenario("AN_4", n, {4}, {5}));
    c.push_back(make_scenario("AN_5", n, {5}, {}));
    return c;
  }
  for (int i = 1; i <= 4; ++i) c.push_back(make_scenario("D" + std::to_string(i), n, {}, {}));
  for (NodeId j = 0; j < n; ++j) c.push_back(make_scenario("AN_" + std::to_string(j), n, {j}, {}));
  return c;
}

ScenarioSpec find_scenario(const SwarmGraph& swarm, std::string_view id) {
  for (auto& s : scenario_catalog(swarm))
    if (s.id == id) return s;
  throw ValidationError("unknown scenario '" + std::string(id) + "' for swarm " + swarm.name());
}

std::vector<int> swarm_label(const ScenarioSpec& scenario) { return scenario.label; }

std::vector<std::string> propagated_scenarios(const SwarmGraph& swarm) {
  std::vector<std::string> out;
  for (const auto& s : scenario_catalog(swarm))
    if (!s.secondary.empty()) out.push_back(s.id);
  return out;
}

}  // namespace swarmnet
