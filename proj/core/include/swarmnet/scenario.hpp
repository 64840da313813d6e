#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "swarmnet/swarm.hpp"

namespace swarmnet {

/// One dataset scenario: which nodes run anomalous firmware and which nodes
/// carry a ground-truth anomaly label (primary plus propagated).
struct ScenarioSpec {
  std::string id;
  std::vector<Variant> variants;
  std::vector<NodeId> primary;
  std::vector<NodeId> secondary;
  std::vector<int> label;
  /// Physical-twin scenario: fresh devices whose sensors sample with a
  /// per-device bias; static regions are untouched.
  bool physical_twin = false;
  double jitter = 0.0;

  bool is_normal() const { return primary.empty(); }
};

/// Builds a scenario from its anomaly lists; the label is 1 exactly on
/// primary and secondary nodes.
ScenarioSpec make_scenario(std::string id, std::size_t n, std::vector<NodeId> primary,
                           std::vector<NodeId> secondary, bool physical_twin = false, double jitter = 0.0);

/// Catalog for a swarm. The presets carry the published scenario tables
/// (13 rows for swarm1, 10 for swarm2); other swarms get D1..D4 plus one
/// AN_j per node labelled on the primary node only.
std::vector<ScenarioSpec> scenario_catalog(const SwarmGraph& swarm);

/// Throws ValidationError for an id missing from the catalog.
ScenarioSpec find_scenario(const SwarmGraph& swarm, std::string_view id);

std::vector<int> swarm_label(const ScenarioSpec& scenario);

/// Scenario ids whose secondary list is non-empty.
std::vector<std::string> propagated_scenarios(const SwarmGraph& swarm);

}  // namespace swarmnet
