#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swarmnet/firmware.hpp"
#include "swarmnet/scenario.hpp"
#include "swarmnet/swarm.hpp"

namespace swarmnet {

/// m tick-synchronised samples of all n nodes. Immutable once built.
class TraceCorpus {
 public:
  TraceCorpus() = default;
  TraceCorpus(std::string swarm, ScenarioSpec scenario, std::size_t n, std::size_t m, std::uint64_t seed,
              std::vector<DataSectionTrace> traces);

  const std::string& swarm() const { return swarm_; }
  const ScenarioSpec& scenario() const { return scenario_; }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<DataSectionTrace>& traces() const { return traces_; }

  const DataSectionTrace& at(std::size_t tick, NodeId node) const { return traces_[tick * n_ + node]; }
  /// All n traces of one tick.
  std::vector<DataSectionTrace> tick(std::size_t t) const;
  /// Largest trace length in the corpus.
  std::size_t max_length() const;

  friend bool operator==(const TraceCorpus& a, const TraceCorpus& b) {
    return a.swarm_ == b.swarm_ && a.scenario_.id == b.scenario_.id && a.n_ == b.n_ && a.m_ == b.m_ &&
           a.seed_ == b.seed_ && a.traces_ == b.traces_;
  }

 private:
  std::string swarm_;
  ScenarioSpec scenario_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<DataSectionTrace> traces_;
};

/// Runs m ticks of the whole swarm. A pure function of its arguments.
TraceCorpus generate_corpus(const SwarmGraph& swarm, const ScenarioSpec& scenario, std::size_t m,
                            std::uint64_t seed);

/// Text format:
///   SWARMNET-CORPUS v1 <swarm_id> <scenario_id> <n> <m> <seed>
///   <tick> <node_id> <lowercase hex bytes>      (n * m lines, tick-major)
void save_corpus(const TraceCorpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const TraceCorpus& corpus);

/// Throws FormatError on a malformed header or line, odd-length hex, traces
/// longer than the SRAM size, or a grid that does not match n and m. The
/// scenario is looked up in `catalog_swarm`'s catalog when given; otherwise
/// only its id is kept.
TraceCorpus load_corpus(const std::filesystem::path& path, const SwarmGraph* catalog_swarm = nullptr);
TraceCorpus parse_corpus(std::string_view text, const SwarmGraph* catalog_swarm = nullptr);

/// Per-node independent temporal permutation (trace replay / out-of-sync
/// swarm states). Requires m >= 2.
TraceCorpus shuffle_corpus(const TraceCorpus& corpus, std::uint64_t seed);

}  // namespace swarmnet
