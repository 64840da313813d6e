#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmnet/attestation.hpp"
#include "swarmnet/corpus.hpp"
#include "swarmnet/metrics.hpp"
#include "swarmnet/train.hpp"

namespace swarmnet {

using LogFn = std::function<void(const std::string&)>;

struct TrainingOptions {
  std::size_t m = 500;
  std::string scenario = "D1";
  TrainConfig train;
  double sf = kDefaultScalingFactor;
  std::optional<std::size_t> pad_length;  ///< default: choose_pad_length(max training d)
  std::uint64_t seed = 1;
};

struct TrainingPhase {
  AttestationParams params;
  std::vector<double> epoch_loss;
  double min_training_score = 0.0;
  std::size_t training_flags = 0;  ///< anomalous flags raised on the training set itself
};

/// Seed of the corpus used for a purpose ("train", "eval", "s1", ...) under a run seed.
std::uint64_t corpus_seed(std::uint64_t seed, std::string_view purpose);

/// Collects m rounds over a lossless transport from a simulation of the
/// training scenario, then trains and derives DT and T_def. Throws Error if
/// any round returns a Missing slot.
TrainingPhase run_training_phase(const SwarmGraph& swarm, const TrainingOptions& options, const LogFn& log = {});

/// Same, from an already collected corpus (no protocol).
TrainingPhase train_on_corpus(const SwarmGraph& swarm, const TraceCorpus& corpus, const TrainingOptions& options,
                              const LogFn& log = {});

/// Per-tick decisions for a whole corpus.
struct CorpusEvaluation {
  std::vector<DecisionFlags> decisions;  ///< one per tick
  std::vector<ConfusionCounts> per_node;
  ConfusionCounts total;
};

/// Attests every tick of the corpus (batched) against the given per-node labels.
CorpusEvaluation evaluate_corpus(const AttestationParams& params, const TraceCorpus& corpus,
                                 const std::vector<int>& labels);

/// Attests a batch of n x L inputs; identical to attest_input applied per input.
std::vector<DecisionFlags> attest_batch(const AttestationParams& params, const std::vector<Tensor2>& inputs);

/// S1 over `rounds` ticks of a clean corpus (cycled if shorter), `drops` slots each; all labels 0.
ConfusionCounts run_s1(const AttestationParams& params, const TraceCorpus& clean, std::size_t rounds,
                       std::size_t drops, std::uint64_t seed);

/// S2 with `n_bytes` perturbed in every node's trace of every tick; all labels 1.
std::vector<ConfusionCounts> run_s2(const AttestationParams& params, const TraceCorpus& clean, std::size_t n_bytes,
                                    std::uint64_t seed);

struct S3Result {
  ConfusionCounts swarm;  ///< one decision per tick: anomalous if any node is flagged
  std::vector<ConfusionCounts> per_node;
};

/// S3 on a temporally shuffled copy of a clean corpus; all labels 1.
S3Result run_s3(const AttestationParams& params, const TraceCorpus& clean, std::uint64_t seed);

enum class CellKind { Authentic, Primary, Propagated };
std::string_view to_string(CellKind k);
CellKind cell_kind(const ScenarioSpec& s, NodeId node);

inline const std::vector<std::size_t>& default_s2_sweep() {
  static const std::vector<std::size_t> sweep{1, 2, 4, 6, 8, 10, 15, 20, 30, 40};
  return sweep;
}

struct SuiteConfig {
  std::string swarm = "swarm1";
  std::vector<Arch> archs{Arch::GT};
  std::size_t repeats = 3;
  std::uint64_t seed = 1;
  std::size_t m_train = 500;
  std::size_t m_eval = 400;
  TrainConfig train;
  double sf = kDefaultScalingFactor;
  bool through_protocol = true;
  bool attacks = true;
  std::size_t s1_rounds = 500;
  std::size_t s1_drops = 1;
  std::vector<std::size_t> s2_sweep = default_s2_sweep();
  std::vector<std::string> scenarios;  ///< empty: whole catalog
};

struct NodeCell {
  std::string arch;
  std::string scenario;
  NodeId node = 0;
  int label = 0;
  CellKind kind = CellKind::Authentic;
  ConfusionCounts counts;  ///< pooled over repeats
  double rate = 0.0;       ///< AR for label 0, DR for label 1
};

struct ScenarioCell {
  std::string arch;
  std::string scenario;
  ConfusionCounts counts;
  double accuracy = 0.0;
};

struct AttackCell {
  std::string arch;
  std::string attack;  ///< S1, S2, S3
  std::string param;   ///< drops=1, bytes=10, level=swarm|node
  std::string metric;  ///< accuracy or dr
  ConfusionCounts counts;
  double value = 0.0;
};

struct ArchSummary {
  std::string arch;
  std::optional<double> accuracy;
  std::optional<double> ar_authentic;
  std::optional<double> dr_primary;
  std::optional<double> dr_propagated;
  double min_training_score = 0.0;
  std::size_t training_flags = 0;
};

struct EvaluationReport {
  std::string swarm;
  SuiteConfig config;
  std::size_t pad_length = 0;
  std::size_t parameter_count = 0;
  std::vector<NodeCell> nodes;
  std::vector<ScenarioCell> scenarios;
  std::vector<AttackCell> attacks;
  std::vector<ArchSummary> summary;

  const NodeCell* node(std::string_view arch, std::string_view scenario, NodeId node) const;
  const ArchSummary* arch(std::string_view arch) const;
  std::vector<const AttackCell*> attack(std::string_view arch, std::string_view attack) const;
};

/// For each arch and repeat: train, evaluate every scenario and attack,
/// pool counts over repeats. Corpora depend only on the repeat seed, so all
/// archs see identical data.
EvaluationReport run_suite(const SuiteConfig& config, const LogFn& log = {});

}  // namespace swarmnet
