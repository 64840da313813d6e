#include "swarmnet/harness.hpp"

#include <algorithm>
#include <limits>

#include "swarmnet/attacks.hpp"
#include "swarmnet/error.hpp"
#include "swarmnet/protocol.hpp"

namespace swarmnet {

using Index = Eigen::Index;

namespace {

constexpr std::size_t kEvalChunk = 64;

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

/// Scores for a list of n x L inputs, evaluated in fixed-size stacked chunks.
std::vector<std::vector<double>> score_inputs(const GraphModel& model, const GraphTopology& graph,
                                              const std::vector<Tensor2>& inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  const std::size_t n = graph.size();
  for (std::size_t first = 0; first < inputs.size(); first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, inputs.size() - first);
    std::vector<Tensor2> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(first),
                               inputs.begin() + static_cast<std::ptrdiff_t>(first + count));
    const auto scores = reconstruction_scores(model, stack_samples(chunk), graph);
    for (std::size_t b = 0; b < count; ++b)
      out.emplace_back(scores.begin() + static_cast<std::ptrdiff_t>(b * n),
                       scores.begin() + static_cast<std::ptrdiff_t>((b + 1) * n));
  }
  return out;
}

std::vector<Tensor2> corpus_inputs(const TraceCorpus& corpus, std::size_t pad_length) {
  std::vector<Tensor2> inputs;
  inputs.reserve(corpus.m());
  for (std::size_t t = 0; t < corpus.m(); ++t) inputs.push_back(preprocess_traces(corpus.tick(t), pad_length));
  return inputs;
}

SwarmResponse response_of(const TraceCorpus& corpus, std::size_t t) {
  SwarmResponse sr;
  sr.round_id = t;
  for (auto& tr : corpus.tick(t)) sr.slots.emplace_back(std::move(tr));
  return sr;
}

TrainingPhase fit(const SwarmGraph& swarm, const std::vector<Tensor2>& samples, std::size_t pad_length,
                  const TrainingOptions& options, const LogFn& log) {
  const GraphTopology graph = GraphTopology::from_bytes(swarm.size(), swarm.adjacency());
  TrainConfig cfg = options.train;
  cfg.seed = corpus_seed(options.seed, "model");
  say(log, "training " + std::string(to_string(cfg.arch)) + " on " + std::to_string(samples.size()) +
               " samples, L=" + std::to_string(pad_length) + ", " + std::to_string(cfg.epochs) + " epochs");
  const std::size_t report_every = std::max<std::size_t>(1, cfg.epochs / 5);
  TrainResult trained = train(samples, graph, cfg, [&](std::size_t epoch, double loss) {
    if ((epoch + 1) % report_every == 0 || epoch + 1 == cfg.epochs)
      say(log, "  epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(loss));
  });

  TrainingPhase phase;
  phase.epoch_loss = std::move(trained.epoch_loss);
  auto& p = phase.params;
  p.swarm_id = swarm.name();
  p.model = std::move(trained.model);
  p.pad_length = pad_length;
  p.sf = options.sf;
  p.adjacency = swarm.adjacency();
  p.t_def = compute_default_traces(samples);

  const auto scores = score_inputs(p.model, graph, samples);
  p.dt.assign(swarm.size(), std::numeric_limits<double>::infinity());
  for (const auto& s : scores)
    for (std::size_t j = 0; j < s.size(); ++j) p.dt[j] = std::min(p.dt[j], s[j]);
  phase.min_training_score = *std::min_element(p.dt.begin(), p.dt.end());
  for (auto& v : p.dt) v *= options.sf;
  for (const auto& s : scores)
    for (int f : decide(s, p.dt).flags) phase.training_flags += static_cast<std::size_t>(f);
  return phase;
}

}  // namespace

std::uint64_t corpus_seed(std::uint64_t seed, std::string_view purpose) {
  return Rng::derive(seed, purpose).next_u64();
}

TrainingPhase train_on_corpus(const SwarmGraph& swarm, const TraceCorpus& corpus, const TrainingOptions& options,
                              const LogFn& log) {
  if (corpus.m() == 0) throw ValidationError("training corpus is empty");
  if (corpus.n() != swarm.size()) throw ValidationError("training corpus does not match the swarm");
  const std::size_t L = options.pad_length.value_or(choose_pad_length(corpus.max_length()));
  return fit(swarm, corpus_inputs(corpus, L), L, options, log);
}

TrainingPhase run_training_phase(const SwarmGraph& swarm, const TrainingOptions& options, const LogFn& log) {
  if (options.m == 0) throw ValidationError("m must be at least 1");
  const ScenarioSpec scenario = find_scenario(swarm, options.scenario);
  const TraceCorpus corpus = generate_corpus(swarm, scenario, options.m, corpus_seed(options.seed, "train"));
  const std::size_t L = options.pad_length.value_or(choose_pad_length(corpus.max_length()));

  SecuritySetup sec = setup_security(swarm.wire_id(), swarm.size(), corpus_seed(options.seed, "keys"));
  Transport transport;
  std::vector<Tensor2> samples;
  samples.reserve(options.m);
  for (std::size_t t = 0; t < options.m; ++t) {
    const RoundResult round = run_round(sec.gateway, sec.nodes, corpus.tick(t), transport, t);
    if (round.response.missing() != 0)
      throw Error("protocol round " + std::to_string(t) + " returned " + std::to_string(round.response.missing()) +
                  " missing responses during training collection");
    std::vector<DataSectionTrace> traces;
    for (const auto& slot : round.response.slots) traces.push_back(*slot);
    samples.push_back(preprocess_traces(traces, L));
  }
  say(log, "collected " + std::to_string(options.m) + " protocol rounds from " + swarm.name() + "/" + scenario.id);
  return fit(swarm, samples, L, options, log);
}

std::vector<DecisionFlags> attest_batch(const AttestationParams& params, const std::vector<Tensor2>& inputs) {
  const auto scores = score_inputs(params.model, params.topology(), inputs);
  std::vector<DecisionFlags> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(decide(s, params.dt));
  return out;
}

CorpusEvaluation evaluate_corpus(const AttestationParams& params, const TraceCorpus& corpus,
                                 const std::vector<int>& labels) {
  if (labels.size() != corpus.n()) throw ShapeError("label vector does not match node count");
  CorpusEvaluation ev;
  ev.decisions = attest_batch(params, corpus_inputs(corpus, params.pad_length));
  ev.per_node.assign(corpus.n(), {});
  for (const auto& d : ev.decisions)
    for (std::size_t j = 0; j < labels.size(); ++j) ev.per_node[j].add(d.flags[j], labels[j]);
  for (const auto& c : ev.per_node) ev.total += c;
  return ev;
}

ConfusionCounts run_s1(const AttestationParams& params, const TraceCorpus& clean, std::size_t rounds,
                       std::size_t drops, std::uint64_t seed) {
  if (clean.m() == 0) throw ValidationError("S1 needs a non-empty corpus");
  std::vector<Tensor2> inputs;
  inputs.reserve(rounds);
  for (std::size_t r = 0; r < rounds; ++r) {
    const SwarmResponse sr =
        attack_s1_drop(response_of(clean, r % clean.m()), drops, Rng::derive(seed, "s1-round", r).next_u64());
    inputs.push_back(preprocess(sr, params.t_def, params.pad_length));
  }
  ConfusionCounts c;
  for (const auto& d : attest_batch(params, inputs))
    for (int f : d.flags) c.add(f, 0);
  return c;
}

std::vector<ConfusionCounts> run_s2(const AttestationParams& params, const TraceCorpus& clean, std::size_t n_bytes,
                                    std::uint64_t seed) {
  const std::size_t n = clean.n();
  std::vector<Tensor2> inputs;
  inputs.reserve(clean.m());
  for (std::size_t t = 0; t < clean.m(); ++t) {
    auto traces = clean.tick(t);
    for (std::size_t j = 0; j < n; ++j)
      traces[j] = attack_s2_perturb(traces[j], n_bytes, Rng::derive(seed, "s2-trace", t * n + j).next_u64());
    inputs.push_back(preprocess_traces(traces, params.pad_length));
  }
  std::vector<ConfusionCounts> per_node(n);
  for (const auto& d : attest_batch(params, inputs))
    for (std::size_t j = 0; j < n; ++j) per_node[j].add(d.flags[j], 1);
  return per_node;
}

S3Result run_s3(const AttestationParams& params, const TraceCorpus& clean, std::uint64_t seed) {
  const TraceCorpus shuffled = attack_s3_replay(clean, seed);
  const CorpusEvaluation ev = evaluate_corpus(params, shuffled, std::vector<int>(clean.n(), 1));
  S3Result r;
  r.per_node = ev.per_node;
  for (const auto& d : ev.decisions)
    r.swarm.add(std::any_of(d.flags.begin(), d.flags.end(), [](int f) { return f == 1; }) ? 1 : 0, 1);
  return r;
}

std::string_view to_string(CellKind k) {
  switch (k) {
    case CellKind::Authentic: return "authentic";
    case CellKind::Primary: return "primary";
    case CellKind::Propagated: return "propagated";
  }
  return "?";
}

CellKind cell_kind(const ScenarioSpec& s, NodeId node) {
  if (std::find(s.primary.begin(), s.primary.end(), node) != s.primary.end()) return CellKind::Primary;
  if (s.label.at(node) == 1) return CellKind::Propagated;
  return CellKind::Authentic;
}

const NodeCell* EvaluationReport::node(std::string_view a, std::string_view scenario, NodeId id) const {
  for (const auto& c : nodes)
    if (c.arch == a && c.scenario == scenario && c.node == id) return &c;
  return nullptr;
}

const ArchSummary* EvaluationReport::arch(std::string_view a) const {
  for (const auto& s : summary)
    if (s.arch == a) return &s;
  return nullptr;
}

std::vector<const AttackCell*> EvaluationReport::attack(std::string_view a, std::string_view name) const {
  std::vector<const AttackCell*> out;
  for (const auto& c : attacks)
    if (c.arch == a && c.attack == name) out.push_back(&c);
  return out;
}

namespace {

double rate_for(const ConfusionCounts& c, int label) {
  const Rates r = rates(c);
  const auto v = label == 1 ? r.dr : r.ar;
  return v.value_or(0.0);
}

}  // namespace

EvaluationReport run_suite(const SuiteConfig& config, const LogFn& log) {
  if (config.archs.empty()) throw ValidationError("suite needs at least one architecture");
  if (config.repeats == 0) throw ValidationError("suite needs at least one repeat");
  const SwarmGraph swarm = resolve_swarm(config.swarm);
  const std::size_t n = swarm.size();

  std::vector<ScenarioSpec> scenarios;
  if (config.scenarios.empty()) {
    scenarios = scenario_catalog(swarm);
  } else {
    for (const auto& id : config.scenarios) scenarios.push_back(find_scenario(swarm, id));
  }
  const ScenarioSpec clean_spec = find_scenario(swarm, "D2");

  EvaluationReport report;
  report.swarm = swarm.name();
  report.config = config;

  // Pooled counts, indexed [arch][scenario][node] and [arch][attack row].
  std::vector<std::vector<std::vector<ConfusionCounts>>> cells(
      config.archs.size(), std::vector<std::vector<ConfusionCounts>>(scenarios.size(), std::vector<ConfusionCounts>(n)));
  struct AttackKey {
    std::string attack, param, metric;
  };
  std::vector<AttackKey> attack_keys;
  if (config.attacks) {
    attack_keys.push_back({"S1", "drops=" + std::to_string(config.s1_drops), "accuracy"});
    for (auto b : config.s2_sweep) attack_keys.push_back({"S2", "bytes=" + std::to_string(b), "dr"});
    attack_keys.push_back({"S3", "level=swarm", "dr"});
    attack_keys.push_back({"S3", "level=node", "dr"});
  }
  std::vector<std::vector<ConfusionCounts>> attack_counts(config.archs.size(),
                                                          std::vector<ConfusionCounts>(attack_keys.size()));
  std::vector<double> min_score(config.archs.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> training_flags(config.archs.size(), 0);

  for (std::size_t rep = 0; rep < config.repeats; ++rep) {
    const std::uint64_t rseed = Rng::derive(config.seed, "repeat", rep).next_u64();
    const std::uint64_t eval_seed = corpus_seed(rseed, "eval");
    say(log, "repeat " + std::to_string(rep + 1) + "/" + std::to_string(config.repeats));

    std::vector<TraceCorpus> eval;
    for (const auto& s : scenarios) eval.push_back(generate_corpus(swarm, s, config.m_eval, eval_seed));
    std::optional<TraceCorpus> clean;
    std::optional<TraceCorpus> s1_corpus;
    if (config.attacks) {
      clean = generate_corpus(swarm, clean_spec, config.m_eval, eval_seed);
      s1_corpus = generate_corpus(swarm, clean_spec, config.s1_rounds, corpus_seed(rseed, "s1"));
    }
    std::optional<TraceCorpus> train_corpus;
    if (!config.through_protocol)
      train_corpus = generate_corpus(swarm, find_scenario(swarm, "D1"), config.m_train, corpus_seed(rseed, "train"));

    for (std::size_t a = 0; a < config.archs.size(); ++a) {
      TrainingOptions opt;
      opt.m = config.m_train;
      opt.train = config.train;
      opt.train.arch = config.archs[a];
      opt.sf = config.sf;
      opt.seed = rseed;
      const TrainingPhase phase = config.through_protocol ? run_training_phase(swarm, opt, log)
                                                          : train_on_corpus(swarm, *train_corpus, opt, log);
      const auto& params = phase.params;
      report.pad_length = params.pad_length;
      report.parameter_count = params.model.parameter_count();
      min_score[a] = std::min(min_score[a], phase.min_training_score);
      training_flags[a] += phase.training_flags;

      for (std::size_t s = 0; s < scenarios.size(); ++s) {
        const auto ev = evaluate_corpus(params, eval[s], scenarios[s].label);
        for (std::size_t j = 0; j < n; ++j) cells[a][s][j] += ev.per_node[j];
      }
      if (config.attacks) {
        std::size_t k = 0;
        attack_counts[a][k++] += run_s1(params, *s1_corpus, config.s1_rounds, config.s1_drops, corpus_seed(rseed, "s1-drop"));
        for (auto b : config.s2_sweep) {
          for (const auto& c : run_s2(params, *clean, b, corpus_seed(rseed, "s2"))) attack_counts[a][k] += c;
          ++k;
        }
        const S3Result s3 = run_s3(params, *clean, corpus_seed(rseed, "s3"));
        attack_counts[a][k++] += s3.swarm;
        for (const auto& c : s3.per_node) attack_counts[a][k] += c;
        ++k;
      }
      say(log, "  " + std::string(to_string(config.archs[a])) + " done: min training CS " +
                   std::to_string(phase.min_training_score));
    }
  }

  for (std::size_t a = 0; a < config.archs.size(); ++a) {
    const std::string arch(to_string(config.archs[a]));
    ConfusionCounts all;
    ConfusionCounts authentic;
    ConfusionCounts primary;
    ConfusionCounts propagated;
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      ConfusionCounts scen;
      for (std::size_t j = 0; j < n; ++j) {
        const auto& c = cells[a][s][j];
        NodeCell cell;
        cell.arch = arch;
        cell.scenario = scenarios[s].id;
        cell.node = static_cast<NodeId>(j);
        cell.label = scenarios[s].label[j];
        cell.kind = cell_kind(scenarios[s], cell.node);
        cell.counts = c;
        cell.rate = rate_for(c, cell.label);
        report.nodes.push_back(cell);
        scen += c;
        switch (cell.kind) {
          case CellKind::Authentic: authentic += c; break;
          case CellKind::Primary: primary += c; break;
          case CellKind::Propagated: propagated += c; break;
        }
      }
      all += scen;
      report.scenarios.push_back({arch, scenarios[s].id, scen, rates(scen).accuracy.value_or(0.0)});
    }
    for (std::size_t k = 0; k < attack_keys.size(); ++k) {
      const auto& c = attack_counts[a][k];
      const Rates r = rates(c);
      const double v = attack_keys[k].metric == "accuracy" ? r.accuracy.value_or(0.0) : r.dr.value_or(0.0);
      report.attacks.push_back({arch, attack_keys[k].attack, attack_keys[k].param, attack_keys[k].metric, c, v});
    }
    ArchSummary sum;
    sum.arch = arch;
    sum.accuracy = rates(all).accuracy;
    sum.ar_authentic = rates(authentic).ar;
    sum.dr_primary = rates(primary).dr;
    sum.dr_propagated = rates(propagated).dr;
    sum.min_training_score = min_score[a];
    sum.training_flags = training_flags[a];
    report.summary.push_back(sum);
  }
  return report;
}

}  // namespace swarmnet
