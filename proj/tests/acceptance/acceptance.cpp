// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "swarmnet/adam.hpp"
#include "swarmnet/attestation.hpp"
#include "swarmnet/corpus.hpp"
#include "swarmnet/harness.hpp"
#include "swarmnet/report.hpp"
#include "swarmnet/transport.hpp"

using namespace swarmnet;
using namespace swarmnet::testing;

namespace {

constexpr double kOracleTol = 1e-9;
constexpr double kGradRelTol = 1e-4;
constexpr double kAdamTol = 1e-12;
constexpr double kOracleSeconds = 30.0;
constexpr double kMinAuthenticAr = 0.99;
constexpr double kCleanSeconds = 300.0;
constexpr double kMinPrimaryDr = 0.99;
constexpr double kMinPropagatedDr = 0.90;
constexpr double kMinS1Accuracy = 0.99;
constexpr std::size_t kMinS1Rounds = 500;
constexpr double kMinS2Dr = 0.95;
constexpr std::size_t kS2FromBytes = 10;
constexpr double kS2MonotoneSlack = 0.02;
constexpr double kS3Lo = 0.70;
constexpr double kS3Hi = 1.00;
constexpr double kAttestMillis = 10.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& name, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1

double layer_oracle_error() {
  double worst = 0.0;
  for (Arch arch : {Arch::GCN, Arch::GAT, Arch::GT}) {
    Rng rng(hash_label("acceptance/oracle") + static_cast<int>(arch));
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng.below(6);
      const Tensor2 a = random_adjacency(rng, n);
      const Tensor2 h = random_tensor(rng, (1 + rng.below(3)) * n, 1 + rng.below(7));
      const std::size_t fout = 1 + rng.below(5);
      std::vector<Tensor2> p;
      for (auto [r, c] : layer_param_shapes(arch, h.cols(), fout)) p.push_back(random_tensor(rng, r, c));
      const GraphTopology g(a);
      for (Activation act : {Activation::Identity, Activation::Relu}) {
        const bool relu_on = act == Activation::Relu;
        Tensor2 want;
        switch (arch) {
          case Arch::GCN: want = gcn_oracle(h, a, p[0], p[1], relu_on); break;
          case Arch::GAT: want = gat_oracle(h, a, p[0], p[1], p[2], p[3], relu_on); break;
          case Arch::GT: want = gt_oracle(h, a, p, relu_on); break;
        }
        worst = std::max(worst, (layer_forward(arch, p, h, g, act) - want).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

double gradient_error() {
  double worst = 0.0;
  for (Arch arch : {Arch::GCN, Arch::GAT, Arch::GT}) {
    Rng rng(hash_label("acceptance/fd") + static_cast<int>(arch));
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t n = 2 + rng.below(4);
      const GraphTopology g(random_adjacency(rng, n, 0.5));
      GraphModel model(arch, {5, 4, 3});
      glorot_init(model, 200 + trial);
      for (auto& t : model.params()) t += random_tensor(rng, t.rows(), t.cols(), 0.1);
      const Tensor2 target = random_tensor(rng, 2 * n, 5, 0.5).array() + 0.5;
      const Tensor2 input = target + random_tensor(rng, 2 * n, 5, 0.2);
      const Gradients grad = backward(model, target, input, g);
      const double step = 1e-5;
      for (std::size_t k = 0; k < model.params().size(); ++k) {
        Tensor2& t = model.params()[k];
        for (Eigen::Index e = 0; e < t.size(); ++e) {
          const double saved = t.data()[e];
          t.data()[e] = saved + step;
          const double up = mse(target, model_forward(model, input, g));
          t.data()[e] = saved - step;
          const double down = mse(target, model_forward(model, input, g));
          t.data()[e] = saved;
          const double numeric = (up - down) / (2 * step);
          const double analytic = grad.grads[k].data()[e];
          const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
          worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
      }
    }
  }
  return worst;
}

double adam_error() {
  Rng rng(hash_label("acceptance/adam"));
  AdamConfig cfg;
  std::vector<Tensor2> params{random_tensor(rng, 3, 4), random_tensor(rng, 1, 4)};
  std::vector<Tensor2> ref = params;
  std::vector<std::vector<double>> m(2), v(2);
  for (std::size_t k = 0; k < 2; ++k) {
    m[k].assign(ref[k].size(), 0.0);
    v[k].assign(ref[k].size(), 0.0);
  }
  AdamState state(params, cfg);
  double worst = 0.0;
  for (int t = 1; t <= 50; ++t) {
    std::vector<Tensor2> grads{random_tensor(rng, 3, 4), random_tensor(rng, 1, 4)};
    adam_step(state, params, grads);
    for (std::size_t k = 0; k < 2; ++k)
      for (Eigen::Index e = 0; e < ref[k].size(); ++e) {
        double& theta = ref[k].data()[e];
        const double g = grads[k].data()[e] + cfg.weight_decay * theta;
        m[k][e] = cfg.beta1 * m[k][e] + (1 - cfg.beta1) * g;
        v[k][e] = cfg.beta2 * v[k][e] + (1 - cfg.beta2) * g * g;
        const double mh = m[k][e] / (1 - std::pow(cfg.beta1, t));
        const double vh = v[k][e] / (1 - std::pow(cfg.beta2, t));
        theta -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        worst = std::max(worst, std::abs(theta - params[k].data()[e]));
      }
  }
  return worst;
}

void criterion_oracles() {
  const auto t0 = Clock::now();
  const double layer = layer_oracle_error();
  const double grad = gradient_error();
  const double adam = adam_error();
  const double secs = seconds_since(t0);
  verdict(1, layer <= kOracleTol && grad <= kGradRelTol && adam <= kAdamTol && secs < kOracleSeconds,
          "numerical oracles",
          fmt("layer max err %.2e (<= %.0e), gradient max rel err %.2e (<= %.0e), adam max err %.2e (<= %.0e), "
              "%.1f s (< %.0f s)",
              layer, kOracleTol, grad, kGradRelTol, adam, kAdamTol, secs, kOracleSeconds));
}

// ---------------------------------------------------------------------------
// 9

struct AdversaryTally {
  std::size_t runs = 0;
  std::size_t leaked = 0;  ///< adversarial messages that were accepted
  std::size_t liveness_failures = 0;
};

std::vector<DataSectionTrace> demo_traces(std::size_t n) {
  std::vector<DataSectionTrace> t;
  for (std::size_t j = 0; j < n; ++j) t.push_back({static_cast<NodeId>(j), 0, Bytes(48 + 3 * j, 0x3c)});
  return t;
}

// Adversarial deliveries are those the rule touched; the only accepted
// delivery of a (type, node) pair per round must be the genuine one.
std::size_t accepted(const RoundResult& r, MsgType type, NodeId node) {
  std::size_t k = 0;
  for (const auto& e : r.events)
    if (e.what == "deliver" && e.type == type && e.node == node && e.outcome == Reject::None) ++k;
  return k;
}

void criterion_protocol() {
  constexpr std::size_t n = 3;
  constexpr std::uint16_t swarm = 9;
  const auto traces = demo_traces(n);
  AdversaryTally tally;

  auto run = [&](TransportPolicy policy, std::size_t rounds, std::uint64_t seed,
                 const std::function<void(std::size_t, const RoundResult&, const SecuritySetup&)>& check) {
    SecuritySetup s = setup_security(swarm, n, seed);
    Transport transport(std::move(policy));
    for (std::size_t r = 0; r < rounds; ++r) check(r, run_round(s.gateway, s.nodes, traces, transport, r), s);
    ++tally.runs;
  };
  auto rule = [](PolicyAction a, MsgType type, NodeId node, std::optional<std::uint64_t> round = {}) {
    PolicyRule r;
    r.action = a;
    r.msg_type = type;
    r.node = node;
    r.round = round;
    TransportPolicy p;
    p.rules.push_back(r);
    return p;
  };

  const std::vector<MsgType> types{MsgType::Req, MsgType::Resp, MsgType::Update};
  for (MsgType type : types)
    for (NodeId j = 0; j < n; ++j) {
      run(rule(PolicyAction::Replay, type, j, 0), 2, j, [&](std::size_t r, const RoundResult& res, const SecuritySetup&) {
        if (r == 0 && accepted(res, type, j) > 1) ++tally.leaked;
        if (res.response.missing() != 0) ++tally.liveness_failures;
      });
      run(rule(PolicyAction::ReplayNextRound, type, j, 0), 3, j,
          [&](std::size_t r, const RoundResult& res, const SecuritySetup&) {
            if (r == 1 && accepted(res, type, j) > 1) ++tally.leaked;
            if (res.response.missing() != 0) ++tally.liveness_failures;
          });
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TransportPolicy p = rule(PolicyAction::Forge, type, j, 0);
        p.seed = seed;
        run(p, 1, seed, [&](std::size_t, const RoundResult& res, const SecuritySetup&) {
          if (accepted(res, type, j) > 1) ++tally.leaked;
        });
      }
    }

  for (MsgType type : types) {
    const std::size_t payload = type == MsgType::Req ? 0 : type == MsgType::Update ? 32 : 32 + traces[1].bytes.size();
    const std::size_t bits = (kWireHeaderBytes + payload + kWireMacBytes) * 8;
    for (std::size_t bit = 0; bit < bits; ++bit) {
      TransportPolicy p = rule(PolicyAction::FlipBit, type, 1, 0);
      p.rules[0].bit = bit;
      run(p, 3, bit, [&](std::size_t r, const RoundResult& res, const SecuritySetup&) {
        if (r == 0 && accepted(res, type, 1) != 0) ++tally.leaked;
        if (r == 2 && res.response.missing() != 0) ++tally.liveness_failures;
      });
    }
  }

  bool rotation = true;
  {
    SecuritySetup s = setup_security(swarm, n, 77);
    Transport transport(TransportPolicy::lossless());
    std::vector<std::set<Block16>> seen(n);
    for (std::size_t j = 0; j < n; ++j) seen[j].insert(s.nodes[j].c);
    for (std::size_t r = 0; r < 10; ++r) {
      const RoundResult res = run_round(s.gateway, s.nodes, traces, transport, r);
      rotation &= res.response.missing() == 0;
      for (std::size_t j = 0; j < n; ++j)
        rotation &= s.nodes[j].c == s.gateway.nodes[j].c && seen[j].insert(s.nodes[j].c).second;
    }
  }

  bool resync = true;
  for (MsgType lost : {MsgType::Update, MsgType::Resp, MsgType::Req})
    run(rule(PolicyAction::Drop, lost, 2, 0), 4, 5, [&](std::size_t r, const RoundResult& res, const SecuritySetup& s) {
      if (r == 3) resync &= res.response.missing() == 0 && s.nodes[2].c == s.gateway.nodes[2].c;
    });

  verdict(9, tally.leaked == 0 && tally.liveness_failures == 0 && rotation && resync, "protocol adversary suite",
          fmt("%zu policy runs, %zu adversarial acceptances, %zu liveness failures, nonce rotation over 10 rounds %s, "
              "desync then resync %s",
              tally.runs, tally.leaked, tally.liveness_failures, rotation ? "ok" : "broken",
              resync ? "restores liveness" : "does not recover"));
}

// ---------------------------------------------------------------------------
// 10

void criterion_latency() {
  const SwarmGraph swarm = preset_swarm("swarm2");
  TrainingOptions o;
  o.m = 16;
  o.train.epochs = 1;
  const AttestationParams params =
      train_on_corpus(swarm, generate_corpus(swarm, find_scenario(swarm, "D1"), o.m, 1), o).params;
  const TraceCorpus c = generate_corpus(swarm, find_scenario(swarm, "D2"), 200, 2);
  std::vector<double> ms;
  for (std::size_t t = 0; t < c.m(); ++t) {
    SwarmResponse sr;
    for (auto& trace : c.tick(t)) sr.slots.push_back(trace);
    const auto t0 = Clock::now();
    const DecisionFlags d = attest(sr, params);
    ms.push_back(1e3 * seconds_since(t0));
    if (d.flags.size() != swarm.size()) ms.back() = 1e9;
  }
  std::sort(ms.begin(), ms.end());
  const double worst = ms.back();
  verdict(10, worst < kAttestMillis, "attest latency",
          fmt("GT, n=%zu, L=%zu: median %.3f ms, max %.3f ms over %zu attests (< %.0f ms)", swarm.size(),
              params.pad_length, ms[ms.size() / 2], worst, ms.size(), kAttestMillis));
}

// ---------------------------------------------------------------------------
// 11

void criterion_determinism(const TrainConfig& base) {
  const SwarmGraph swarm = preset_swarm("swarm1");
  const ScenarioSpec sc = find_scenario(swarm, "AN_12");
  const bool corpora = serialize_corpus(generate_corpus(swarm, sc, 40, 3)) ==
                       serialize_corpus(generate_corpus(swarm, sc, 40, 3));

  TrainingOptions o;
  o.m = 24;
  o.seed = 3;
  o.train = base;
  o.train.epochs = 3;
  const bool params = serialize_params(run_training_phase(swarm, o).params) ==
                      serialize_params(run_training_phase(swarm, o).params);

  SuiteConfig cfg;
  cfg.repeats = 2;
  cfg.m_train = 24;
  cfg.m_eval = 16;
  cfg.s1_rounds = 20;
  cfg.archs = {Arch::GT, Arch::GAT};
  cfg.train = base;
  cfg.train.epochs = 2;
  const EvaluationReport a = run_suite(cfg);
  const EvaluationReport b = run_suite(cfg);
  const bool reports = report_csv(a) == report_csv(b) && report_json(a) == report_json(b);
  verdict(11, corpora && params && reports, "determinism",
          fmt("corpora %s, params files %s, suite reports %s", corpora ? "identical" : "DIFFER",
              params ? "identical" : "DIFFER", reports ? "identical" : "DIFFER"));
}

// ---------------------------------------------------------------------------
// 2-8

const AttackCell* attack_cell(const EvaluationReport& r, std::string_view attack, std::string_view param) {
  for (const AttackCell* c : r.attack("gt", attack))
    if (c->param == param) return c;
  return nullptr;
}

TrainConfig acceptance_training() {
  TrainConfig t;
  t.batch_size = 64;
  t.epochs = 300;
  return t;
}

struct Empirical {
  std::size_t repeats = 3;
  std::uint64_t seed = 1;
  TrainConfig train = acceptance_training();
};

void criteria_empirical(const Empirical& e) {
  const SwarmGraph s1 = preset_swarm("swarm1");
  double clean_secs = 0.0;
  {
    const auto t0 = Clock::now();
    TrainingOptions o;
    o.m = 500;
    o.seed = e.seed;
    o.train = e.train;
    o.train.arch = Arch::GT;
    const TrainingPhase phase = run_training_phase(s1, o);
    const ScenarioSpec d2 = find_scenario(s1, "D2");
    evaluate_corpus(phase.params, generate_corpus(s1, d2, 400, corpus_seed(e.seed, "eval/D2")), d2.label);
    clean_secs = seconds_since(t0);
  }

  SuiteConfig c1;
  c1.swarm = "swarm1";
  c1.archs = {Arch::GT, Arch::GCN, Arch::GAT};
  c1.repeats = e.repeats;
  c1.seed = e.seed;
  c1.train = e.train;
  c1.s1_rounds = kMinS1Rounds;
  const auto t1 = Clock::now();
  const EvaluationReport r1 = run_suite(c1);
  std::printf("info    swarm1 suite (%zu repeats, gt/gcn/gat): %.1f s\n", e.repeats, seconds_since(t1));

  SuiteConfig c2 = c1;
  c2.swarm = "swarm2";
  c2.archs = {Arch::GT};
  c2.attacks = false;
  const auto t2 = Clock::now();
  const EvaluationReport r2 = run_suite(c2);
  std::printf("info    swarm2 suite (%zu repeats, gt): %.1f s\n", e.repeats, seconds_since(t2));

  // 2
  {
    bool ok = true;
    std::string detail;
    for (const auto* r : {&r1, &r2})
      for (const auto& s : r->summary) {
        ok &= s.min_training_score > 0 && s.training_flags == 0;
        detail += fmt("%s %s: min DT %.4f, training flags %zu; ", r->swarm.c_str(), s.arch.c_str(),
                      s.min_training_score, s.training_flags);
      }
    detail.resize(detail.size() - 2);
    verdict(2, ok, "threshold soundness", detail);
  }

  // 3
  {
    double worst = 1.0;
    std::string per;
    for (NodeId j = 0; j < s1.size(); ++j) {
      const NodeCell* c = r1.node("gt", "D2", j);
      worst = std::min(worst, c->rate);
      per += fmt(" N%u %.4f", unsigned(j), c->rate);
    }
    verdict(3, worst >= kMinAuthenticAr && clean_secs < kCleanSeconds, "clean attestation",
            fmt("GT swarm1 D2 AR per node%s (>= %.2f); single train + held-out run %.1f s (< %.0f s)", per.c_str(),
                kMinAuthenticAr, clean_secs, kCleanSeconds));
  }

  // 4
  {
    double worst = 1.0;
    std::string per;
    auto add = [&](const EvaluationReport& r, const char* scenario) {
      const ScenarioSpec s = find_scenario(preset_swarm(r.swarm), scenario);
      for (NodeId j : s.primary) {
        const NodeCell* c = r.node("gt", scenario, j);
        worst = std::min(worst, c->rate);
        per += fmt(" %s/%s/N%u %.4f", r.swarm.c_str(), scenario, unsigned(j), c->rate);
      }
    };
    add(r1, "AN_0");
    add(r1, "AN_3");
    add(r2, "AN_0");
    add(r2, "AN_3");
    add(r2, "AN_5");
    verdict(4, worst >= kMinPrimaryDr, "node-level anomalies", fmt("GT DR%s (>= %.2f)", per.c_str(), kMinPrimaryDr));
  }

  // 5
  {
    double worst = 1.0;
    std::string per;
    for (const char* scenario : {"AN_1", "AN_2"}) {
      const ScenarioSpec s = find_scenario(s1, scenario);
      for (NodeId j : s.secondary) {
        const NodeCell* c = r1.node("gt", scenario, j);
        worst = std::min(worst, c->rate);
        per += fmt(" %s/N%u %.4f", scenario, unsigned(j), c->rate);
      }
    }
    const double gt = r1.arch("gt")->dr_propagated.value_or(0);
    const double gcn = r1.arch("gcn")->dr_propagated.value_or(0);
    const double gat = r1.arch("gat")->dr_propagated.value_or(0);
    verdict(5, worst >= kMinPropagatedDr && gt >= gcn && gt >= gat, "propagated anomalies",
            fmt("GT downstream DR%s (>= %.2f); propagated mean DR gt %.4f, gcn %.4f, gat %.4f (gt >= both)",
                per.c_str(), kMinPropagatedDr, gt, gcn, gat));
  }

  // 6
  {
    const AttackCell* c = attack_cell(r1, "S1", "drops=1");
    const std::size_t rounds = c->counts.total() / s1.size();
    verdict(6, c->value >= kMinS1Accuracy && rounds >= kMinS1Rounds, "S1 dropped response",
            fmt("GT accuracy %.4f over %zu single-drop rounds (>= %.2f over >= %zu)", c->value, rounds,
                kMinS1Accuracy, kMinS1Rounds));
  }

  // 7
  {
    bool ok = true;
    double prev = -1.0;
    std::string per;
    for (std::size_t b : c1.s2_sweep) {
      const AttackCell* c = attack_cell(r1, "S2", "bytes=" + std::to_string(b));
      per += fmt(" %zu:%.4f", b, c->value);
      if (b >= kS2FromBytes) ok &= c->value >= kMinS2Dr;
      ok &= c->value >= prev - kS2MonotoneSlack;
      prev = std::max(prev, c->value);
    }
    verdict(7, ok, "S2 perturbation",
            fmt("GT DR by bytes%s (>= %.2f from %zu bytes, non-decreasing within %.2f)", per.c_str(), kMinS2Dr,
                kS2FromBytes, kS2MonotoneSlack));
  }

  // 8
  {
    const AttackCell* c = attack_cell(r1, "S3", "level=swarm");
    const AttackCell* node = attack_cell(r1, "S3", "level=node");
    verdict(8, c->value >= kS3Lo && c->value <= kS3Hi, "S3 replay",
            fmt("GT swarm-level DR %.4f in [%.2f, %.2f] (node-level DR %.4f)", c->value, kS3Lo, kS3Hi, node->value));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run"};
  Empirical e;
  bool quick = false;
  bool report_only = false;
  app.add_option("--repeats", e.repeats, "training and testing phases pooled per suite");
  app.add_option("--seed", e.seed, "run seed");
  app.add_option("--epochs", e.train.epochs, "training epochs");
  app.add_flag("--skip-empirical", quick, "only the property criteria (1, 9, 10, 11)");
  app.add_flag("--report-only", report_only, "exit 0 even when a criterion fails");
  CLI11_PARSE(app, argc, argv);

  std::printf("training: epochs %zu, batch %zu, hidden %zu, seed %llu, repeats %zu\n", e.train.epochs,
              e.train.batch_size, e.train.hidden, static_cast<unsigned long long>(e.seed), e.repeats);
  const auto t0 = Clock::now();
  criterion_oracles();
  if (!quick) criteria_empirical(e);
  criterion_protocol();
  criterion_latency();
  criterion_determinism(e.train);
  std::printf("%d criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return report_only ? 0 : failures;
}
