#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "swarmnet/attacks.hpp"
#include "swarmnet/error.hpp"
#include "swarmnet/harness.hpp"
#include "swarmnet/report.hpp"

namespace fs = std::filesystem;
using namespace swarmnet;

namespace {

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

fs::path default_out_dir() {
  if (const char* env = std::getenv("SWARMNET_OUT"); env != nullptr && *env != '\0') return env;
  return ".";
}

struct HyperFlags {
  std::string arch = "gt";
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::size_t hidden = 64;
  std::size_t latent = 32;
  double sf = kDefaultScalingFactor;
  double noise = 0.4;
  double lr = 0.01;
  double wd = 5e-4;
  bool resample = false;
  bool last_epoch = false;
  bool paper_defaults = false;

  void add(CLI::App* app, bool with_arch = true) {
    if (with_arch) app->add_option("--arch", arch, "gcn, gat or gt")->check(CLI::IsMember({"gcn", "gat", "gt"}));
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch", batch, "mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--hidden", hidden, "width between the graph layers")->check(CLI::PositiveNumber);
    app->add_option("--latent", latent, "latent width")->check(CLI::PositiveNumber);
    app->add_option("--sf", sf, "threshold scaling factor");
    app->add_option("--noise", noise, "denoising noise factor k");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--wd", wd, "weight decay");
    app->add_flag("--resample-noise", resample, "draw fresh noise every epoch");
    app->add_flag("--last-epoch", last_epoch, "keep the final parameters instead of the best epoch");
    app->add_flag("--paper-defaults", paper_defaults, "pin sf=0.999, k=0.4, lr=0.01, wd=5e-4, latent=32");
  }

  void apply_paper_defaults() {
    if (!paper_defaults) return;
    sf = kDefaultScalingFactor;
    noise = 0.4;
    lr = 0.01;
    wd = 5e-4;
    latent = 32;
  }

  TrainConfig config() const {
    TrainConfig c;
    c.arch = arch_from_string(arch);
    c.epochs = epochs;
    c.batch_size = batch;
    c.hidden = hidden;
    c.latent = latent;
    c.noise = noise;
    c.resample_noise = resample;
    c.keep_best = !last_epoch;
    c.adam.lr = lr;
    c.adam.weight_decay = wd;
    return c;
  }
};

std::vector<std::size_t> parse_byte_list(const std::string& spec) {
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoul(part));
      } else {
        const auto lo = std::stoul(part.substr(0, dots));
        const auto hi = std::stoul(part.substr(dots + 2));
        if (lo > hi) throw ValidationError("empty byte range " + part);
        for (auto b = lo; b <= hi; ++b) out.push_back(b);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("bad byte list '" + spec + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty byte list");
  return out;
}

std::vector<Arch> parse_archs(const std::string& spec) {
  std::vector<Arch> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(arch_from_string(part));
  if (out.empty()) throw ValidationError("empty architecture list");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string flags_line(std::size_t tick, const DecisionFlags& d) {
  std::ostringstream os;
  os << tick;
  for (std::size_t j = 0; j < d.flags.size(); ++j) os << " N" << j << ':' << d.flags[j];
  return os.str();
}

TraceCorpus clean_corpus(const SwarmGraph& swarm, const std::string& corpus_path, std::size_t m, std::uint64_t seed) {
  if (!corpus_path.empty()) return load_corpus(corpus_path, &swarm);
  return generate_corpus(swarm, find_scenario(swarm, "D2"), m, corpus_seed(seed, "eval"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based swarm attestation: corpora, training, attestation, attacks and protocol demos"};
  app.require_subcommand(1);
  fs::path out_dir = default_out_dir();
  app.add_option("--out-dir", out_dir, "output directory (default $SWARMNET_OUT or .)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate trace corpora");
  std::string swarm_name = "swarm1";
  std::vector<std::string> gen_scenarios;
  std::size_t m = 400;
  std::uint64_t seed = 1;
  gen->add_option("--swarm", swarm_name, "preset name or config path");
  gen->add_option("--scenario", gen_scenarios, "scenario id(s) or 'all'")->required()->delimiter(',');
  gen->add_option("--m", m, "ticks per corpus")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "corpus seed");

  // train
  auto* trn = app.add_subcommand("train", "train attestation parameters");
  HyperFlags hyper;
  std::size_t m_train = 500;
  std::string corpus_path;
  std::string params_out;
  bool direct = false;
  trn->add_option("--swarm", swarm_name, "preset name or config path");
  trn->add_option("--m", m_train, "training rounds")->check(CLI::PositiveNumber);
  trn->add_option("--seed", seed, "run seed");
  trn->add_option("--corpus", corpus_path, "train on this corpus instead of protocol-collected traces");
  trn->add_option("--out", params_out, "params file (default <out-dir>/<swarm>_<arch>.swnp)");
  trn->add_flag("--direct", direct, "skip the protocol and read the simulated corpus directly");
  hyper.add(trn);

  // attest
  auto* att = app.add_subcommand("attest", "attest corpus ticks against trained parameters");
  std::string params_path;
  std::vector<NodeId> missing;
  std::optional<std::size_t> tick;
  att->add_option("--params", params_path, "params file")->required();
  att->add_option("--corpus", corpus_path, "corpus file")->required();
  att->add_option("--tick", tick, "single tick (default all)");
  att->add_option("--missing", missing, "nodes whose responses are treated as Missing");

  // attack
  auto* atk = app.add_subcommand("attack", "run a simulated attack sweep");
  std::string attack_name;
  std::string bytes_spec = "1,2,4,6,8,10,15,20,30,40";
  std::size_t drops = 1;
  std::size_t rounds = 500;
  std::string csv_out;
  atk->add_option("name", attack_name, "s1, s2 or s3")->required();
  atk->add_option("--params", params_path, "params file")->required();
  atk->add_option("--swarm", swarm_name, "preset name or config path");
  atk->add_option("--corpus", corpus_path, "clean corpus (default: generated D2)");
  atk->add_option("--m", m, "generated clean corpus ticks");
  atk->add_option("--seed", seed, "attack seed");
  atk->add_option("--bytes", bytes_spec, "S2 byte counts, e.g. 1..40 or 1,10,20");
  atk->add_option("--drops", drops, "S1 dropped responses per round");
  atk->add_option("--rounds", rounds, "S1 rounds");
  atk->add_option("--out", csv_out, "CSV path (default stdout)");

  // suite
  auto* sui = app.add_subcommand("suite", "train and evaluate every scenario and attack");
  std::string archs = "gcn,gat,gt";
  std::size_t repeats = 3;
  std::size_t m_eval = 400;
  bool gnuplot = false;
  bool no_attacks = false;
  bool full_repeats = false;
  std::string stem;
  sui->add_option("--swarm", swarm_name, "preset name or config path");
  sui->add_option("--archs", archs, "comma-separated architectures");
  sui->add_option("--repeats", repeats, "training and testing phases to pool");
  sui->add_flag("--full-repeats", full_repeats, "20 repeats");
  sui->add_option("--seed", seed, "run seed");
  sui->add_option("--m", m_train, "training rounds");
  sui->add_option("--m-eval", m_eval, "ticks per evaluation corpus");
  sui->add_option("--rounds", rounds, "S1 rounds");
  sui->add_option("--stem", stem, "report file stem (default <swarm>_suite)");
  sui->add_flag("--gnuplot", gnuplot, "also write a gnuplot data file");
  sui->add_flag("--no-attacks", no_attacks, "skip S1-S3");
  sui->add_flag("--direct", direct, "skip the protocol during training collection");
  hyper.add(sui, false);

  // protocol-demo
  auto* demo = app.add_subcommand("protocol-demo", "print an annotated protocol transcript");
  std::string inject = "none";
  std::string policy_path;
  std::size_t demo_rounds = 2;
  demo->add_option("--swarm", swarm_name, "preset name or config path");
  demo->add_option("--seed", seed, "run seed");
  demo->add_option("--rounds", demo_rounds, "rounds to run")->check(CLI::PositiveNumber);
  demo->add_option("--inject", inject, "none, replay-req, replay-resp, drop-resp, drop-update, tamper, forge")
      ->check(CLI::IsMember({"none", "replay-req", "replay-resp", "drop-resp", "drop-update", "tamper", "forge"}));
  demo->add_option("--policy", policy_path, "transport policy JSON (overrides --inject)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const SwarmGraph swarm = resolve_swarm(swarm_name);
      std::vector<ScenarioSpec> specs;
      for (const auto& id : gen_scenarios) {
        if (id == "all") {
          for (auto& s : scenario_catalog(swarm)) specs.push_back(s);
        } else {
          specs.push_back(find_scenario(swarm, id));
        }
      }
      fs::create_directories(out_dir);
      for (const auto& s : specs) {
        const TraceCorpus c = generate_corpus(swarm, s, m, seed);
        const fs::path path = out_dir / (swarm.name() + "_" + s.id + ".trace");
        save_corpus(c, path);
        std::cout << path.string() << '\n';
        log_line("wrote " + std::to_string(c.traces().size()) + " traces to " + path.string());
      }
      return 0;
    }

    if (*trn) {
      hyper.apply_paper_defaults();
      const SwarmGraph swarm = resolve_swarm(swarm_name);
      if (hyper.epochs == 0) log_line("warning: --epochs 0 leaves the model at its initial weights");
      TrainingOptions opt;
      opt.m = m_train;
      opt.train = hyper.config();
      opt.sf = hyper.sf;
      opt.seed = seed;
      TrainingPhase phase;
      if (!corpus_path.empty()) {
        if (!fs::exists(corpus_path)) throw Error("corpus file " + corpus_path + " does not exist");
        phase = train_on_corpus(swarm, load_corpus(corpus_path, &swarm), opt, log_line);
      } else if (direct) {
        const TraceCorpus c =
            generate_corpus(swarm, find_scenario(swarm, opt.scenario), opt.m, corpus_seed(seed, "train"));
        phase = train_on_corpus(swarm, c, opt, log_line);
      } else {
        phase = run_training_phase(swarm, opt, log_line);
      }
      const fs::path path =
          params_out.empty() ? out_dir / (swarm.name() + "_" + hyper.arch + ".swnp") : fs::path(params_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      save_params(phase.params, path);
      log_line("min training CS " + format_rate(phase.min_training_score) + ", training flags " +
               std::to_string(phase.training_flags));
      std::cout << path.string() << '\n';
      return 0;
    }

    if (*att) {
      const AttestationParams params = load_params(params_path);
      const SwarmGraph swarm = resolve_swarm(params.swarm_id);
      const TraceCorpus corpus = load_corpus(corpus_path, &swarm);
      const std::size_t first = tick.value_or(0);
      const std::size_t last = tick ? first + 1 : corpus.m();
      if (first >= corpus.m()) throw ValidationError("tick " + std::to_string(first) + " is outside the corpus");
      for (std::size_t t = first; t < last; ++t) {
        SwarmResponse sr;
        sr.round_id = t;
        for (auto& tr : corpus.tick(t)) sr.slots.emplace_back(std::move(tr));
        for (NodeId j : missing) {
          if (j >= sr.slots.size()) throw ValidationError("--missing node out of range");
          sr.slots[j].reset();
        }
        std::cout << flags_line(t, attest(sr, params)) << '\n';
      }
      return 0;
    }

    if (*atk) {
      const AttestationParams params = load_params(params_path);
      const SwarmGraph swarm = resolve_swarm(params.swarm_id);
      std::ostringstream csv;
      if (attack_name == "s1") {
        const TraceCorpus clean = clean_corpus(swarm, corpus_path, rounds, seed);
        const ConfusionCounts c = run_s1(params, clean, rounds, drops, seed);
        csv << "attack,drops,rounds,accuracy\n"
            << "S1," << drops << ',' << rounds << ',' << format_rate(rates(c).accuracy.value_or(0.0)) << '\n';
      } else if (attack_name == "s2") {
        const TraceCorpus clean = clean_corpus(swarm, corpus_path, m, seed);
        csv << "attack,bytes,dr\n";
        for (auto b : parse_byte_list(bytes_spec)) {
          ConfusionCounts total;
          for (const auto& c : run_s2(params, clean, b, seed)) total += c;
          csv << "S2," << b << ',' << format_rate(rates(total).dr.value_or(0.0)) << '\n';
        }
      } else if (attack_name == "s3") {
        const TraceCorpus clean = clean_corpus(swarm, corpus_path, m, seed);
        const S3Result r = run_s3(params, clean, seed);
        ConfusionCounts node_total;
        for (const auto& c : r.per_node) node_total += c;
        csv << "attack,level,dr\n"
            << "S3,swarm," << format_rate(rates(r.swarm).dr.value_or(0.0)) << '\n'
            << "S3,node," << format_rate(rates(node_total).dr.value_or(0.0)) << '\n';
      } else {
        throw ValidationError("unknown attack '" + attack_name + "' (expected s1, s2 or s3)");
      }
      if (csv_out.empty()) {
        std::cout << csv.str();
      } else {
        write_text(csv_out, csv.str());
        std::cout << csv_out << '\n';
      }
      return 0;
    }

    if (*sui) {
      hyper.apply_paper_defaults();
      SuiteConfig cfg;
      cfg.swarm = swarm_name;
      cfg.archs = parse_archs(archs);
      cfg.repeats = full_repeats ? 20 : repeats;
      cfg.seed = seed;
      cfg.m_train = m_train;
      cfg.m_eval = m_eval;
      cfg.train = hyper.config();
      cfg.sf = hyper.sf;
      cfg.through_protocol = !direct;
      cfg.attacks = !no_attacks;
      cfg.s1_rounds = rounds;
      const auto start = std::chrono::steady_clock::now();
      const EvaluationReport report = run_suite(cfg, log_line);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const std::string name = stem.empty() ? report.swarm + "_suite" : stem;
      write_report(report, out_dir, name, gnuplot);
      log_line("suite finished in " + std::to_string(secs) + " s");
      for (const auto& s : report.summary)
        log_line(s.arch + ": accuracy " + format_rate(s.accuracy.value_or(0)) + ", AR " +
                 format_rate(s.ar_authentic.value_or(0)) + ", DR primary " + format_rate(s.dr_primary.value_or(0)) +
                 ", DR propagated " + format_rate(s.dr_propagated.value_or(0)));
      std::cout << (out_dir / (name + ".csv")).string() << '\n' << (out_dir / (name + ".json")).string() << '\n';
      return 0;
    }

    if (*demo) {
      const SwarmGraph swarm = resolve_swarm(swarm_name);
      TransportPolicy policy;
      if (!policy_path.empty()) {
        policy = load_policy(policy_path);
      } else {
        policy.seed = seed;
        PolicyRule rule;
        rule.round = 0;
        if (inject == "replay-req") {
          rule.msg_type = MsgType::Req;
          rule.action = PolicyAction::Replay;
        } else if (inject == "replay-resp") {
          rule.msg_type = MsgType::Resp;
          rule.action = PolicyAction::ReplayNextRound;
        } else if (inject == "drop-resp") {
          rule.msg_type = MsgType::Resp;
          rule.node = 1;
        } else if (inject == "drop-update") {
          rule.msg_type = MsgType::Update;
          rule.node = 1;
        } else if (inject == "tamper") {
          rule.msg_type = MsgType::Resp;
          rule.action = PolicyAction::FlipBit;
          rule.bit = 200;
        } else if (inject == "forge") {
          rule.msg_type = MsgType::Req;
          rule.action = PolicyAction::Forge;
        }
        if (inject != "none") policy.rules.push_back(rule);
      }
      const TraceCorpus corpus =
          generate_corpus(swarm, find_scenario(swarm, "D1"), demo_rounds, corpus_seed(seed, "demo"));
      SecuritySetup sec = setup_security(swarm.wire_id(), swarm.size(), corpus_seed(seed, "keys"));
      Transport transport(policy);
      for (std::size_t r = 0; r < demo_rounds; ++r) {
        const RoundResult rr = run_round(sec.gateway, sec.nodes, corpus.tick(r), transport, r);
        for (const auto& e : rr.events) std::cout << format_event(e) << '\n';
        std::cout << "round " << r << " result:";
        for (std::size_t j = 0; j < rr.response.slots.size(); ++j)
          std::cout << " N" << j << '=' << (rr.response.slots[j] ? "trace" : "missing");
        std::cout << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
