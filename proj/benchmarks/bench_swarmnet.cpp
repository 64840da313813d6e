#include <benchmark/benchmark.h>

#include <map>

#include "swarmnet/attestation.hpp"
#include "swarmnet/corpus.hpp"
#include "swarmnet/crypto.hpp"
#include "swarmnet/harness.hpp"
#include "swarmnet/model.hpp"
#include "swarmnet/train.hpp"

using namespace swarmnet;

namespace {

struct Fixture {
  SwarmGraph swarm;
  AttestationParams params;
  SwarmResponse response;
  Tensor2 x;

  explicit Fixture(const std::string& name, Arch arch) : swarm(preset_swarm(name)) {
    TrainingOptions o;
    o.m = 16;
    o.train.arch = arch;
    o.train.epochs = 1;
    params = train_on_corpus(swarm, generate_corpus(swarm, find_scenario(swarm, "D1"), o.m, 1), o).params;
    const TraceCorpus c = generate_corpus(swarm, find_scenario(swarm, "D2"), 1, 2);
    for (const auto& t : c.tick(0)) response.slots.push_back(t);
    x = preprocess(response, params.t_def, params.pad_length);
  }
};

const Fixture& fixture(const std::string& name, Arch arch) {
  static std::map<std::pair<std::string, Arch>, Fixture> cache;
  auto it = cache.find({name, arch});
  if (it == cache.end()) it = cache.emplace(std::pair{name, arch}, Fixture(name, arch)).first;
  return it->second;
}

const char* swarm_of(std::int64_t k) { return k == 0 ? "swarm1" : "swarm2"; }

void BM_Attest(benchmark::State& state) {
  const Fixture& f = fixture(swarm_of(state.range(0)), static_cast<Arch>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(attest(f.response, f.params));
  state.counters["n"] = static_cast<double>(f.params.n());
  state.counters["L"] = static_cast<double>(f.params.pad_length);
}
BENCHMARK(BM_Attest)
    ->ArgsProduct({{0, 1}, {int(Arch::GCN), int(Arch::GAT), int(Arch::GT)}})
    ->Unit(benchmark::kMicrosecond);

void BM_Forward(benchmark::State& state) {
  const Fixture& f = fixture("swarm2", Arch::GT);
  const GraphTopology g = f.params.topology();
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(f.params.model, f.x, g));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

void BM_TrainEpoch(benchmark::State& state) {
  const SwarmGraph swarm = preset_swarm("swarm1");
  const TraceCorpus c = generate_corpus(swarm, find_scenario(swarm, "D1"), 64, 1);
  const std::size_t pad = choose_pad_length(swarm.max_normal_d());
  std::vector<Tensor2> samples;
  for (std::size_t t = 0; t < c.m(); ++t) samples.push_back(preprocess_traces(c.tick(t), pad));
  const GraphTopology g = GraphTopology::from_bytes(swarm.size(), swarm.adjacency());
  TrainConfig cfg;
  cfg.arch = static_cast<Arch>(state.range(0));
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(samples, g, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(int(Arch::GCN))->Arg(int(Arch::GAT))->Arg(int(Arch::GT))->Unit(benchmark::kMillisecond);

void BM_HmacSha256(benchmark::State& state) {
  const Bytes key(16, 0x0b);
  const Bytes msg(static_cast<std::size_t>(state.range(0)), 0x5a);
  for (auto _ : state) benchmark::DoNotOptimize(hmac_sha256(key, msg));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HmacSha256)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
