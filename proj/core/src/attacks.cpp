#include "swarmnet/attacks.hpp"

#include <numeric>

#include "swarmnet/error.hpp"

namespace swarmnet {

SwarmResponse attack_s1_drop(const SwarmResponse& sr, std::size_t count, std::uint64_t seed) {
  const std::size_t n = sr.slots.size();
  if (count < 1 || count >= n)
    throw ValidationError("S1 drop count must be in [1, " + std::to_string(n) + "), got " + std::to_string(count));
  Rng rng = Rng::derive(seed, "s1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  SwarmResponse out = sr;
  for (std::size_t k = 0; k < count; ++k) out.slots[idx[k]].reset();
  return out;
}

DataSectionTrace attack_s2_perturb(const DataSectionTrace& trace, std::size_t n_bytes, std::uint64_t seed) {
  const std::size_t d = trace.bytes.size();
  if (n_bytes < 1 || n_bytes > d)
    throw ValidationError("S2 byte count must be in [1, " + std::to_string(d) + "], got " + std::to_string(n_bytes));
  Rng rng = Rng::derive(seed, "s2");
  std::vector<std::size_t> pos(d);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  rng.shuffle(pos);
  DataSectionTrace out = trace;
  for (std::size_t k = 0; k < n_bytes; ++k) {
    auto& b = out.bytes[pos[k]];
    b = static_cast<std::uint8_t>(b + 1 + rng.below(255));
  }
  return out;
}

TraceCorpus attack_s3_replay(const TraceCorpus& corpus, std::uint64_t seed) {
  if (corpus.m() < 2) throw ValidationError("S3 needs at least two ticks");
  return shuffle_corpus(corpus, seed);
}

}  // namespace swarmnet
