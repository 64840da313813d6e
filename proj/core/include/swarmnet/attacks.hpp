#pragma once

#include <cstdint>

#include "swarmnet/corpus.hpp"
#include "swarmnet/transport.hpp"

namespace swarmnet {

/// S1: `count` distinct slots chosen uniformly become Missing. 1 <= count < n.
SwarmResponse attack_s1_drop(const SwarmResponse& sr, std::size_t count, std::uint64_t seed);

/// S2: replaces `n_bytes` distinct positions with random bytes that differ
/// from the originals. Positions and values for a given seed are nested:
/// the perturbation for k bytes is a prefix of the one for k + 1.
DataSectionTrace attack_s2_perturb(const DataSectionTrace& trace, std::size_t n_bytes, std::uint64_t seed);

/// S3: independent temporal permutation of every node's traces. m >= 2.
TraceCorpus attack_s3_replay(const TraceCorpus& corpus, std::uint64_t seed);

}  // namespace swarmnet
