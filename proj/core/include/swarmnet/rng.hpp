#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace swarmnet {

/// Seeded generator with portable value mappings.
///
/// std::mt19937_64 output is fully specified by the standard, but the std
/// distributions are not, so every mapping from raw words to values lives
/// here. Identical seeds give identical streams on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Child stream keyed by a label and index; streams for distinct keys are
  /// independent of each other and of the call order on the parent.
  static Rng derive(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi);

  std::uint8_t byte() { return static_cast<std::uint8_t>(next_u64() >> 56); }

  void fill(std::span<std::uint8_t> out);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a over a label, used to key derived streams.
std::uint64_t hash_label(std::string_view label);

}  // namespace swarmnet
