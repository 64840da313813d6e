#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace swarmnet {

/// Positive class is "anomalous" (label 1).
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  void add(int flag, int label);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Ratios with a zero denominator are nullopt.
struct Rates {
  std::optional<double> accuracy;
  std::optional<double> dr;
  std::optional<double> ar;
};

Rates rates(const ConfusionCounts& c);

/// Element-wise counts; throws ShapeError on length mismatch or non-binary values.
ConfusionCounts count_decisions(const std::vector<int>& flags, const std::vector<int>& labels);
ConfusionCounts count_decisions(const std::vector<std::vector<int>>& flags, const std::vector<std::vector<int>>& labels);

}  // namespace swarmnet
