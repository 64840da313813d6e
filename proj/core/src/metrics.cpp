#include "swarmnet/metrics.hpp"

#include "swarmnet/error.hpp"

namespace swarmnet {

void ConfusionCounts::add(int flag, int label) {
  if ((flag != 0 && flag != 1) || (label != 0 && label != 1)) throw ShapeError("flags and labels must be 0 or 1");
  if (label == 1)
    ++(flag == 1 ? tp : fn);
  else
    ++(flag == 1 ? fp : tn);
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

Rates rates(const ConfusionCounts& c) {
  Rates r;
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.dr = ratio(c.tp, c.tp + c.fn);
  r.ar = ratio(c.tn, c.tn + c.fp);
  return r;
}

ConfusionCounts count_decisions(const std::vector<int>& flags, const std::vector<int>& labels) {
  if (flags.size() != labels.size()) throw ShapeError("flags and labels differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < flags.size(); ++i) c.add(flags[i], labels[i]);
  return c;
}

ConfusionCounts count_decisions(const std::vector<std::vector<int>>& flags,
                                const std::vector<std::vector<int>>& labels) {
  if (flags.size() != labels.size()) throw ShapeError("flag and label sets differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < flags.size(); ++i) c += count_decisions(flags[i], labels[i]);
  return c;
}

}  // namespace swarmnet
