#pragma once

#include <cstdint>
#include <vector>

#include "swarmnet/tensor.hpp"

namespace swarmnet {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
};

/// Adam with an L2 term folded into the gradient (g + wd * theta) and
/// bias-corrected moments.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const std::vector<Tensor2>& params, AdamConfig config = {});

  /// Updates params in place. grads must match params in count and shape.
  void step(std::vector<Tensor2>& params, const std::vector<Tensor2>& grads);

  std::uint64_t t() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor2>& first_moment() const { return m_; }
  const std::vector<Tensor2>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor2> m_;
  std::vector<Tensor2> v_;
};

void adam_step(AdamState& state, std::vector<Tensor2>& params, const std::vector<Tensor2>& grads);

}  // namespace swarmnet
