#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "swarmnet/adam.hpp"
#include "swarmnet/model.hpp"

namespace swarmnet {

struct TrainConfig {
  Arch arch = Arch::GT;
  std::size_t hidden = 64;
  std::size_t latent = 32;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double noise = 0.4;  ///< k in x~ = x + k * U(0,1)
  bool resample_noise = false;
  bool keep_best = true;  ///< return the parameters after the epoch with the lowest clean training loss
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct TrainResult {
  GraphModel model;
  std::vector<double> epoch_loss;  ///< sample-weighted mean batch loss per epoch
  std::size_t best_epoch = 0;      ///< 1-based epoch whose parameters were kept, 0 when keep_best is off
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Stacks m samples of n x L into one (m*n) x L tensor.
Tensor2 stack_samples(const std::vector<Tensor2>& samples);

/// Rows [first*n, (first+count)*n) of a stacked tensor, in the given sample order.
Tensor2 gather_samples(const Tensor2& stacked, std::size_t n, const std::vector<std::size_t>& order,
                       std::size_t first, std::size_t count);

/// Denoising autoencoder training: noise drawn once per sample (or per epoch
/// when resample_noise is set), mini-batch Adam on mse(x, G(x~)). With
/// keep_best, the model returned is the end-of-epoch snapshot with the lowest
/// clean reconstruction loss mse(x, G(x)) over the whole training set.
TrainResult train(const std::vector<Tensor2>& samples, const GraphTopology& graph, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace swarmnet
