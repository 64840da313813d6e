#include "swarmnet/train.hpp"

#include <limits>
#include <numeric>

#include "swarmnet/error.hpp"
#include "swarmnet/rng.hpp"

namespace swarmnet {

using Index = Eigen::Index;

Tensor2 stack_samples(const std::vector<Tensor2>& samples) {
  if (samples.empty()) throw ValidationError("no training samples");
  const Index n = samples.front().rows();
  const Index L = samples.front().cols();
  Tensor2 out(n * static_cast<Index>(samples.size()), L);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (samples[s].rows() != n || samples[s].cols() != L) throw ShapeError("training samples differ in shape");
    out.middleRows(static_cast<Index>(s) * n, n) = samples[s];
  }
  return out;
}

Tensor2 gather_samples(const Tensor2& stacked, std::size_t n, const std::vector<std::size_t>& order,
                       std::size_t first, std::size_t count) {
  const auto rows = static_cast<Index>(n);
  Tensor2 out(rows * static_cast<Index>(count), stacked.cols());
  for (std::size_t b = 0; b < count; ++b)
    out.middleRows(static_cast<Index>(b) * rows, rows) = stacked.middleRows(static_cast<Index>(order[first + b]) * rows, rows);
  return out;
}

namespace {

void draw_noise(Tensor2& noisy, const Tensor2& clean, double k, Rng& rng) {
  noisy.resize(clean.rows(), clean.cols());
  for (Index i = 0; i < clean.rows(); ++i)
    for (Index j = 0; j < clean.cols(); ++j) noisy(i, j) = clean(i, j) + k * rng.uniform01();
}

}  // namespace

TrainResult train(const std::vector<Tensor2>& samples, const GraphTopology& graph, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (samples.empty()) throw ValidationError("cannot train on an empty sample set");
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  const std::size_t n = graph.size();
  if (static_cast<std::size_t>(samples.front().rows()) != n)
    throw ShapeError("sample rows do not match the swarm node count");

  const Tensor2 clean = stack_samples(samples);
  const std::size_t m = samples.size();
  ModelDims dims{static_cast<std::size_t>(clean.cols()), config.hidden, config.latent};

  TrainResult result{GraphModel(config.arch, dims), {}};
  glorot_init(result.model, config.seed);
  AdamState adam(result.model.params(), config.adam);

  Rng noise_rng = Rng::derive(config.seed, "noise");
  Rng order_rng = Rng::derive(config.seed, "batch-order");
  Tensor2 noisy;
  draw_noise(noisy, clean, config.noise, noise_rng);

  GraphModel best;
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.resample_noise && epoch > 0) draw_noise(noisy, clean, config.noise, noise_rng);
    order_rng.shuffle(order);
    double weighted = 0.0;
    for (std::size_t first = 0; first < m; first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, m - first);
      const Tensor2 target = gather_samples(clean, n, order, first, count);
      const Tensor2 input = gather_samples(noisy, n, order, first, count);
      Gradients g = backward(result.model, target, input, graph);
      adam.step(result.model.params(), g.grads);
      weighted += g.loss * static_cast<double>(count);
    }
    const double loss = weighted / static_cast<double>(m);
    result.epoch_loss.push_back(loss);
    if (config.keep_best) {
      const double end_loss = mse(clean, model_forward(result.model, clean, graph));
      if (end_loss < best_loss) {
        best_loss = end_loss;
        best = result.model;
        result.best_epoch = epoch + 1;
      }
    }
    if (on_epoch) on_epoch(epoch, loss);
  }
  if (config.keep_best && result.best_epoch > 0) result.model = std::move(best);
  return result;
}

}  // namespace swarmnet
