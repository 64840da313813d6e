#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swarmnet/layers.hpp"
#include "swarmnet/tensor.hpp"

namespace swarmnet {

struct ModelDims {
  std::size_t input = 0;  ///< pad length L
  std::size_t hidden = 64;
  std::size_t latent = 32;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Graph denoising autoencoder: graph layer (L -> hidden, ReLU), graph layer
/// (hidden -> latent, identity), then a linear decoder (latent -> L) shared
/// by all nodes.
///
/// Parameters are stored as an ordered list of named tensors:
/// "layer1.<p>", "layer2.<p>", "decoder.W", "decoder.b" with <p> from
/// layer_param_names().
class GraphModel {
 public:
  GraphModel() = default;
  /// Zero-initialised parameters.
  GraphModel(Arch arch, ModelDims dims);

  Arch arch() const { return arch_; }
  const ModelDims& dims() const { return dims_; }

  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor2>& params() { return params_; }
  const std::vector<Tensor2>& params() const { return params_; }
  Tensor2& param(std::string_view name);
  const Tensor2& param(std::string_view name) const;

  std::span<const Tensor2> layer1() const { return {params_.data(), per_layer_}; }
  std::span<const Tensor2> layer2() const { return {params_.data() + per_layer_, per_layer_}; }
  const Tensor2& decoder_w() const { return params_[2 * per_layer_]; }
  const Tensor2& decoder_b() const { return params_[2 * per_layer_ + 1]; }

  std::size_t parameter_count() const;

  /// Rebuilds a model from named tensors, checking names and shapes.
  static GraphModel from_tensors(Arch arch, std::vector<std::string> names, std::vector<Tensor2> tensors);

  friend bool operator==(const GraphModel& a, const GraphModel& b);

 private:
  Arch arch_ = Arch::GT;
  ModelDims dims_;
  std::size_t per_layer_ = 0;
  std::vector<std::string> names_;
  std::vector<Tensor2> params_;
};

/// Closed-form parameter count for an architecture and dimensions.
std::size_t parameter_count(Arch arch, const ModelDims& dims);

/// Glorot-uniform weights and attention vectors, zero biases.
void glorot_init(GraphModel& model, std::uint64_t seed);

/// x is (B*n) x L for B stacked samples; returns the reconstruction, same shape.
Tensor2 model_forward(const GraphModel& model, const Tensor2& x, const GraphTopology& graph);

/// ||x - x_hat||^2 / (rows * cols).
double mse(const Tensor2& x, const Tensor2& x_hat);

struct Gradients {
  std::vector<Tensor2> grads;  // same order as GraphModel::params()
  double loss = 0.0;
};

/// Exact gradients of mse(target, model_forward(input)) with respect to every
/// parameter. `scale` multiplies the loss (and hence every gradient).
Gradients backward(const GraphModel& model, const Tensor2& target, const Tensor2& input, const GraphTopology& graph,
                   double scale = 1.0);

}  // namespace swarmnet
