#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swarmnet/tensor.hpp"

namespace swarmnet {

enum class Arch { GCN, GAT, GT };
enum class Activation { Identity, Relu };

std::string_view to_string(Arch a);
Arch arch_from_string(std::string_view s);

inline constexpr double kGatNegativeSlope = 0.2;

/// Parameter order of one graph layer, as stored in a GraphModel:
///   GCN: W, b
///   GAT: W, att_dst, att_src, b         (att_* are 1 x C)
///   GT:  W_query, b_query, W_key, b_key, W_value, b_value, W_root, b_root
/// Weights are F_in x C, biases 1 x C.
std::vector<std::string> layer_param_names(Arch arch);
std::vector<std::pair<std::size_t, std::size_t>> layer_param_shapes(Arch arch, std::size_t in, std::size_t out);

/// Intermediate values kept by a forward pass for the matching backward.
struct LayerCache {
  Tensor2 input;
  Tensor2 pre;  // output before the activation
  // GCN / GAT: input * W.  GT: query, key, value projections.
  Tensor2 z;
  Tensor2 key;
  Tensor2 value;
  // Attention weights and (GAT) pre-LeakyReLU logits, one entry per
  // (sample, node, neighbour) in neighbourhood order.
  std::vector<double> alpha;
  std::vector<double> logit;
};

/// Forward pass of one graph layer over a batch of H.rows() / n samples.
Tensor2 layer_forward(Arch arch, std::span<const Tensor2> params, const Tensor2& h, const GraphTopology& graph,
                      Activation act, LayerCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` (same order and shapes as
/// `params`) and returns the gradient with respect to the layer input when
/// `want_input_grad` is set, otherwise an empty tensor.
Tensor2 layer_backward(Arch arch, std::span<const Tensor2> params, const LayerCache& cache,
                       const GraphTopology& graph, Activation act, const Tensor2& grad_out,
                       std::span<Tensor2> grads, bool want_input_grad);

/// sigma(D^-1/2 (A^T+I) D^-1/2 H W + b).
Tensor2 gcn_forward(const Tensor2& h, const GraphTopology& graph, const Tensor2& w, const Tensor2& bias,
                    Activation act);

/// out_i = sigma(sum_j alpha_ij W h_j + b), j over in-neighbours and i itself,
/// alpha = softmax_j(LeakyReLU(att_dst . W h_i + att_src . W h_j)).
Tensor2 gat_forward(const Tensor2& h, const GraphTopology& graph, const Tensor2& w, const Tensor2& att_dst,
                    const Tensor2& att_src, const Tensor2& bias, Activation act);

struct GtWeights {
  Tensor2 w_query, b_query, w_key, b_key, w_value, b_value, w_root, b_root;
};

/// Single-head transformer convolution: out_i = sigma(root_i + sum_j alpha_ij v_j)
/// over in-neighbours j, alpha = softmax_j(q_i . k_j / sqrt(C)). Nodes with
/// no in-neighbours get root_i alone.
Tensor2 gt_forward(const Tensor2& h, const GraphTopology& graph, const GtWeights& weights, Activation act);

/// Row-wise attention weights of the first sample of a GAT or GT layer, as an
/// n x n matrix (zero outside each neighbourhood). Used by tests.
Tensor2 attention_matrix(Arch arch, std::span<const Tensor2> params, const Tensor2& h, const GraphTopology& graph);

}  // namespace swarmnet
