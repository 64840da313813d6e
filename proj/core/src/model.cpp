#include "swarmnet/model.hpp"

#include <cmath>

#include "swarmnet/error.hpp"
#include "swarmnet/rng.hpp"

namespace swarmnet {

using Index = Eigen::Index;

GraphModel::GraphModel(Arch arch, ModelDims dims) : arch_(arch), dims_(dims) {
  if (dims.input == 0 || dims.hidden == 0 || dims.latent == 0) throw ShapeError("model dimensions must be positive");
  const auto layer_names = layer_param_names(arch);
  per_layer_ = layer_names.size();
  auto add_layer = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    const auto shapes = layer_param_shapes(arch, in, out);
    for (std::size_t k = 0; k < layer_names.size(); ++k) {
      names_.push_back(prefix + "." + layer_names[k]);
      params_.push_back(Tensor2::Zero(static_cast<Index>(shapes[k].first), static_cast<Index>(shapes[k].second)));
    }
  };
  add_layer("layer1", dims.input, dims.hidden);
  add_layer("layer2", dims.hidden, dims.latent);
  names_.push_back("decoder.W");
  params_.push_back(Tensor2::Zero(static_cast<Index>(dims.latent), static_cast<Index>(dims.input)));
  names_.push_back("decoder.b");
  params_.push_back(Tensor2::Zero(1, static_cast<Index>(dims.input)));
}

Tensor2& GraphModel::param(std::string_view name) {
  for (std::size_t k = 0; k < names_.size(); ++k)
    if (names_[k] == name) return params_[k];
  throw ValidationError("model has no parameter '" + std::string(name) + "'");
}

const Tensor2& GraphModel::param(std::string_view name) const {
  return const_cast<GraphModel*>(this)->param(name);
}

std::size_t GraphModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.size());
  return total;
}

GraphModel GraphModel::from_tensors(Arch arch, std::vector<std::string> names, std::vector<Tensor2> tensors) {
  if (names.size() != tensors.size()) throw ShapeError("tensor and name counts differ");
  const Tensor2* dec = nullptr;
  const Tensor2* l1 = nullptr;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == "decoder.W") dec = &tensors[k];
    if (k == 0) l1 = &tensors[k];
  }
  if (dec == nullptr || l1 == nullptr) throw ShapeError("model tensors lack a decoder or first layer");
  ModelDims dims{static_cast<std::size_t>(dec->cols()), static_cast<std::size_t>(l1->cols()),
                 static_cast<std::size_t>(dec->rows())};
  GraphModel model(arch, dims);
  if (names != model.names_) throw ShapeError("model tensor names do not match architecture " + std::string(to_string(arch)));
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (tensors[k].rows() != model.params_[k].rows() || tensors[k].cols() != model.params_[k].cols())
      throw ShapeError("tensor " + names[k] + " has an unexpected shape");
    if (!tensors[k].allFinite()) throw ShapeError("tensor " + names[k] + " has non-finite entries");
    model.params_[k] = std::move(tensors[k]);
  }
  return model;
}

bool operator==(const GraphModel& a, const GraphModel& b) {
  if (a.arch_ != b.arch_ || !(a.dims_ == b.dims_) || a.names_ != b.names_) return false;
  for (std::size_t k = 0; k < a.params_.size(); ++k)
    if (a.params_[k] != b.params_[k]) return false;
  return true;
}

std::size_t parameter_count(Arch arch, const ModelDims& d) {
  const std::size_t L = d.input;
  const std::size_t H = d.hidden;
  const std::size_t Z = d.latent;
  const std::size_t decoder = Z * L + L;
  switch (arch) {
    case Arch::GCN: return (L * H + H) + (H * Z + Z) + decoder;
    case Arch::GAT: return (L * H + 3 * H) + (H * Z + 3 * Z) + decoder;
    case Arch::GT: return 4 * (L * H + H) + 4 * (H * Z + Z) + decoder;
  }
  return 0;
}

void glorot_init(GraphModel& model, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "glorot");
  for (std::size_t k = 0; k < model.params().size(); ++k) {
    auto& p = model.params()[k];
    const std::string& name = model.names()[k];
    const auto leaf = name.substr(name.find('.') + 1);
    if (leaf.starts_with("b")) {
      p.setZero();
      continue;
    }
    // Attention vectors are 1 x C; weights are fan_in x fan_out.
    const double fan_sum = leaf.starts_with("att") ? static_cast<double>(p.cols() + 1)
                                                   : static_cast<double>(p.rows() + p.cols());
    const double limit = std::sqrt(6.0 / fan_sum);
    for (Index i = 0; i < p.rows(); ++i)
      for (Index j = 0; j < p.cols(); ++j) p(i, j) = rng.uniform(-limit, limit);
  }
}

namespace {

void check_input(const GraphModel& model, const Tensor2& x, const GraphTopology& graph) {
  if (x.cols() != static_cast<Index>(model.dims().input))
    throw ShapeError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(model.dims().input));
  if (graph.size() == 0 || x.rows() % static_cast<Index>(graph.size()) != 0)
    throw ShapeError("input rows are not a multiple of the node count");
}

}  // namespace

Tensor2 model_forward(const GraphModel& model, const Tensor2& x, const GraphTopology& graph) {
  check_input(model, x, graph);
  const Tensor2 h1 = layer_forward(model.arch(), model.layer1(), x, graph, Activation::Relu);
  const Tensor2 h2 = layer_forward(model.arch(), model.layer2(), h1, graph, Activation::Identity);
  Tensor2 out(x.rows(), x.cols());
  out.noalias() = h2 * model.decoder_w();
  out.rowwise() += model.decoder_b().row(0);
  return out;
}

double mse(const Tensor2& x, const Tensor2& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    throw ShapeError("mse: shapes " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " and " +
                     std::to_string(x_hat.rows()) + "x" + std::to_string(x_hat.cols()) + " differ");
  if (x.size() == 0) throw ShapeError("mse of empty tensors");
  return (x - x_hat).squaredNorm() / static_cast<double>(x.size());
}

Gradients backward(const GraphModel& model, const Tensor2& target, const Tensor2& input, const GraphTopology& graph,
                   double scale) {
  check_input(model, input, graph);
  if (target.rows() != input.rows() || target.cols() != input.cols()) throw ShapeError("target and input shapes differ");
  const Arch arch = model.arch();
  LayerCache c1;
  LayerCache c2;
  const Tensor2 h1 = layer_forward(arch, model.layer1(), input, graph, Activation::Relu, &c1);
  const Tensor2 h2 = layer_forward(arch, model.layer2(), h1, graph, Activation::Identity, &c2);
  Tensor2 out(input.rows(), input.cols());
  out.noalias() = h2 * model.decoder_w();
  out.rowwise() += model.decoder_b().row(0);

  Gradients g;
  g.loss = scale * mse(target, out);
  for (const auto& p : model.params()) g.grads.push_back(Tensor2::Zero(p.rows(), p.cols()));

  const Tensor2 d_out = (out - target) * (2.0 * scale / static_cast<double>(out.size()));
  const std::size_t per_layer = model.layer1().size();
  g.grads[2 * per_layer].noalias() = h2.transpose() * d_out;
  g.grads[2 * per_layer + 1] = d_out.colwise().sum();
  Tensor2 d_h2(h2.rows(), h2.cols());
  d_h2.noalias() = d_out * model.decoder_w().transpose();

  std::span<Tensor2> grads(g.grads);
  const Tensor2 d_h1 = layer_backward(arch, model.layer2(), c2, graph, Activation::Identity, d_h2,
                                      grads.subspan(per_layer, per_layer), true);
  layer_backward(arch, model.layer1(), c1, graph, Activation::Relu, d_h1, grads.subspan(0, per_layer), false);
  return g;
}

}  // namespace swarmnet
