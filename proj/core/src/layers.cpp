#include "swarmnet/layers.hpp"

#include <cmath>

#include "swarmnet/error.hpp"

namespace swarmnet {

GraphTopology::GraphTopology(const Tensor2& adjacency) : n_(static_cast<std::size_t>(adjacency.rows())) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("adjacency must be square");
  adjacency_ = adjacency;
  in_.assign(n_, {});
  Tensor2 m = Tensor2::Identity(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      const double a = adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (a != 0.0 && a != 1.0) throw ShapeError("adjacency entries must be 0 or 1");
      if (a == 1.0 && i != j) {
        in_[j].push_back(i);
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
      }
    }
  const Eigen::VectorXd inv_sqrt = m.rowwise().sum().array().rsqrt();
  gcn_ = inv_sqrt.asDiagonal() * m * inv_sqrt.asDiagonal();
}

GraphTopology GraphTopology::from_bytes(std::size_t n, const std::vector<std::uint8_t>& adjacency) {
  if (adjacency.size() != n * n) throw ShapeError("adjacency byte matrix has wrong size");
  Tensor2 a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = adjacency[i * n + j] ? 1.0 : 0.0;
  return GraphTopology(a);
}

std::string_view to_string(Arch a) {
  switch (a) {
    case Arch::GCN: return "gcn";
    case Arch::GAT: return "gat";
    case Arch::GT: return "gt";
  }
  return "?";
}

Arch arch_from_string(std::string_view s) {
  if (s == "gcn" || s == "GCN") return Arch::GCN;
  if (s == "gat" || s == "GAT") return Arch::GAT;
  if (s == "gt" || s == "GT") return Arch::GT;
  throw ValidationError("unknown architecture '" + std::string(s) + "' (expected gcn, gat or gt)");
}

std::vector<std::string> layer_param_names(Arch arch) {
  switch (arch) {
    case Arch::GCN: return {"W", "b"};
    case Arch::GAT: return {"W", "att_dst", "att_src", "b"};
    case Arch::GT: return {"W_query", "b_query", "W_key", "b_key", "W_value", "b_value", "W_root", "b_root"};
  }
  return {};
}

std::vector<std::pair<std::size_t, std::size_t>> layer_param_shapes(Arch arch, std::size_t in, std::size_t out) {
  switch (arch) {
    case Arch::GCN: return {{in, out}, {1, out}};
    case Arch::GAT: return {{in, out}, {1, out}, {1, out}, {1, out}};
    case Arch::GT: return {{in, out}, {1, out}, {in, out}, {1, out}, {in, out}, {1, out}, {in, out}, {1, out}};
  }
  return {};
}

namespace {

using Index = Eigen::Index;

void check_params(Arch arch, std::span<const Tensor2> params, const Tensor2& h, const GraphTopology& graph) {
  const auto names = layer_param_names(arch);
  if (params.size() != names.size()) throw ShapeError("wrong number of layer parameters");
  if (graph.size() == 0 || h.rows() % static_cast<Index>(graph.size()) != 0)
    throw ShapeError("feature rows (" + std::to_string(h.rows()) + ") are not a multiple of the node count (" +
                     std::to_string(graph.size()) + ")");
  const auto shapes = layer_param_shapes(arch, static_cast<std::size_t>(h.cols()),
                                         static_cast<std::size_t>(params[0].cols()));
  for (std::size_t k = 0; k < params.size(); ++k)
    if (params[k].rows() != static_cast<Index>(shapes[k].first) ||
        params[k].cols() != static_cast<Index>(shapes[k].second))
      throw ShapeError("layer parameter " + names[k] + " has shape " + std::to_string(params[k].rows()) + "x" +
                       std::to_string(params[k].cols()) + ", expected " + std::to_string(shapes[k].first) + "x" +
                       std::to_string(shapes[k].second));
}

Tensor2 activate(const Tensor2& pre, Activation act) {
  if (act == Activation::Relu) return pre.cwiseMax(0.0);
  return pre;
}

// Softmax over logits[begin, end) in place.
void softmax_inplace(std::vector<double>& v, std::size_t begin, std::size_t end) {
  if (begin == end) return;
  double mx = v[begin];
  for (std::size_t k = begin + 1; k < end; ++k) mx = std::max(mx, v[k]);
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    v[k] = std::exp(v[k] - mx);
    sum += v[k];
  }
  for (std::size_t k = begin; k < end; ++k) v[k] /= sum;
}

// GAT neighbourhood of node i: in-neighbours followed by i itself.
std::vector<std::vector<std::size_t>> gat_neighbourhoods(const GraphTopology& graph) {
  std::vector<std::vector<std::size_t>> nb(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    nb[i] = graph.in_neighbors(i);
    nb[i].push_back(i);
  }
  return nb;
}

Tensor2 gcn_pre(std::span<const Tensor2> p, const Tensor2& h, const GraphTopology& graph, LayerCache& c) {
  const Index n = static_cast<Index>(graph.size());
  const Index batch = h.rows() / n;
  c.z.noalias() = h * p[0];
  Tensor2 pre(h.rows(), p[0].cols());
  const Tensor2& prop = graph.gcn_propagation();
  for (Index s = 0; s < batch; ++s) pre.middleRows(s * n, n).noalias() = prop * c.z.middleRows(s * n, n);
  pre.rowwise() += p[1].row(0);
  return pre;
}

Tensor2 gat_pre(std::span<const Tensor2> p, const Tensor2& h, const GraphTopology& graph, LayerCache& c) {
  const Index n = static_cast<Index>(graph.size());
  const Index batch = h.rows() / n;
  const Index out = p[0].cols();
  c.z.noalias() = h * p[0];
  const Eigen::VectorXd s_dst = c.z * p[1].row(0).transpose();
  const Eigen::VectorXd s_src = c.z * p[2].row(0).transpose();
  const auto nb = gat_neighbourhoods(graph);
  c.alpha.clear();
  c.logit.clear();
  Tensor2 pre = Tensor2::Zero(h.rows(), out);
  for (Index s = 0; s < batch; ++s) {
    for (Index i = 0; i < n; ++i) {
      const Index row = s * n + i;
      const std::size_t begin = c.alpha.size();
      for (const std::size_t j : nb[static_cast<std::size_t>(i)]) {
        const double x = s_dst(row) + s_src(s * n + static_cast<Index>(j));
        c.logit.push_back(x);
        c.alpha.push_back(x > 0.0 ? x : kGatNegativeSlope * x);
      }
      softmax_inplace(c.alpha, begin, c.alpha.size());
      std::size_t k = begin;
      for (const std::size_t j : nb[static_cast<std::size_t>(i)])
        pre.row(row) += c.alpha[k++] * c.z.row(s * n + static_cast<Index>(j));
    }
  }
  pre.rowwise() += p[3].row(0);
  return pre;
}

Tensor2 gt_pre(std::span<const Tensor2> p, const Tensor2& h, const GraphTopology& graph, LayerCache& c) {
  const Index n = static_cast<Index>(graph.size());
  const Index batch = h.rows() / n;
  const Index out = p[0].cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(out));
  c.z.noalias() = h * p[0];
  c.z.rowwise() += p[1].row(0);
  c.key.noalias() = h * p[2];
  c.key.rowwise() += p[3].row(0);
  c.value.noalias() = h * p[4];
  c.value.rowwise() += p[5].row(0);
  Tensor2 pre(h.rows(), out);
  pre.noalias() = h * p[6];
  pre.rowwise() += p[7].row(0);
  c.alpha.clear();
  for (Index s = 0; s < batch; ++s) {
    for (Index i = 0; i < n; ++i) {
      const Index row = s * n + i;
      const auto& nb = graph.in_neighbors(static_cast<std::size_t>(i));
      const std::size_t begin = c.alpha.size();
      for (const std::size_t j : nb) c.alpha.push_back(c.z.row(row).dot(c.key.row(s * n + static_cast<Index>(j))) * scale);
      softmax_inplace(c.alpha, begin, c.alpha.size());
      std::size_t k = begin;
      for (const std::size_t j : nb) pre.row(row) += c.alpha[k++] * c.value.row(s * n + static_cast<Index>(j));
    }
  }
  return pre;
}

}  // namespace

Tensor2 layer_forward(Arch arch, std::span<const Tensor2> params, const Tensor2& h, const GraphTopology& graph,
                      Activation act, LayerCache* cache) {
  check_params(arch, params, h, graph);
  LayerCache local;
  LayerCache& c = cache ? *cache : local;
  Tensor2 pre;
  switch (arch) {
    case Arch::GCN: pre = gcn_pre(params, h, graph, c); break;
    case Arch::GAT: pre = gat_pre(params, h, graph, c); break;
    case Arch::GT: pre = gt_pre(params, h, graph, c); break;
  }
  Tensor2 out = activate(pre, act);
  if (cache) {
    c.input = h;
    c.pre = std::move(pre);
  }
  return out;
}

Tensor2 layer_backward(Arch arch, std::span<const Tensor2> params, const LayerCache& c, const GraphTopology& graph,
                       Activation act, const Tensor2& grad_out, std::span<Tensor2> grads, bool want_input_grad) {
  const Index n = static_cast<Index>(graph.size());
  const Index batch = c.input.rows() / n;
  Tensor2 g = grad_out;
  if (act == Activation::Relu) g.array() *= (c.pre.array() > 0.0).cast<double>();

  Tensor2 grad_in;
  switch (arch) {
    case Arch::GCN: {
      const Tensor2& prop = graph.gcn_propagation();
      Tensor2 dz(g.rows(), g.cols());
      for (Index s = 0; s < batch; ++s) dz.middleRows(s * n, n).noalias() = prop.transpose() * g.middleRows(s * n, n);
      grads[0].noalias() += c.input.transpose() * dz;
      grads[1] += g.colwise().sum();
      if (want_input_grad) grad_in.noalias() = dz * params[0].transpose();
      break;
    }
    case Arch::GAT: {
      const auto nb = gat_neighbourhoods(graph);
      const Eigen::RowVectorXd att_dst = params[1].row(0);
      const Eigen::RowVectorXd att_src = params[2].row(0);
      Tensor2 dz = Tensor2::Zero(g.rows(), g.cols());
      Eigen::RowVectorXd d_dst = Eigen::RowVectorXd::Zero(g.cols());
      Eigen::RowVectorXd d_src = Eigen::RowVectorXd::Zero(g.cols());
      std::vector<double> dalpha;
      std::size_t k0 = 0;
      for (Index s = 0; s < batch; ++s) {
        for (Index i = 0; i < n; ++i) {
          const Index row = s * n + i;
          const auto& hood = nb[static_cast<std::size_t>(i)];
          dalpha.assign(hood.size(), 0.0);
          double weighted = 0.0;
          for (std::size_t q = 0; q < hood.size(); ++q) {
            const Index jr = s * n + static_cast<Index>(hood[q]);
            const double a = c.alpha[k0 + q];
            dalpha[q] = g.row(row).dot(c.z.row(jr));
            dz.row(jr) += a * g.row(row);
            weighted += a * dalpha[q];
          }
          for (std::size_t q = 0; q < hood.size(); ++q) {
            const Index jr = s * n + static_cast<Index>(hood[q]);
            const double a = c.alpha[k0 + q];
            const double de = a * (dalpha[q] - weighted);
            const double dlogit = de * (c.logit[k0 + q] > 0.0 ? 1.0 : kGatNegativeSlope);
            d_dst += dlogit * c.z.row(row);
            d_src += dlogit * c.z.row(jr);
            dz.row(row) += dlogit * att_dst;
            dz.row(jr) += dlogit * att_src;
          }
          k0 += hood.size();
        }
      }
      grads[0].noalias() += c.input.transpose() * dz;
      grads[1].row(0) += d_dst;
      grads[2].row(0) += d_src;
      grads[3] += g.colwise().sum();
      if (want_input_grad) grad_in.noalias() = dz * params[0].transpose();
      break;
    }
    case Arch::GT: {
      const double scale = 1.0 / std::sqrt(static_cast<double>(g.cols()));
      Tensor2 dq = Tensor2::Zero(g.rows(), g.cols());
      Tensor2 dk = Tensor2::Zero(g.rows(), g.cols());
      Tensor2 dv = Tensor2::Zero(g.rows(), g.cols());
      std::vector<double> dalpha;
      std::size_t k0 = 0;
      for (Index s = 0; s < batch; ++s) {
        for (Index i = 0; i < n; ++i) {
          const Index row = s * n + i;
          const auto& hood = graph.in_neighbors(static_cast<std::size_t>(i));
          dalpha.assign(hood.size(), 0.0);
          double weighted = 0.0;
          for (std::size_t q = 0; q < hood.size(); ++q) {
            const Index jr = s * n + static_cast<Index>(hood[q]);
            const double a = c.alpha[k0 + q];
            dalpha[q] = g.row(row).dot(c.value.row(jr));
            dv.row(jr) += a * g.row(row);
            weighted += a * dalpha[q];
          }
          for (std::size_t q = 0; q < hood.size(); ++q) {
            const Index jr = s * n + static_cast<Index>(hood[q]);
            const double ds = c.alpha[k0 + q] * (dalpha[q] - weighted) * scale;
            dq.row(row) += ds * c.key.row(jr);
            dk.row(jr) += ds * c.z.row(row);
          }
          k0 += hood.size();
        }
      }
      grads[0].noalias() += c.input.transpose() * dq;
      grads[1] += dq.colwise().sum();
      grads[2].noalias() += c.input.transpose() * dk;
      grads[3] += dk.colwise().sum();
      grads[4].noalias() += c.input.transpose() * dv;
      grads[5] += dv.colwise().sum();
      grads[6].noalias() += c.input.transpose() * g;
      grads[7] += g.colwise().sum();
      if (want_input_grad) {
        grad_in.noalias() = dq * params[0].transpose();
        grad_in.noalias() += dk * params[2].transpose();
        grad_in.noalias() += dv * params[4].transpose();
        grad_in.noalias() += g * params[6].transpose();
      }
      break;
    }
  }
  return grad_in;
}

Tensor2 gcn_forward(const Tensor2& h, const GraphTopology& graph, const Tensor2& w, const Tensor2& bias,
                    Activation act) {
  const std::vector<Tensor2> p = {w, bias};
  return layer_forward(Arch::GCN, p, h, graph, act);
}

Tensor2 gat_forward(const Tensor2& h, const GraphTopology& graph, const Tensor2& w, const Tensor2& att_dst,
                    const Tensor2& att_src, const Tensor2& bias, Activation act) {
  const std::vector<Tensor2> p = {w, att_dst, att_src, bias};
  return layer_forward(Arch::GAT, p, h, graph, act);
}

Tensor2 gt_forward(const Tensor2& h, const GraphTopology& graph, const GtWeights& wt, Activation act) {
  const std::vector<Tensor2> p = {wt.w_query, wt.b_query, wt.w_key, wt.b_key,
                                  wt.w_value, wt.b_value, wt.w_root, wt.b_root};
  return layer_forward(Arch::GT, p, h, graph, act);
}

Tensor2 attention_matrix(Arch arch, std::span<const Tensor2> params, const Tensor2& h, const GraphTopology& graph) {
  if (arch == Arch::GCN) throw ValidationError("GCN has no attention weights");
  LayerCache c;
  const Index n = static_cast<Index>(graph.size());
  layer_forward(arch, params, h.topRows(n), graph, Activation::Identity, &c);
  Tensor2 att = Tensor2::Zero(n, n);
  std::size_t k = 0;
  for (Index i = 0; i < n; ++i) {
    auto hood = graph.in_neighbors(static_cast<std::size_t>(i));
    if (arch == Arch::GAT) hood.push_back(static_cast<std::size_t>(i));
    for (const std::size_t j : hood) att(i, static_cast<Index>(j)) = c.alpha[k++];
  }
  return att;
}

}  // namespace swarmnet
