#include <gtest/gtest.h>

#include "oracles.hpp"
#include "swarmnet/adam.hpp"
#include "swarmnet/layers.hpp"
#include "swarmnet/model.hpp"

using namespace swarmnet;
using namespace swarmnet::testing;

namespace {

struct Case {
  Tensor2 adjacency;
  Tensor2 h;
  std::size_t fout;
};

Case random_case(Rng& rng) {
  const std::size_t n = 1 + rng.below(6);
  const std::size_t batches = 1 + rng.below(3);
  const std::size_t fin = 1 + rng.below(7);
  return {random_adjacency(rng, n), random_tensor(rng, batches * n, fin), 1 + rng.below(5)};
}

std::vector<Tensor2> random_params(Rng& rng, Arch arch, std::size_t fin, std::size_t fout) {
  std::vector<Tensor2> p;
  for (auto [r, c] : layer_param_shapes(arch, fin, fout)) p.push_back(random_tensor(rng, r, c));
  return p;
}

double max_abs(const Tensor2& a, const Tensor2& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

class LayerOracle : public ::testing::TestWithParam<Arch> {};

TEST_P(LayerOracle, MatchesExplicitLoopsOnRandomGraphs) {
  const Arch arch = GetParam();
  Rng rng(hash_label("oracle") + static_cast<int>(arch));
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    const GraphTopology g(c.adjacency);
    const auto p = random_params(rng, arch, c.h.cols(), c.fout);
    for (Activation act : {Activation::Identity, Activation::Relu}) {
      const bool relu_on = act == Activation::Relu;
      const Tensor2 got = layer_forward(arch, p, c.h, g, act);
      Tensor2 want;
      switch (arch) {
        case Arch::GCN: want = gcn_oracle(c.h, c.adjacency, p[0], p[1], relu_on); break;
        case Arch::GAT: want = gat_oracle(c.h, c.adjacency, p[0], p[1], p[2], p[3], relu_on); break;
        case Arch::GT: want = gt_oracle(c.h, c.adjacency, p, relu_on); break;
      }
      ASSERT_EQ(got.rows(), want.rows());
      ASSERT_EQ(got.cols(), want.cols());
      EXPECT_LE(max_abs(got, want), 1e-9) << "trial " << trial;
    }
  }
}

TEST_P(LayerOracle, AttentionRowsSumToOne) {
  const Arch arch = GetParam();
  if (arch == Arch::GCN) GTEST_SKIP();
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Case c = random_case(rng);
    const GraphTopology g(c.adjacency);
    const auto p = random_params(rng, arch, c.h.cols(), c.fout);
    const Tensor2 att = attention_matrix(arch, p, c.h.topRows(g.size()), g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool empty = arch == Arch::GT && g.in_neighbors(i).empty();
      EXPECT_NEAR(att.row(i).sum(), empty ? 0.0 : 1.0, 1e-12);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(All, LayerOracle, ::testing::Values(Arch::GCN, Arch::GAT, Arch::GT),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(GcnPropagation, UsesTransposedAdjacencyPlusSelfLoops) {
  Tensor2 a = Tensor2::Zero(3, 3);
  a(0, 1) = 1;
  a(0, 2) = 1;
  a(1, 2) = 1;
  const GraphTopology g(a);
  const Tensor2& p = g.gcn_propagation();
  EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(p(2, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_EQ(p(0, 1), 0.0);
}

TEST(GtLayer, IsolatedNodeGetsRootTermOnly) {
  Rng rng(3);
  const Tensor2 a = Tensor2::Zero(2, 2);
  const GraphTopology g(a);
  const auto p = random_params(rng, Arch::GT, 3, 2);
  const Tensor2 h = random_tensor(rng, 2, 3);
  const Tensor2 out = layer_forward(Arch::GT, p, h, g, Activation::Identity);
  const Tensor2 root = (h * p[6]).rowwise() + p[7].row(0);
  EXPECT_LE(max_abs(out, root), 1e-15);
}

class Gradient : public ::testing::TestWithParam<Arch> {};

TEST_P(Gradient, MatchesCentralDifferences) {
  const Arch arch = GetParam();
  Rng rng(hash_label("fd") + static_cast<int>(arch));
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 2 + rng.below(4);
    const Tensor2 adjacency = random_adjacency(rng, n, 0.5);
    const GraphTopology g(adjacency);
    GraphModel model(arch, {5, 4, 3});
    glorot_init(model, 100 + trial);
    for (auto& t : model.params()) t += random_tensor(rng, t.rows(), t.cols(), 0.1);
    const Tensor2 target = random_tensor(rng, 2 * n, 5, 0.5).array() + 0.5;
    const Tensor2 input = target + random_tensor(rng, 2 * n, 5, 0.2);

    const Gradients grad = backward(model, target, input, g);
    EXPECT_NEAR(grad.loss, mse(target, model_forward(model, input, g)), 1e-15);

    const double step = 1e-5;
    for (std::size_t k = 0; k < model.params().size(); ++k) {
      Tensor2& t = model.params()[k];
      for (Eigen::Index e = 0; e < t.size(); ++e) {
        const double saved = t.data()[e];
        t.data()[e] = saved + step;
        const double up = mse(target, model_forward(model, input, g));
        t.data()[e] = saved - step;
        const double down = mse(target, model_forward(model, input, g));
        t.data()[e] = saved;
        const double numeric = (up - down) / (2 * step);
        const double analytic = grad.grads[k].data()[e];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        EXPECT_LE(std::abs(numeric - analytic) / scale, 1e-4)
            << model.names()[k] << "[" << e << "] analytic " << analytic << " numeric " << numeric;
      }
    }
  }
}

TEST_P(Gradient, ScaleMultipliesLossAndGradients) {
  const Arch arch = GetParam();
  Rng rng(11);
  const GraphTopology g(random_adjacency(rng, 4, 0.5));
  GraphModel model(arch, {6, 4, 3});
  glorot_init(model, 5);
  const Tensor2 x = random_tensor(rng, 4, 6);
  const Gradients a = backward(model, x, x, g);
  const Gradients b = backward(model, x, x, g, 0.25);
  EXPECT_NEAR(b.loss, 0.25 * a.loss, 1e-15);
  for (std::size_t k = 0; k < a.grads.size(); ++k) EXPECT_LE(max_abs(b.grads[k], 0.25 * a.grads[k]), 1e-15);
}

INSTANTIATE_TEST_SUITE_P(All, Gradient, ::testing::Values(Arch::GCN, Arch::GAT, Arch::GT),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Adam, MatchesScalarOracle) {
  Rng rng(21);
  AdamConfig cfg;
  std::vector<Tensor2> params{random_tensor(rng, 3, 4), random_tensor(rng, 1, 4)};
  std::vector<Tensor2> ref = params;
  AdamState state(params, cfg);
  std::vector<std::vector<double>> m(2), v(2);
  for (std::size_t k = 0; k < 2; ++k) {
    m[k].assign(ref[k].size(), 0.0);
    v[k].assign(ref[k].size(), 0.0);
  }
  for (int t = 1; t <= 25; ++t) {
    std::vector<Tensor2> grads{random_tensor(rng, 3, 4), random_tensor(rng, 1, 4)};
    adam_step(state, params, grads);
    for (std::size_t k = 0; k < 2; ++k)
      for (Eigen::Index e = 0; e < ref[k].size(); ++e) {
        double& theta = ref[k].data()[e];
        const double g = grads[k].data()[e] + cfg.weight_decay * theta;
        m[k][e] = cfg.beta1 * m[k][e] + (1 - cfg.beta1) * g;
        v[k][e] = cfg.beta2 * v[k][e] + (1 - cfg.beta2) * g * g;
        const double mh = m[k][e] / (1 - std::pow(cfg.beta1, t));
        const double vh = v[k][e] / (1 - std::pow(cfg.beta2, t));
        theta -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
      }
    for (std::size_t k = 0; k < 2; ++k) EXPECT_LE(max_abs(params[k], ref[k]), 1e-12) << "step " << t;
  }
  EXPECT_EQ(state.t(), 25u);
}

TEST(Adam, RejectsMismatchedGradients) {
  std::vector<Tensor2> params{Tensor2::Zero(2, 2)};
  AdamState state(params);
  std::vector<Tensor2> grads{Tensor2::Zero(2, 3)};
  EXPECT_ANY_THROW(adam_step(state, params, grads));
}

TEST(Model, ParameterCounts) {
  for (Arch arch : {Arch::GCN, Arch::GAT, Arch::GT}) {
    const ModelDims dims{40, 64, 32};
    EXPECT_EQ(GraphModel(arch, dims).parameter_count(), parameter_count(arch, dims)) << to_string(arch);
  }
  EXPECT_EQ(parameter_count(Arch::GT, {2048, 64, 32}), 289u * 2048u + 8576u);
}

TEST(Model, GlorotInitIsSeededAndBiasesAreZero) {
  GraphModel a(Arch::GT, {10, 8, 4}), b(Arch::GT, {10, 8, 4}), c(Arch::GT, {10, 8, 4});
  glorot_init(a, 1);
  glorot_init(b, 1);
  glorot_init(c, 2);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  EXPECT_TRUE(a.param("layer1.b_query").isZero());
  EXPECT_TRUE(a.decoder_b().isZero());
  const double bound = std::sqrt(6.0 / (10 + 8));
  EXPECT_LE(a.param("layer1.W_query").cwiseAbs().maxCoeff(), bound);
}
