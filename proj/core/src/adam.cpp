#include "swarmnet/adam.hpp"

#include <cmath>

#include "swarmnet/error.hpp"

namespace swarmnet {

AdamState::AdamState(const std::vector<Tensor2>& params, AdamConfig config) : config_(config) {
  for (const auto& p : params) {
    m_.push_back(Tensor2::Zero(p.rows(), p.cols()));
    v_.push_back(Tensor2::Zero(p.rows(), p.cols()));
  }
}

void AdamState::step(std::vector<Tensor2>& params, const std::vector<Tensor2>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw ShapeError("adam: parameter count mismatch");
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const auto& g0 = grads[k];
    if (g0.rows() != p.rows() || g0.cols() != p.cols() || m_[k].rows() != p.rows() || m_[k].cols() != p.cols())
      throw ShapeError("adam: gradient shape mismatch");
    const auto n = p.size();
    double* pd = p.data();
    const double* gd = g0.data();
    double* md = m_[k].data();
    double* vd = v_[k].data();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = gd[i] + config_.weight_decay * pd[i];
      md[i] = b1 * md[i] + (1.0 - b1) * g;
      vd[i] = b2 * vd[i] + (1.0 - b2) * g * g;
      const double mh = md[i] / c1;
      const double vh = vd[i] / c2;
      pd[i] -= config_.lr * mh / (std::sqrt(vh) + config_.eps);
    }
  }
}

void adam_step(AdamState& state, std::vector<Tensor2>& params, const std::vector<Tensor2>& grads) {
  state.step(params, grads);
}

}  // namespace swarmnet
