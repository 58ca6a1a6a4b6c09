#include "cubesort/tensornet/sgd.hpp"

#include <string>

namespace cubesort::nn {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "momentum must lie in [0, 1)");
  }
}

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdConfig& config) {
  if (grad.shape() != param.shape() || velocity.shape() != param.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "sgd_step: parameter " + shape_string(param.shape()) +
                                              ", gradient " + shape_string(grad.shape()) +
                                              ", velocity " + shape_string(velocity.shape()));
  }
  const auto mu = static_cast<float>(config.momentum);
  const auto lr = static_cast<float>(config.learning_rate);
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = mu * velocity[i] - lr * grad[i];
    param[i] += velocity[i];
  }
}

SgdOptimizer::SgdOptimizer(SgdConfig config, std::vector<Tensor*> params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  velocity_.reserve(params_.size());
  for (const Tensor* p : params_) velocity_.emplace_back(p->shape());
}

void SgdOptimizer::step(std::span<const Tensor> grads) {
  if (grads.size() != params_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer got " + std::to_string(grads.size()) +
                                              " gradients for " + std::to_string(params_.size()) +
                                              " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) sgd_step(*params_[i], grads[i], velocity_[i], config_);
}

}  // namespace cubesort::nn
