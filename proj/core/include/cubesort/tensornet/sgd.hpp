#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cubesort/tensornet/tensor.hpp"

namespace cubesort::nn {

struct SgdConfig {
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::uint64_t seed = 42;

  /// Throws InvalidConfig unless learning_rate > 0 and momentum in [0, 1).
  void validate() const;
};

/// v <- momentum * v - lr * g;  p <- p + v
void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdConfig& config);

/// Momentum SGD over a fixed parameter list; velocities start at zero.
class SgdOptimizer {
 public:
  SgdOptimizer(SgdConfig config, std::vector<Tensor*> params);

  /// grads[i] pairs with the i-th parameter.
  void step(std::span<const Tensor> grads);

  const SgdConfig& config() const noexcept { return config_; }

 private:
  SgdConfig config_;
  std::vector<Tensor*> params_;
  std::vector<Tensor> velocity_;
};

}  // namespace cubesort::nn
