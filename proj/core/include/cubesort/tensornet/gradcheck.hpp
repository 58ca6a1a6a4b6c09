#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "cubesort/tensornet/layers.hpp"
#include "cubesort/tensornet/tensor.hpp"

namespace cubesort::nn {

/// A tensor that will be perturbed together with its analytic gradient.
struct GradCheckVariable {
  TensorD* value = nullptr;
  const TensorD* analytic = nullptr;
};

/// Central finite differences of `loss` against the analytic gradients.
/// Returns the maximum over all perturbed elements of
/// |a - n| / max(|a|, |n|, 1e-8). `epsilon` must lie in [1e-6, 1e-3].
double grad_check(std::span<const GradCheckVariable> variables, const std::function<double()>& loss,
                  double epsilon);

// Layer-level checks. Non-scalar layers are reduced by a fixed random
// projection L = sum(r * y) with r drawn from `seed`, so every output
// element contributes to the checked gradient.

double grad_check_conv2d(const ConvLayerD& layer, const TensorD& input, double epsilon,
                         std::uint64_t seed = 1);
double grad_check_relu(const TensorD& input, double epsilon, std::uint64_t seed = 1);
double grad_check_maxpool2x2(const TensorD& input, double epsilon, std::uint64_t seed = 1);
double grad_check_fully_connected(const LinearLayerD& layer, const TensorD& input, double epsilon,
                                  std::uint64_t seed = 1);
double grad_check_softmax(const TensorD& input, double epsilon, std::uint64_t seed = 1);
double grad_check_cross_entropy(const TensorD& probs, std::size_t label, double epsilon);
double grad_check_softmax_cross_entropy(const TensorD& logits, std::size_t label, double epsilon);
double grad_check_smooth_l1(const TensorD& pred, const TensorD& target, double epsilon);

}  // namespace cubesort::nn
