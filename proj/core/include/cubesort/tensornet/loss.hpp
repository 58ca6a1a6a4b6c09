#pragma once

#include <cstddef>

#include "cubesort/tensornet/tensor.hpp"

namespace cubesort::nn {

/// -log(probs[label]); the probability is floored at 1e-30 so the loss stays
/// finite. Throws LabelOutOfRange.
template <typename T>
T cross_entropy_loss(const BasicTensor<T>& probs, std::size_t label);

/// d/dprobs of cross_entropy_loss.
template <typename T>
BasicTensor<T> cross_entropy_backward(const BasicTensor<T>& probs, std::size_t label);

template <typename T>
struct LossAndGrad {
  T loss{};
  BasicTensor<T> grad;
};

/// Fused softmax + cross-entropy on raw logits; grad is probs - onehot.
template <typename T>
LossAndGrad<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::size_t label);

/// Sum over coordinates of 0.5 d^2 (|d| < 1) or |d| - 0.5.
template <typename T>
T smooth_l1_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

template <typename T>
BasicTensor<T> smooth_l1_backward(const BasicTensor<T>& pred, const BasicTensor<T>& target);

}  // namespace cubesort::nn
