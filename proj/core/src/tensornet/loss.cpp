#include "cubesort/tensornet/loss.hpp"

#include <algorithm>
#include <cmath>

#include "cubesort/tensornet/layers.hpp"

namespace cubesort::nn {

namespace {

template <typename T>
constexpr T kProbFloor = static_cast<T>(1e-30);

void check_label(std::size_t label, std::size_t k) {
  if (label >= k) {
    throw Error(ErrorCode::LabelOutOfRange,
                "label " + std::to_string(label) + " with " + std::to_string(k) + " classes");
  }
}

}  // namespace

template <typename T>
T cross_entropy_loss(const BasicTensor<T>& probs, std::size_t label) {
  check_label(label, probs.size());
  return -std::log(std::max(probs[label], kProbFloor<T>));
}

template <typename T>
BasicTensor<T> cross_entropy_backward(const BasicTensor<T>& probs, std::size_t label) {
  check_label(label, probs.size());
  BasicTensor<T> g(probs.shape());
  g[label] = T{-1} / std::max(probs[label], kProbFloor<T>);
  return g;
}

template <typename T>
LossAndGrad<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::size_t label) {
  check_label(label, logits.size());
  LossAndGrad<T> r{T{0}, softmax(logits)};
  r.loss = -std::log(std::max(r.grad[label], kProbFloor<T>));
  r.grad[label] -= T{1};
  return r;
}

template <typename T>
T smooth_l1_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "smooth_l1 size mismatch");
  T total{0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = std::abs(pred[i] - target[i]);
    total += d < T{1} ? T{0.5} * d * d : d - T{0.5};
  }
  return total;
}

template <typename T>
BasicTensor<T> smooth_l1_backward(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "smooth_l1 size mismatch");
  BasicTensor<T> g(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    g[i] = std::clamp(pred[i] - target[i], T{-1}, T{1});
  }
  return g;
}

#define CUBESORT_INSTANTIATE_LOSS(T)                                                      \
  template T cross_entropy_loss(const BasicTensor<T>&, std::size_t);                      \
  template BasicTensor<T> cross_entropy_backward(const BasicTensor<T>&, std::size_t);     \
  template LossAndGrad<T> softmax_cross_entropy(const BasicTensor<T>&, std::size_t);      \
  template T smooth_l1_loss(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> smooth_l1_backward(const BasicTensor<T>&, const BasicTensor<T>&);

CUBESORT_INSTANTIATE_LOSS(float)
CUBESORT_INSTANTIATE_LOSS(double)

#undef CUBESORT_INSTANTIATE_LOSS

}  // namespace cubesort::nn
