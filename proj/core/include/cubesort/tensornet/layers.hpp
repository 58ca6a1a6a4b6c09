#pragma once

#include <cstddef>
#include <vector>

#include "cubesort/rng.hpp"
#include "cubesort/tensornet/tensor.hpp"

namespace cubesort::nn {

template <typename T>
struct BasicConvLayer {
  BasicTensor<T> kernels;  // [out_ch, in_ch, kh, kw], kh and kw odd
  BasicTensor<T> bias;     // [out_ch]
  std::size_t stride = 1;
  std::size_t padding = 0;

  /// Zero-initialised layer; throws InvalidArgument for even kernel sizes.
  static BasicConvLayer zeros(std::size_t out_ch, std::size_t in_ch, std::size_t kernel,
                              std::size_t stride = 1, std::size_t padding = 0);

  std::size_t out_channels() const noexcept { return kernels.dim(0); }
  std::size_t in_channels() const noexcept { return kernels.dim(1); }
  std::size_t kernel_h() const noexcept { return kernels.dim(2); }
  std::size_t kernel_w() const noexcept { return kernels.dim(3); }
};

using ConvLayer = BasicConvLayer<float>;
using ConvLayerD = BasicConvLayer<double>;

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;  // empty when not requested
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

/// Cross-correlation with zero padding: x [C,H,W] -> [out_ch, H', W'] with
/// H' = (H + 2p - kh) / stride + 1.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer,
                             const BasicTensor<T>& grad_out, bool want_input_grad = true);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Gradient of relu given its input `x` (subgradient 0 at x == 0).
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out);

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

/// 2x2 stride-2 max pooling over [C,H,W]; H and W must be even. Ties keep
/// the first element in raster order of the window.
template <typename T>
PoolResult<T> maxpool2x2(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_out,
                                   const std::vector<std::size_t>& argmax, const Shape& input_shape);

template <typename T>
struct BasicLinearLayer {
  BasicTensor<T> weights;  // [m, n]
  BasicTensor<T> bias;     // [m]

  static BasicLinearLayer zeros(std::size_t out_features, std::size_t in_features);
  std::size_t out_features() const noexcept { return weights.dim(0); }
  std::size_t in_features() const noexcept { return weights.dim(1); }
};

using LinearLayer = BasicLinearLayer<float>;
using LinearLayerD = BasicLinearLayer<double>;

template <typename T>
struct LinearGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

/// Wx + b. `x` may have any shape with n elements; the result is [m].
template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                               const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicLinearLayer<T>& layer) {
  return fully_connected(x, layer.weights, layer.bias);
}

/// Input gradient carries the shape of `x`.
template <typename T>
LinearGrads<T> fully_connected_backward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                                        const BasicTensor<T>& grad_out);

/// Max-subtracted softmax over all elements.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x);

/// Gradient through softmax given its output `probs`.
template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& probs, const BasicTensor<T>& grad_out);

/// He-style uniform fill in [-sqrt(6/fan_in), sqrt(6/fan_in)].
template <typename T>
void he_uniform_init(BasicTensor<T>& t, std::size_t fan_in, Xoshiro256ss& rng);

}  // namespace cubesort::nn
