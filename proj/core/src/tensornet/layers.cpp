#include "cubesort/tensornet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cubesort::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

// Columns processed per cache block in the im2col products.
constexpr std::size_t kColumnBlock = 1024;

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Eight independent partial sums; the fixed summation tree keeps results
// reproducible while still letting the compiler vectorise.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) noexcept {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct ConvGeometry {
  std::size_t in_c, in_h, in_w;
  std::size_t kh, kw, stride, pad;
  std::size_t out_h, out_w;

  std::size_t rows() const noexcept { return in_c * kh * kw; }
  std::size_t cols() const noexcept { return out_h * out_w; }
  bool is_pointwise() const noexcept { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& x, const BasicConvLayer<T>& layer) {
  if (x.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "conv input must be [C,H,W]");
  if (layer.kernels.rank() != 4 || layer.bias.rank() != 1 ||
      layer.bias.dim(0) != layer.kernels.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "malformed conv layer parameters");
  }
  if (x.dim(0) != layer.in_channels()) {
    throw Error(ErrorCode::ShapeMismatch, "conv input has " + std::to_string(x.dim(0)) +
                                              " channels, layer expects " +
                                              std::to_string(layer.in_channels()));
  }
  if (layer.stride == 0) throw Error(ErrorCode::InvalidArgument, "conv stride must be >= 1");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), layer.kernel_h(), layer.kernel_w(),
                 layer.stride, layer.padding, 0, 0};
  if (g.in_h + 2 * g.pad < g.kh || g.in_w + 2 * g.pad < g.kw) {
    throw Error(ErrorCode::ShapeMismatch, "conv kernel larger than padded input");
  }
  g.out_h = (g.in_h + 2 * g.pad - g.kh) / g.stride + 1;
  g.out_w = (g.in_w + 2 * g.pad - g.kw) / g.stride + 1;
  return g;
}

template <typename T>
std::vector<T> im2col(const BasicTensor<T>& x, const ConvGeometry& g) {
  std::vector<T> col(g.rows() * g.cols(), T{0});
  const T* src = x.raw();
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* dst = col.data() + ((c * g.kh + i) * g.kw + j) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          const T* row = src + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          T* out = dst + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.in_w)) out[ox] = row[ix];
          }
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im(const std::vector<T>& col, const ConvGeometry& g, BasicTensor<T>& dx) {
  T* dst = dx.raw();
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* src = col.data() + ((c * g.kh + i) * g.kw + j) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          T* row = dst + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          const T* in = src + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.in_w)) row[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicConvLayer<T> BasicConvLayer<T>::zeros(std::size_t out_ch, std::size_t in_ch,
                                           std::size_t kernel, std::size_t stride,
                                           std::size_t padding) {
  if (kernel % 2 == 0) throw Error(ErrorCode::InvalidArgument, "conv kernel size must be odd");
  BasicConvLayer layer;
  layer.kernels = BasicTensor<T>({out_ch, in_ch, kernel, kernel});
  layer.bias = BasicTensor<T>({out_ch});
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer) {
  const ConvGeometry g = conv_geometry(x, layer);
  const std::size_t out_c = layer.out_channels();
  const std::size_t k_rows = g.rows();
  const std::size_t cols = g.cols();

  std::vector<T> col_storage;
  const T* col = x.raw();
  if (!g.is_pointwise()) {
    col_storage = im2col(x, g);
    col = col_storage.data();
  }

  BasicTensor<T> out({out_c, g.out_h, g.out_w});
  T* dst = out.raw();
  const T* w = layer.kernels.raw();
  for (std::size_t o = 0; o < out_c; ++o) {
    std::fill(dst + o * cols, dst + (o + 1) * cols, layer.bias[o]);
  }
  for (std::size_t p0 = 0; p0 < cols; p0 += kColumnBlock) {
    const std::size_t n = std::min(kColumnBlock, cols - p0);
    for (std::size_t o = 0; o < out_c; ++o) {
      T* out_row = dst + o * cols + p0;
      for (std::size_t k = 0; k < k_rows; ++k) {
        axpy(w[o * k_rows + k], col + k * cols + p0, out_row, n);
      }
    }
  }
  debug_check_finite(out, "conv2d_forward");
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer,
                             const BasicTensor<T>& grad_out, bool want_input_grad) {
  const ConvGeometry g = conv_geometry(x, layer);
  const std::size_t out_c = layer.out_channels();
  require_shape(grad_out, {out_c, g.out_h, g.out_w}, "conv2d_backward grad_out");
  const std::size_t k_rows = g.rows();
  const std::size_t cols = g.cols();

  std::vector<T> col_storage;
  const T* col = x.raw();
  if (!g.is_pointwise()) {
    col_storage = im2col(x, g);
    col = col_storage.data();
  }

  ConvGrads<T> grads;
  grads.kernels = BasicTensor<T>(layer.kernels.shape());
  grads.bias = BasicTensor<T>(layer.bias.shape());
  const T* go = grad_out.raw();
  T* dw = grads.kernels.raw();
  const T* w = layer.kernels.raw();

  for (std::size_t o = 0; o < out_c; ++o) {
    const T* row = go + o * cols;
    T s{0};
    for (std::size_t p = 0; p < cols; ++p) s += row[p];
    grads.bias[o] = s;
  }

  std::vector<T> dcol;
  if (want_input_grad) dcol.assign(k_rows * cols, T{0});

  for (std::size_t p0 = 0; p0 < cols; p0 += kColumnBlock) {
    const std::size_t n = std::min(kColumnBlock, cols - p0);
    for (std::size_t o = 0; o < out_c; ++o) {
      const T* g_row = go + o * cols + p0;
      for (std::size_t k = 0; k < k_rows; ++k) {
        dw[o * k_rows + k] += dot(g_row, col + k * cols + p0, n);
      }
    }
    if (want_input_grad) {
      for (std::size_t k = 0; k < k_rows; ++k) {
        T* d_row = dcol.data() + k * cols + p0;
        for (std::size_t o = 0; o < out_c; ++o) {
          axpy(w[o * k_rows + k], go + o * cols + p0, d_row, n);
        }
      }
    }
  }

  if (want_input_grad) {
    grads.input = BasicTensor<T>(x.shape());
    if (g.is_pointwise()) {
      std::copy(dcol.begin(), dcol.end(), grads.input.raw());
    } else {
      col2im(dcol, g, grads.input);
    }
    debug_check_finite(grads.input, "conv2d_backward");
  }
  debug_check_finite(grads.kernels, "conv2d_backward");
  return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out) {
  require_shape(grad_out, x.shape(), "relu_backward grad_out");
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? grad_out[i] : T{0};
  return out;
}

template <typename T>
PoolResult<T> maxpool2x2(const BasicTensor<T>& x) {
  if (x.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "maxpool input must be [C,H,W]");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorCode::OddDimension, "maxpool2x2 needs even H and W, got " + shape_string(x.shape()));
  }
  PoolResult<T> r{BasicTensor<T>({c, h / 2, w / 2}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; y += 2) {
      for (std::size_t xx = 0; xx < w; xx += 2, ++o) {
        const std::size_t base = (ch * h + y) * w + xx;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (std::size_t i = 1; i < 4; ++i) {
          if (x[cand[i]] > x[best]) best = cand[i];
        }
        r.output[o] = x[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_out,
                                   const std::vector<std::size_t>& argmax, const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) {
    throw Error(ErrorCode::ShapeMismatch, "maxpool argmax does not match gradient");
  }
  BasicTensor<T> dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += grad_out[i];
  return dx;
}

template <typename T>
BasicLinearLayer<T> BasicLinearLayer<T>::zeros(std::size_t out_features, std::size_t in_features) {
  return {BasicTensor<T>({out_features, in_features}), BasicTensor<T>({out_features})};
}

template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                               const BasicTensor<T>& bias) {
  if (weights.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "fully_connected expects W [m,n] and b [m]");
  }
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (x.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "fully_connected input has " + std::to_string(x.size()) +
                                              " elements, W expects " + std::to_string(n));
  }
  BasicTensor<T> y({m});
  for (std::size_t i = 0; i < m; ++i) y[i] = bias[i] + dot(weights.raw() + i * n, x.raw(), n);
  debug_check_finite(y, "fully_connected");
  return y;
}

template <typename T>
LinearGrads<T> fully_connected_backward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                                        const BasicTensor<T>& grad_out) {
  if (weights.rank() != 2 || x.size() != weights.dim(1) || grad_out.size() != weights.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "fully_connected_backward shape disagreement");
  }
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  LinearGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weights.shape()), BasicTensor<T>({m})};
  for (std::size_t i = 0; i < m; ++i) {
    const T gi = grad_out[i];
    g.bias[i] = gi;
    T* dw = g.weights.raw() + i * n;
    for (std::size_t j = 0; j < n; ++j) dw[j] = gi * x[j];
    axpy(gi, weights.raw() + i * n, g.input.raw(), n);
  }
  return g;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x) {
  if (x.empty()) throw Error(ErrorCode::ShapeMismatch, "softmax of empty tensor");
  BasicTensor<T> out = x;
  const T mx = *std::max_element(x.data().begin(), x.data().end());
  T sum{0};
  for (T& v : out.data()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (T& v : out.data()) v /= sum;
  return out;
}

template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& probs, const BasicTensor<T>& grad_out) {
  require_shape(grad_out, probs.shape(), "softmax_backward grad_out");
  T inner{0};
  for (std::size_t i = 0; i < probs.size(); ++i) inner += probs[i] * grad_out[i];
  BasicTensor<T> dx(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) dx[i] = probs[i] * (grad_out[i] - inner);
  return dx;
}

template <typename T>
void he_uniform_init(BasicTensor<T>& t, std::size_t fan_in, Xoshiro256ss& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

#define CUBESORT_INSTANTIATE_LAYERS(T)                                                           \
  template struct BasicConvLayer<T>;                                                             \
  template struct BasicLinearLayer<T>;                                                           \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicConvLayer<T>&);       \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicConvLayer<T>&,         \
                                        const BasicTensor<T>&, bool);                            \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template PoolResult<T> maxpool2x2(const BasicTensor<T>&);                                      \
  template BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>&,                             \
                                              const std::vector<std::size_t>&, const Shape&);    \
  template BasicTensor<T> fully_connected(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                          const BasicTensor<T>&);                                \
  template LinearGrads<T> fully_connected_backward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                                   const BasicTensor<T>&);                       \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                        \
  template BasicTensor<T> softmax_backward(const BasicTensor<T>&, const BasicTensor<T>&);        \
  template void he_uniform_init(BasicTensor<T>&, std::size_t, Xoshiro256ss&);

CUBESORT_INSTANTIATE_LAYERS(float)
CUBESORT_INSTANTIATE_LAYERS(double)

#undef CUBESORT_INSTANTIATE_LAYERS

}  // namespace cubesort::nn
