#include "cubesort/tensornet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cubesort/rng.hpp"
#include "cubesort/tensornet/loss.hpp"

namespace cubesort::nn {

double grad_check(std::span<const GradCheckVariable> variables, const std::function<double()>& loss,
                  double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw Error(ErrorCode::InvalidArgument, "grad_check epsilon must lie in [1e-6, 1e-3]");
  }
  double worst = 0.0;
  for (const GradCheckVariable& var : variables) {
    if (var.value == nullptr || var.analytic == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "grad_check variable without storage");
    }
    require_shape(*var.analytic, var.value->shape(), "grad_check analytic gradient");
    TensorD& x = *var.value;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + epsilon;
      const double up = loss();
      x[i] = saved - epsilon;
      const double down = loss();
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = (*var.analytic)[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

namespace {

TensorD random_projection(const Shape& shape, std::uint64_t seed) {
  Xoshiro256ss rng(seed);
  TensorD r(shape);
  for (double& v : r.data()) v = rng.uniform(-1.0, 1.0);
  return r;
}

double project(const TensorD& y, const TensorD& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

}  // namespace

double grad_check_conv2d(const ConvLayerD& layer_in, const TensorD& input, double epsilon,
                         std::uint64_t seed) {
  ConvLayerD layer = layer_in;
  TensorD x = input;
  const TensorD r = random_projection(conv2d_forward(x, layer).shape(), seed);
  const ConvGrads<double> g = conv2d_backward(x, layer, r, true);
  const GradCheckVariable vars[] = {{&x, &g.input}, {&layer.kernels, &g.kernels}, {&layer.bias, &g.bias}};
  return grad_check(vars, [&] { return project(conv2d_forward(x, layer), r); }, epsilon);
}

double grad_check_relu(const TensorD& input, double epsilon, std::uint64_t seed) {
  TensorD x = input;
  const TensorD r = random_projection(x.shape(), seed);
  const TensorD g = relu_backward(x, r);
  const GradCheckVariable vars[] = {{&x, &g}};
  return grad_check(vars, [&] { return project(relu(x), r); }, epsilon);
}

double grad_check_maxpool2x2(const TensorD& input, double epsilon, std::uint64_t seed) {
  TensorD x = input;
  const PoolResult<double> fwd = maxpool2x2(x);
  const TensorD r = random_projection(fwd.output.shape(), seed);
  const TensorD g = maxpool2x2_backward(r, fwd.argmax, x.shape());
  const GradCheckVariable vars[] = {{&x, &g}};
  return grad_check(vars, [&] { return project(maxpool2x2(x).output, r); }, epsilon);
}

double grad_check_fully_connected(const LinearLayerD& layer_in, const TensorD& input,
                                  double epsilon, std::uint64_t seed) {
  LinearLayerD layer = layer_in;
  TensorD x = input;
  const TensorD r = random_projection({layer.out_features()}, seed);
  const LinearGrads<double> g = fully_connected_backward(x, layer.weights, r);
  const GradCheckVariable vars[] = {{&x, &g.input}, {&layer.weights, &g.weights}, {&layer.bias, &g.bias}};
  return grad_check(vars, [&] { return project(fully_connected(x, layer), r); }, epsilon);
}

double grad_check_softmax(const TensorD& input, double epsilon, std::uint64_t seed) {
  TensorD x = input;
  const TensorD r = random_projection(x.shape(), seed);
  const TensorD g = softmax_backward(softmax(x), r);
  const GradCheckVariable vars[] = {{&x, &g}};
  return grad_check(vars, [&] { return project(softmax(x), r); }, epsilon);
}

double grad_check_cross_entropy(const TensorD& probs, std::size_t label, double epsilon) {
  TensorD p = probs;
  const TensorD g = cross_entropy_backward(p, label);
  const GradCheckVariable vars[] = {{&p, &g}};
  return grad_check(vars, [&] { return cross_entropy_loss(p, label); }, epsilon);
}

double grad_check_softmax_cross_entropy(const TensorD& logits, std::size_t label, double epsilon) {
  TensorD z = logits;
  const TensorD g = softmax_cross_entropy(z, label).grad;
  const GradCheckVariable vars[] = {{&z, &g}};
  return grad_check(vars, [&] { return softmax_cross_entropy(z, label).loss; }, epsilon);
}

double grad_check_smooth_l1(const TensorD& pred, const TensorD& target, double epsilon) {
  TensorD p = pred;
  const TensorD g = smooth_l1_backward(p, target);
  const GradCheckVariable vars[] = {{&p, &g}};
  return grad_check(vars, [&] { return smooth_l1_loss(p, target); }, epsilon);
}

}  // namespace cubesort::nn
