#include "cubesort/detector/model.hpp"

#include <algorithm>
#include <map>

#include "cubesort/detector/config.hpp"
#include "cubesort/detector/roi_pool.hpp"
#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"

namespace cubesort::detect {

namespace {

constexpr const char* kAnchorMeta = "meta.anchor_scales";

void init_conv(nn::ConvLayer& layer, Xoshiro256ss& rng) {
  const std::size_t fan_in = layer.in_channels() * layer.kernel_h() * layer.kernel_w();
  nn::he_uniform_init(layer.kernels, fan_in, rng);
  layer.bias.fill(0.0f);
}

void init_linear(nn::LinearLayer& layer, Xoshiro256ss& rng) {
  nn::he_uniform_init(layer.weights, layer.in_features(), rng);
  layer.bias.fill(0.0f);
}

DetectorModel skeleton(std::size_t k) {
  DetectorModel m;
  m.conv1 = nn::ConvLayer::zeros(8, 3, 3, 1, 1);
  m.conv2 = nn::ConvLayer::zeros(16, 8, 3, 1, 1);
  m.conv3 = nn::ConvLayer::zeros(32, 16, 3, 1, 1);
  m.rpn_conv = nn::ConvLayer::zeros(32, 32, 3, 1, 1);
  m.rpn_cls = nn::ConvLayer::zeros(2 * k, 32, 1);
  m.rpn_reg = nn::ConvLayer::zeros(4 * k, 32, 1);
  m.fc1 = nn::LinearLayer::zeros(kHeadHidden, 32 * kRoiBins * kRoiBins);
  m.fc2 = nn::LinearLayer::zeros(kHeadHidden, kHeadHidden);
  m.head_cls = nn::LinearLayer::zeros(kHeadClasses, kHeadHidden);
  m.head_box = nn::LinearLayer::zeros(4 * (kHeadClasses - 1), kHeadHidden);
  return m;
}

// Accumulating variant of the linear backward pass; `grad_in` is overwritten.
void linear_backward_acc(const nn::LinearLayer& layer, const nn::Tensor& x, const nn::Tensor& g,
                         nn::Tensor& gw, nn::Tensor& gb, nn::Tensor* grad_in) {
  const std::size_t m = layer.out_features(), n = layer.in_features();
  if (grad_in) *grad_in = nn::Tensor(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const float gi = g[i];
    gb[i] += gi;
    if (gi == 0.0f) continue;
    float* dw = gw.raw() + i * n;
    for (std::size_t j = 0; j < n; ++j) dw[j] += gi * x[j];
    if (grad_in) {
      const float* w = layer.weights.raw() + i * n;
      float* dx = grad_in->raw();
      for (std::size_t j = 0; j < n; ++j) dx[j] += gi * w[j];
    }
  }
}

void add_into(nn::Tensor& dst, const nn::Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Parameter indices into DetectorModel::parameters().
enum : std::size_t {
  kConv1W, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B,
  kRpnConvW, kRpnConvB, kRpnClsW, kRpnClsB, kRpnRegW, kRpnRegB,
  kFc1W, kFc1B, kFc2W, kFc2B, kHeadClsW, kHeadClsB, kHeadBoxW, kHeadBoxB,
  kParamCount
};

}  // namespace

DetectorModel DetectorModel::create(std::vector<double> anchor_scales, std::uint64_t seed) {
  if (anchor_scales.empty()) throw Error(ErrorCode::InvalidConfig, "no anchor scales");
  DetectorModel m = skeleton(anchor_scales.size());
  m.anchor_scales_ = std::move(anchor_scales);
  Xoshiro256ss rng(seed);
  for (nn::ConvLayer* c : {&m.conv1, &m.conv2, &m.conv3, &m.rpn_conv, &m.rpn_cls, &m.rpn_reg}) {
    init_conv(*c, rng);
  }
  for (nn::LinearLayer* l : {&m.fc1, &m.fc2, &m.head_cls, &m.head_box}) init_linear(*l, rng);
  return m;
}

std::vector<std::string> DetectorModel::parameter_names() const {
  return {"backbone.conv1.weight", "backbone.conv1.bias", "backbone.conv2.weight",
          "backbone.conv2.bias",   "backbone.conv3.weight", "backbone.conv3.bias",
          "rpn.conv.weight",       "rpn.conv.bias",         "rpn.cls.weight",
          "rpn.cls.bias",          "rpn.reg.weight",        "rpn.reg.bias",
          "head.fc1.weight",       "head.fc1.bias",         "head.fc2.weight",
          "head.fc2.bias",         "head.cls.weight",       "head.cls.bias",
          "head.box.weight",       "head.box.bias"};
}

std::vector<nn::Tensor*> DetectorModel::parameters() {
  return {&conv1.kernels,    &conv1.bias,    &conv2.kernels,   &conv2.bias,    &conv3.kernels,
          &conv3.bias,       &rpn_conv.kernels, &rpn_conv.bias, &rpn_cls.kernels, &rpn_cls.bias,
          &rpn_reg.kernels,  &rpn_reg.bias,  &fc1.weights,     &fc1.bias,      &fc2.weights,
          &fc2.bias,         &head_cls.weights, &head_cls.bias, &head_box.weights, &head_box.bias};
}

std::vector<const nn::Tensor*> DetectorModel::parameters() const {
  auto mut = const_cast<DetectorModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::vector<nn::NamedTensor> DetectorModel::to_tensors() const {
  std::vector<nn::NamedTensor> out;
  const auto names = parameter_names();
  const auto params = parameters();
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back({names[i], *params[i]});
  std::vector<float> scales(anchor_scales_.begin(), anchor_scales_.end());
  const std::size_t n = scales.size();
  out.push_back({kAnchorMeta, nn::Tensor({n}, std::move(scales))});
  return out;
}

DetectorModel DetectorModel::from_tensors(const std::vector<nn::NamedTensor>& tensors) {
  std::map<std::string, const nn::Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  const auto meta = by_name.find(kAnchorMeta);
  if (meta == by_name.end() || meta->second->rank() != 1) {
    throw Error(ErrorCode::BadWeights, std::string("missing ") + kAnchorMeta);
  }
  const auto scales = meta->second->data();
  DetectorModel m = skeleton(scales.size());
  m.anchor_scales_.assign(scales.begin(), scales.end());
  const auto names = m.parameter_names();
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto it = by_name.find(names[i]);
    if (it == by_name.end()) throw Error(ErrorCode::BadWeights, "missing tensor " + names[i]);
    if (it->second->shape() != params[i]->shape()) {
      throw Error(ErrorCode::BadWeights, names[i] + " has shape " + nn::shape_string(it->second->shape()) +
                                             ", expected " + nn::shape_string(params[i]->shape()));
    }
    *params[i] = *it->second;
  }
  return m;
}

DetectorModel DetectorModel::load(const std::string& path) {
  return from_tensors(nn::read_weights_file(path));
}

void DetectorModel::save(const std::string& path) const {
  nn::write_weights_file(path, to_tensors());
}

nn::Tensor image_to_tensor(const imaging::ImageBuffer& img) {
  const std::size_t s = kFeatureStride;
  const std::size_t h = (img.height() + s - 1) / s * s;
  const std::size_t w = (img.width() + s - 1) / s * s;
  nn::Tensor t({3, h, w});
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const imaging::Bgr c = img.at(x, y);
      t.at(0, y, x) = (static_cast<float>(c.b) - 127.5f) / 127.5f;
      t.at(1, y, x) = (static_cast<float>(c.g) - 127.5f) / 127.5f;
      t.at(2, y, x) = (static_cast<float>(c.r) - 127.5f) / 127.5f;
    }
  }
  return t;
}

FeatureForward forward_features(const DetectorModel& model, const imaging::ImageBuffer& img) {
  FeatureForward f;
  f.input = image_to_tensor(img);
  f.pre1 = nn::conv2d_forward(f.input, model.conv1);
  f.pool1 = nn::maxpool2x2(nn::relu(f.pre1));
  f.pre2 = nn::conv2d_forward(f.pool1.output, model.conv2);
  f.pool2 = nn::maxpool2x2(nn::relu(f.pre2));
  f.pre3 = nn::conv2d_forward(f.pool2.output, model.conv3);
  f.pool3 = nn::maxpool2x2(nn::relu(f.pre3));
  f.rpn_pre = nn::conv2d_forward(f.pool3.output, model.rpn_conv);
  f.rpn_hidden = nn::relu(f.rpn_pre);
  f.rpn_cls = nn::conv2d_forward(f.rpn_hidden, model.rpn_cls);
  f.rpn_reg = nn::conv2d_forward(f.rpn_hidden, model.rpn_reg);
  return f;
}

HeadForward forward_head(const DetectorModel& model, const nn::Tensor& feature,
                         const BoundingBox& roi) {
  HeadForward h;
  auto pooled = roi_pool(feature, roi, kFeatureStride, kRoiBins);
  h.pooled = std::move(pooled.output);
  h.pool_argmax = std::move(pooled.argmax);
  h.pre1 = nn::fully_connected(h.pooled, model.fc1);
  h.hidden1 = nn::relu(h.pre1);
  h.pre2 = nn::fully_connected(h.hidden1, model.fc2);
  h.hidden2 = nn::relu(h.pre2);
  h.cls_logits = nn::fully_connected(h.hidden2, model.head_cls);
  h.box = nn::fully_connected(h.hidden2, model.head_box);
  return h;
}

ModelGrads::ModelGrads(const DetectorModel& model) {
  for (const nn::Tensor* p : model.parameters()) tensors.emplace_back(p->shape());
}

void ModelGrads::zero() {
  for (auto& t : tensors) t.fill(0.0f);
}

void backward_head(const DetectorModel& model, const HeadForward& fwd, const nn::Tensor& grad_cls,
                   const nn::Tensor& grad_box, ModelGrads& grads, nn::Tensor& grad_feature) {
  auto& g = grads.tensors;
  nn::Tensor d_hidden2({kHeadHidden});
  nn::Tensor tmp;
  linear_backward_acc(model.head_cls, fwd.hidden2, grad_cls, g[kHeadClsW], g[kHeadClsB], &tmp);
  add_into(d_hidden2, tmp);
  linear_backward_acc(model.head_box, fwd.hidden2, grad_box, g[kHeadBoxW], g[kHeadBoxB], &tmp);
  add_into(d_hidden2, tmp);

  const nn::Tensor d_pre2 = nn::relu_backward(fwd.pre2, d_hidden2);
  nn::Tensor d_hidden1;
  linear_backward_acc(model.fc2, fwd.hidden1, d_pre2, g[kFc2W], g[kFc2B], &d_hidden1);
  const nn::Tensor d_pre1 = nn::relu_backward(fwd.pre1, d_hidden1);
  nn::Tensor d_pooled;
  linear_backward_acc(model.fc1, fwd.pooled, d_pre1, g[kFc1W], g[kFc1B], &d_pooled);
  roi_pool_backward(d_pooled, fwd.pool_argmax, grad_feature);
}

void backward_features(const DetectorModel& model, const FeatureForward& fwd,
                       const nn::Tensor& grad_rpn_cls, const nn::Tensor& grad_rpn_reg,
                       const nn::Tensor& grad_feature_from_head, ModelGrads& grads) {
  auto& g = grads.tensors;
  const auto acc = [&](const nn::ConvGrads<float>& cg, std::size_t w_idx, std::size_t b_idx) {
    add_into(g[w_idx], cg.kernels);
    add_into(g[b_idx], cg.bias);
  };

  const auto cls = nn::conv2d_backward(fwd.rpn_hidden, model.rpn_cls, grad_rpn_cls, true);
  acc(cls, kRpnClsW, kRpnClsB);
  const auto reg = nn::conv2d_backward(fwd.rpn_hidden, model.rpn_reg, grad_rpn_reg, true);
  acc(reg, kRpnRegW, kRpnRegB);
  nn::Tensor d_hidden = cls.input;
  add_into(d_hidden, reg.input);

  const auto rpn = nn::conv2d_backward(fwd.pool3.output, model.rpn_conv,
                                       nn::relu_backward(fwd.rpn_pre, d_hidden), true);
  acc(rpn, kRpnConvW, kRpnConvB);
  nn::Tensor d_feature = rpn.input;
  add_into(d_feature, grad_feature_from_head);

  nn::Tensor d = nn::maxpool2x2_backward(d_feature, fwd.pool3.argmax, fwd.pre3.shape());
  const auto c3 = nn::conv2d_backward(fwd.pool2.output, model.conv3, nn::relu_backward(fwd.pre3, d), true);
  acc(c3, kConv3W, kConv3B);

  d = nn::maxpool2x2_backward(c3.input, fwd.pool2.argmax, fwd.pre2.shape());
  const auto c2 = nn::conv2d_backward(fwd.pool1.output, model.conv2, nn::relu_backward(fwd.pre2, d), true);
  acc(c2, kConv2W, kConv2B);

  d = nn::maxpool2x2_backward(c2.input, fwd.pool1.argmax, fwd.pre1.shape());
  const auto c1 = nn::conv2d_backward(fwd.input, model.conv1, nn::relu_backward(fwd.pre1, d), false);
  acc(c1, kConv1W, kConv1B);
}

static_assert(kParamCount == 20);

}  // namespace cubesort::detect
