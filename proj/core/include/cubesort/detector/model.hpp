#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cubesort/imaging.hpp"
#include "cubesort/tensornet/layers.hpp"
#include "cubesort/tensornet/weights_io.hpp"

namespace cubesort::detect {

/// Head output classes. Background rejects proposals that are not cubes.
enum class HeadClass : std::size_t { Background = 0, Defect = 1, Intact = 2 };
inline constexpr std::size_t kHeadClasses = 3;
inline constexpr std::size_t kHeadHidden = 256;

/// Shared three-stage backbone (8, 16, 32 channels; 3x3 conv, ReLU, 2x2 max
/// pool each; stride 8), a 3x3 RPN conv with 1x1 objectness (2k) and delta
/// (4k) heads, and a two-layer 256-unit RoI head with sibling class (3) and
/// box (4 per foreground class) outputs.
class DetectorModel {
 public:
  /// He-uniform initialisation from `seed`.
  static DetectorModel create(std::vector<double> anchor_scales, std::uint64_t seed);

  /// Rebuilds a model from named tensors (see to_tensors). Throws BadWeights
  /// when a tensor is missing or has the wrong shape.
  static DetectorModel from_tensors(const std::vector<nn::NamedTensor>& tensors);

  static DetectorModel load(const std::string& path);
  void save(const std::string& path) const;

  /// Parameters plus "meta.anchor_scales", in a fixed order.
  std::vector<nn::NamedTensor> to_tensors() const;

  std::vector<nn::Tensor*> parameters();
  std::vector<const nn::Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;

  const std::vector<double>& anchor_scales() const noexcept { return anchor_scales_; }
  std::size_t anchors_per_cell() const noexcept { return anchor_scales_.size(); }

  nn::ConvLayer conv1, conv2, conv3;
  nn::ConvLayer rpn_conv, rpn_cls, rpn_reg;
  nn::LinearLayer fc1, fc2, head_cls, head_box;

 private:
  std::vector<double> anchor_scales_;
};

/// Normalised [3, H8, W8] input: (v - 127.5) / 127.5 per B,G,R channel, zero
/// padded on the right and bottom up to multiples of the feature stride.
nn::Tensor image_to_tensor(const imaging::ImageBuffer& img);

/// Intermediate activations of the convolutional part, kept for backprop.
struct FeatureForward {
  nn::Tensor input;
  nn::Tensor pre1, pre2, pre3;  // conv outputs before ReLU
  nn::PoolResult<float> pool1, pool2, pool3;
  nn::Tensor rpn_pre;  // rpn_conv output before ReLU
  nn::Tensor rpn_hidden;
  nn::Tensor rpn_cls;  // [2k, Hf, Wf]; channel 2a is background, 2a+1 object
  nn::Tensor rpn_reg;  // [4k, Hf, Wf]

  const nn::Tensor& feature() const noexcept { return pool3.output; }
  std::size_t feat_h() const noexcept { return pool3.output.dim(1); }
  std::size_t feat_w() const noexcept { return pool3.output.dim(2); }
};

FeatureForward forward_features(const DetectorModel& model, const imaging::ImageBuffer& img);

struct HeadForward {
  nn::Tensor pooled;  // [C, 4, 4]
  std::vector<std::size_t> pool_argmax;
  nn::Tensor pre1, hidden1, pre2, hidden2;
  nn::Tensor cls_logits;  // [3]
  nn::Tensor box;         // [8]
};

HeadForward forward_head(const DetectorModel& model, const nn::Tensor& feature,
                         const BoundingBox& roi);

/// Gradient storage aligned with DetectorModel::parameters().
struct ModelGrads {
  std::vector<nn::Tensor> tensors;

  explicit ModelGrads(const DetectorModel& model);
  void zero();
};

/// Accumulates one RoI's head gradients into `grads`; the feature-map
/// gradient is added into `grad_feature`.
void backward_head(const DetectorModel& model, const HeadForward& fwd, const nn::Tensor& grad_cls,
                   const nn::Tensor& grad_box, ModelGrads& grads, nn::Tensor& grad_feature);

/// Backpropagates RPN output gradients plus the head's feature gradient
/// through the RPN and backbone.
void backward_features(const DetectorModel& model, const FeatureForward& fwd,
                       const nn::Tensor& grad_rpn_cls, const nn::Tensor& grad_rpn_reg,
                       const nn::Tensor& grad_feature_from_head, ModelGrads& grads);

}  // namespace cubesort::detect
