#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "cubesort/detector/detector.hpp"
#include "cubesort/error.hpp"

namespace cubesort::detect {

void DetectConfig::validate() const {
  if (!(score_threshold >= 0.0)) throw Error(ErrorCode::InvalidConfig, "score_threshold must be >= 0");
  if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "nms_threshold must lie in [0, 1]");
  }
  if (proposals.pre_nms_n == 0 || proposals.post_nms_n == 0) {
    throw Error(ErrorCode::InvalidConfig, "proposal counts must be >= 1");
  }
}

std::vector<BoundingBox> anchors_for_image(const DetectorModel& model, std::size_t image_width,
                                           std::size_t image_height) {
  const std::size_t fw = (image_width + kFeatureStride - 1) / kFeatureStride;
  const std::size_t fh = (image_height + kFeatureStride - 1) / kFeatureStride;
  return generate_anchors(fw, fh, kFeatureStride, model.anchor_scales());
}

std::vector<Proposal> propose(const nn::Tensor& rpn_cls, const nn::Tensor& rpn_reg,
                              std::span<const BoundingBox> anchors, double image_width,
                              double image_height, const ProposalConfig& config) {
  if (config.pre_nms_n == 0 || config.post_nms_n == 0) {
    throw Error(ErrorCode::InvalidArgument, "proposal counts must be >= 1");
  }
  if (rpn_cls.rank() != 3 || rpn_reg.rank() != 3 || rpn_cls.dim(0) % 2 != 0) {
    throw Error(ErrorCode::ShapeMismatch, "malformed RPN outputs");
  }
  const std::size_t k = rpn_cls.dim(0) / 2;
  const std::size_t fh = rpn_cls.dim(1), fw = rpn_cls.dim(2);
  if (rpn_reg.shape() != nn::Shape{4 * k, fh, fw} || anchors.size() != fh * fw * k) {
    throw Error(ErrorCode::ShapeMismatch, "RPN outputs do not match the anchor grid");
  }

  std::vector<Proposal> candidates;
  candidates.reserve(anchors.size());
  for (std::size_t y = 0; y < fh; ++y) {
    for (std::size_t x = 0; x < fw; ++x) {
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t idx = (y * fw + x) * k + a;
        const double bg = rpn_cls.at(2 * a, y, x);
        const double fg = rpn_cls.at(2 * a + 1, y, x);
        const double score = 1.0 / (1.0 + std::exp(bg - fg));
        const BoxDeltas d = {rpn_reg.at(4 * a, y, x), rpn_reg.at(4 * a + 1, y, x),
                             rpn_reg.at(4 * a + 2, y, x), rpn_reg.at(4 * a + 3, y, x)};
        const BoundingBox box = clip_box(decode_box(d, anchors[idx]), image_width, image_height);
        if (!box.degenerate()) candidates.push_back({box, score});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
  if (candidates.size() > config.pre_nms_n) candidates.resize(config.pre_nms_n);

  std::vector<BoundingBox> boxes;
  std::vector<double> scores;
  for (const auto& c : candidates) {
    boxes.push_back(c.box);
    scores.push_back(c.score);
  }
  const auto keep = nms(boxes, scores, config.nms_threshold);
  std::vector<Proposal> out;
  for (std::size_t i = 0; i < keep.size() && out.size() < config.post_nms_n; ++i) {
    out.push_back(candidates[keep[i]]);
  }
  return out;
}

std::vector<Detection> detect(const imaging::ImageBuffer& img, const DetectorModel& model,
                              const DetectConfig& config) {
  config.validate();
  const FeatureForward fwd = forward_features(model, img);
  const auto anchors = anchors_for_image(model, img.width(), img.height());
  const double w = static_cast<double>(img.width());
  const double h = static_cast<double>(img.height());
  const auto proposals = propose(fwd.rpn_cls, fwd.rpn_reg, anchors, w, h, config.proposals);

  struct Scored {
    std::array<double, kHeadClasses> probs;
    nn::Tensor box;
  };
  std::vector<Scored> heads;
  heads.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    HeadForward head = forward_head(model, fwd.feature(), p.box);
    Scored s{{}, std::move(head.box)};
    double mx = head.cls_logits[0];
    for (std::size_t i = 1; i < kHeadClasses; ++i) mx = std::max(mx, double{head.cls_logits[i]});
    double denom = 0.0;
    for (std::size_t i = 0; i < kHeadClasses; ++i) denom += std::exp(head.cls_logits[i] - mx);
    for (std::size_t i = 0; i < kHeadClasses; ++i) s.probs[i] = std::exp(head.cls_logits[i] - mx) / denom;
    heads.push_back(std::move(s));
  }

  std::vector<Detection> out;
  for (std::size_t cls = 1; cls < kHeadClasses; ++cls) {
    std::vector<BoundingBox> boxes;
    std::vector<double> scores;
    for (std::size_t n = 0; n < proposals.size(); ++n) {
      const double score = heads[n].probs[cls];
      if (score < config.score_threshold) continue;
      BoxDeltas d;
      for (std::size_t i = 0; i < 4; ++i) d[i] = heads[n].box[4 * (cls - 1) + i] * kHeadDeltaScale[i];
      const BoundingBox box = clip_box(decode_box(d, proposals[n].box), w, h);
      if (box.degenerate()) continue;
      boxes.push_back(box);
      scores.push_back(score);
    }
    const std::string category = cls == static_cast<std::size_t>(HeadClass::Defect) ? kDefect : kIntact;
    for (std::size_t i : nms(boxes, scores, config.nms_threshold)) {
      out.push_back({boxes[i], category, scores[i]});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return out;
}

std::string frame_verdict(const std::vector<Detection>& detections, double* score) {
  double best_defect = -1.0, best_intact = -1.0;
  for (const auto& d : detections) {
    if (d.category == kDefect) {
      best_defect = std::max(best_defect, d.score);
    } else {
      best_intact = std::max(best_intact, d.score);
    }
  }
  if (best_defect >= 0.0) {
    if (score) *score = best_defect;
    return kDefect;
  }
  if (score) *score = std::max(best_intact, 0.0);
  return kIntact;
}

}  // namespace cubesort::detect
