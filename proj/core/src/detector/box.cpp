#include "cubesort/detector/box_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cubesort/error.hpp"

namespace cubesort::detect {

namespace {

const double kMaxLogScale = std::log(1000.0 / 16.0);

void require_non_degenerate(const BoundingBox& b, const char* what) {
  if (b.degenerate()) throw Error(ErrorCode::DegenerateBox, std::string(what) + " has zero area");
}

double iou_unchecked(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  require_non_degenerate(a, "iou operand");
  require_non_degenerate(b, "iou operand");
  return iou_unchecked(a, b);
}

BoxDeltas encode_box(const BoundingBox& gt, const BoundingBox& anchor) {
  require_non_degenerate(gt, "encode target");
  require_non_degenerate(anchor, "encode anchor");
  return {(gt.center_x() - anchor.center_x()) / anchor.width(),
          (gt.center_y() - anchor.center_y()) / anchor.height(),
          std::log(gt.width() / anchor.width()), std::log(gt.height() / anchor.height())};
}

BoundingBox decode_box(const BoxDeltas& d, const BoundingBox& anchor) {
  require_non_degenerate(anchor, "decode anchor");
  const double cx = anchor.center_x() + d[0] * anchor.width();
  const double cy = anchor.center_y() + d[1] * anchor.height();
  const double w = anchor.width() * std::exp(std::min(d[2], kMaxLogScale));
  const double h = anchor.height() * std::exp(std::min(d[3], kMaxLogScale));
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

BoundingBox clip_box(const BoundingBox& box, double width, double height) noexcept {
  return {std::clamp(box.xmin, 0.0, width), std::clamp(box.ymin, 0.0, height),
          std::clamp(box.xmax, 0.0, width), std::clamp(box.ymax, 0.0, height)};
}

std::vector<std::size_t> nms(std::span<const BoundingBox> boxes, std::span<const double> scores,
                             double iou_threshold) {
  if (boxes.size() != scores.size()) {
    throw Error(ErrorCode::InvalidArgument, "nms: boxes and scores differ in length");
  }
  for (const auto& b : boxes) require_non_degenerate(b, "nms box");
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::uint8_t> suppressed(boxes.size(), 0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t cur = order[i];
    if (suppressed[cur]) continue;
    keep.push_back(cur);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t other = order[j];
      if (!suppressed[other] && iou_unchecked(boxes[cur], boxes[other]) > iou_threshold) {
        suppressed[other] = 1;
      }
    }
  }
  return keep;
}

std::vector<BoundingBox> generate_anchors(std::size_t feat_w, std::size_t feat_h, std::size_t stride,
                                          std::span<const double> scales) {
  if (stride == 0) throw Error(ErrorCode::InvalidArgument, "anchor stride must be >= 1");
  if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "no anchor scales");
  std::vector<BoundingBox> anchors;
  anchors.reserve(feat_w * feat_h * scales.size());
  const double s = static_cast<double>(stride);
  for (std::size_t y = 0; y < feat_h; ++y) {
    for (std::size_t x = 0; x < feat_w; ++x) {
      const double cx = static_cast<double>(x) * s + s / 2.0;
      const double cy = static_cast<double>(y) * s + s / 2.0;
      for (double side : scales) {
        anchors.push_back({cx - side / 2.0, cy - side / 2.0, cx + side / 2.0, cy + side / 2.0});
      }
    }
  }
  return anchors;
}

RpnAssignment assign_rpn_labels(std::span<const BoundingBox> anchors,
                                std::span<const BoundingBox> gt_boxes, double pos_thresh,
                                double neg_thresh, double image_width, double image_height) {
  if (neg_thresh > pos_thresh) {
    throw Error(ErrorCode::InvalidArgument, "negative IoU threshold exceeds positive threshold");
  }
  for (const auto& g : gt_boxes) require_non_degenerate(g, "ground truth");
  RpnAssignment out{std::vector<AnchorLabel>(anchors.size(), AnchorLabel::Ignore),
                    std::vector<int>(anchors.size(), -1)};

  std::vector<double> max_iou(anchors.size(), 0.0);
  std::vector<double> best_per_gt(gt_boxes.size(), 0.0);
  std::vector<std::uint8_t> inside(anchors.size(), 0);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const BoundingBox& an = anchors[a];
    inside[a] = an.xmin >= 0.0 && an.ymin >= 0.0 && an.xmax <= image_width && an.ymax <= image_height;
    if (!inside[a]) continue;
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      const double v = iou_unchecked(an, gt_boxes[g]);
      if (v > max_iou[a]) {
        max_iou[a] = v;
        out.matched_gt[a] = static_cast<int>(g);
      }
      best_per_gt[g] = std::max(best_per_gt[g], v);
    }
  }
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    if (!inside[a]) continue;
    if (max_iou[a] >= pos_thresh) {
      out.labels[a] = AnchorLabel::Positive;
    } else if (max_iou[a] <= neg_thresh) {
      out.labels[a] = AnchorLabel::Negative;
    }
  }
  // Every ground truth keeps the anchor(s) that overlap it most.
  for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
    if (best_per_gt[g] <= 0.0) continue;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      if (inside[a] && iou_unchecked(anchors[a], gt_boxes[g]) == best_per_gt[g]) {
        out.labels[a] = AnchorLabel::Positive;
        out.matched_gt[a] = static_cast<int>(g);
      }
    }
  }
  return out;
}

}  // namespace cubesort::detect
