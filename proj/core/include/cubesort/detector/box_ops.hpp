#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cubesort/box.hpp"

namespace cubesort::detect {

/// Intersection over union. Throws DegenerateBox for zero-area inputs.
double iou(const BoundingBox& a, const BoundingBox& b);

/// (tx, ty, tw, th) of `gt` relative to `anchor` on centres and sizes.
using BoxDeltas = std::array<double, 4>;

BoxDeltas encode_box(const BoundingBox& gt, const BoundingBox& anchor);

/// Inverse of encode_box. tw/th are clamped to log(1000/16) so decoding
/// untrained outputs cannot overflow.
BoundingBox decode_box(const BoxDeltas& deltas, const BoundingBox& anchor);

BoundingBox clip_box(const BoundingBox& box, double width, double height) noexcept;

/// Greedy suppression: visit boxes by descending score (ties by lower
/// index), keep each unsuppressed box and drop later boxes whose IoU with it
/// exceeds `iou_threshold`. Returns kept indices in keep order.
std::vector<std::size_t> nms(std::span<const BoundingBox> boxes, std::span<const double> scores,
                             double iou_threshold);

// --- anchors ------------------------------------------------------------

/// One square anchor per scale and feature cell, centred at
/// (x * stride + stride / 2, y * stride + stride / 2). Order: row-major
/// cells, then scale index.
std::vector<BoundingBox> generate_anchors(std::size_t feat_w, std::size_t feat_h, std::size_t stride,
                                          std::span<const double> scales);

enum class AnchorLabel : std::int8_t { Ignore = -1, Negative = 0, Positive = 1 };

struct RpnAssignment {
  std::vector<AnchorLabel> labels;
  std::vector<int> matched_gt;  // argmax-IoU ground truth, -1 when there is none
};

/// Positive when IoU >= pos_thresh or the anchor attains some ground truth's
/// best IoU; negative when max IoU <= neg_thresh; ignore otherwise. Anchors
/// crossing the image border are always ignored.
RpnAssignment assign_rpn_labels(std::span<const BoundingBox> anchors,
                                std::span<const BoundingBox> gt_boxes, double pos_thresh,
                                double neg_thresh, double image_width, double image_height);

}  // namespace cubesort::detect
