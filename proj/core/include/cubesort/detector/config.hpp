#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cubesort/tensornet/sgd.hpp"

namespace cubesort::detect {

inline constexpr std::size_t kFeatureStride = 8;

/// Head box outputs are regressed in units of these per-coordinate scales.
inline constexpr std::array<double, 4> kHeadDeltaScale = {0.1, 0.1, 0.2, 0.2};

inline std::vector<double> default_anchor_scales() { return {24.0, 40.0, 64.0}; }

struct ProposalConfig {
  std::size_t pre_nms_n = 256;
  std::size_t post_nms_n = 32;
  double nms_threshold = 0.7;
};

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t iters_per_epoch = 500;

  double rpn_positive_iou = 0.7;
  double rpn_negative_iou = 0.3;
  std::size_t rpn_positives_per_image = 32;
  std::size_t rpn_negatives_per_image = 32;

  ProposalConfig proposals;

  std::size_t roi_batch = 32;
  double roi_foreground_fraction = 0.5;
  double roi_foreground_iou = 0.5;

  std::vector<double> anchor_scales = default_anchor_scales();
  nn::SgdConfig sgd;
  std::uint64_t seed = 42;

  /// Throws InvalidConfig on out-of-range values.
  void validate() const;
};

struct DetectConfig {
  double score_threshold = 0.5;
  double nms_threshold = 0.3;
  ProposalConfig proposals;

  void validate() const;
};

}  // namespace cubesort::detect
