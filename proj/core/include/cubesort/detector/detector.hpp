#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cubesort/annotation.hpp"
#include "cubesort/box.hpp"
#include "cubesort/detector/box_ops.hpp"
#include "cubesort/detector/config.hpp"
#include "cubesort/detector/model.hpp"
#include "cubesort/imaging.hpp"

namespace cubesort::detect {

struct Detection {
  BoundingBox box;
  std::string category;  // "defect" or "intact"
  double score = 0.0;
};

struct Proposal {
  BoundingBox box;
  double score = 0.0;  // objectness probability
};

/// Decodes every anchor, clips to the image, drops degenerate boxes, keeps
/// the top `pre_nms_n` by objectness (ties by anchor index), applies NMS and
/// truncates to `post_nms_n`.
std::vector<Proposal> propose(const nn::Tensor& rpn_cls, const nn::Tensor& rpn_reg,
                              std::span<const BoundingBox> anchors, double image_width,
                              double image_height, const ProposalConfig& config);

/// Anchors for an image of the given size at the model's stride and scales.
std::vector<BoundingBox> anchors_for_image(const DetectorModel& model, std::size_t image_width,
                                           std::size_t image_height);

/// Full inference on an (already 50%-rescaled) frame. Safe to call from
/// several threads on one model.
std::vector<Detection> detect(const imaging::ImageBuffer& img, const DetectorModel& model,
                              const DetectConfig& config = {});

/// "defect" if any defect detection is present, else "intact"; `score`
/// receives the best score backing the verdict (0 with no detections).
std::string frame_verdict(const std::vector<Detection>& detections, double* score = nullptr);

struct TrainingSample {
  imaging::ImageBuffer image;
  std::vector<Annotation> annotations;
};

struct IterationLoss {
  double rpn_cls = 0.0;
  double rpn_reg = 0.0;
  double head_cls = 0.0;
  double head_reg = 0.0;

  double total() const noexcept { return rpn_cls + rpn_reg + head_cls + head_reg; }
};

struct TrainResult {
  DetectorModel model;
  std::vector<IterationLoss> loss_log;  // epochs * iters_per_epoch entries
  std::vector<double> epoch_mean_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// One image per iteration, visiting a freshly seeded shuffle of the dataset
/// on every pass. Deterministic for a fixed config. Throws EmptyDataset.
TrainResult train(std::span<const TrainingSample> dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Loss log as CSV: iteration,epoch,rpn_cls,rpn_reg,head_cls,head_reg,total.
std::string loss_log_csv(const std::vector<IterationLoss>& log, std::size_t iters_per_epoch);

}  // namespace cubesort::detect
