#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "cubesort/detector/detector.hpp"
#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"
#include "cubesort/tensornet/loss.hpp"
#include "cubesort/tensornet/sgd.hpp"

namespace cubesort::detect {

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (iters_per_epoch < 1) fail("iters_per_epoch must be >= 1");
  if (!(rpn_negative_iou >= 0.0 && rpn_negative_iou <= rpn_positive_iou && rpn_positive_iou <= 1.0)) {
    fail("RPN IoU thresholds must satisfy 0 <= negative <= positive <= 1");
  }
  if (rpn_positives_per_image == 0 && rpn_negatives_per_image == 0) fail("RPN minibatch is empty");
  if (proposals.pre_nms_n == 0 || proposals.post_nms_n == 0) fail("proposal counts must be >= 1");
  if (roi_batch == 0) fail("roi_batch must be >= 1");
  if (!(roi_foreground_fraction > 0.0 && roi_foreground_fraction <= 1.0)) {
    fail("roi_foreground_fraction must lie in (0, 1]");
  }
  if (anchor_scales.empty()) fail("anchor_scales must be non-empty");
  for (double s : anchor_scales) {
    if (!(s > 0.0)) fail("anchor scales must be positive");
  }
  sgd.validate();
}

namespace {

std::size_t head_label(const std::string& category) {
  if (category == kDefect) return static_cast<std::size_t>(HeadClass::Defect);
  if (category == kIntact) return static_cast<std::size_t>(HeadClass::Intact);
  throw Error(ErrorCode::UnknownCategory, "annotation category '" + category + "'");
}

class Trainer {
 public:
  Trainer(const TrainConfig& config)
      : config_(config),
        model_(DetectorModel::create(config.anchor_scales, config.seed)),
        optimizer_(config.sgd, model_.parameters()),
        grads_(model_),
        rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {}

  IterationLoss step(const TrainingSample& sample);

  Xoshiro256ss& rng() noexcept { return rng_; }
  DetectorModel release() { return std::move(model_); }

 private:
  const std::vector<BoundingBox>& anchors(std::size_t w, std::size_t h) {
    auto key = std::pair(w, h);
    auto it = anchor_cache_.find(key);
    if (it == anchor_cache_.end()) it = anchor_cache_.emplace(key, anchors_for_image(model_, w, h)).first;
    return it->second;
  }

  template <typename V>
  void sample_prefix(std::vector<V>& items, std::size_t limit) {
    rng_.shuffle(std::span<V>(items));
    if (items.size() > limit) items.resize(limit);
  }

  double rpn_losses(const FeatureForward& fwd, std::span<const BoundingBox> anchors,
                    std::span<const BoundingBox> gt, double w, double h, IterationLoss& loss,
                    nn::Tensor& grad_cls, nn::Tensor& grad_reg);

  const TrainConfig& config_;
  DetectorModel model_;
  nn::SgdOptimizer optimizer_;
  ModelGrads grads_;
  Xoshiro256ss rng_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<BoundingBox>> anchor_cache_;
};

double Trainer::rpn_losses(const FeatureForward& fwd, std::span<const BoundingBox> anchors,
                           std::span<const BoundingBox> gt, double w, double h, IterationLoss& loss,
                           nn::Tensor& grad_cls, nn::Tensor& grad_reg) {
  const RpnAssignment assign =
      assign_rpn_labels(anchors, gt, config_.rpn_positive_iou, config_.rpn_negative_iou, w, h);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < assign.labels.size(); ++i) {
    if (assign.labels[i] == AnchorLabel::Positive) pos.push_back(i);
    if (assign.labels[i] == AnchorLabel::Negative) neg.push_back(i);
  }
  sample_prefix(pos, config_.rpn_positives_per_image);
  sample_prefix(neg, config_.rpn_negatives_per_image);

  const std::size_t k = model_.anchors_per_cell();
  const std::size_t fw = fwd.feat_w();
  const double n_sampled = static_cast<double>(pos.size() + neg.size());
  const auto cell = [&](std::size_t idx) {
    const std::size_t c = idx / k;
    return std::tuple(idx % k, c / fw, c % fw);
  };

  const auto objectness = [&](std::size_t idx, std::size_t label) {
    const auto [a, y, x] = cell(idx);
    const nn::Tensor logits({2}, {fwd.rpn_cls.at(2 * a, y, x), fwd.rpn_cls.at(2 * a + 1, y, x)});
    const auto ce = nn::softmax_cross_entropy(logits, label);
    loss.rpn_cls += ce.loss / n_sampled;
    grad_cls.at(2 * a, y, x) += static_cast<float>(ce.grad[0] / n_sampled);
    grad_cls.at(2 * a + 1, y, x) += static_cast<float>(ce.grad[1] / n_sampled);
  };
  for (std::size_t idx : pos) objectness(idx, 1);
  for (std::size_t idx : neg) objectness(idx, 0);

  const double n_pos = static_cast<double>(std::max<std::size_t>(pos.size(), 1));
  for (std::size_t idx : pos) {
    const auto [a, y, x] = cell(idx);
    const BoxDeltas t = encode_box(gt[static_cast<std::size_t>(assign.matched_gt[idx])], anchors[idx]);
    nn::Tensor pred({4}), target({4});
    for (std::size_t i = 0; i < 4; ++i) {
      pred[i] = fwd.rpn_reg.at(4 * a + i, y, x);
      target[i] = static_cast<float>(t[i]);
    }
    loss.rpn_reg += nn::smooth_l1_loss(pred, target) / n_pos;
    const nn::Tensor g = nn::smooth_l1_backward(pred, target);
    for (std::size_t i = 0; i < 4; ++i) grad_reg.at(4 * a + i, y, x) += static_cast<float>(g[i] / n_pos);
  }
  return n_sampled;
}

IterationLoss Trainer::step(const TrainingSample& sample) {
  IterationLoss loss;
  const double w = static_cast<double>(sample.image.width());
  const double h = static_cast<double>(sample.image.height());

  std::vector<BoundingBox> gt;
  std::vector<std::size_t> gt_label;
  for (const Annotation& a : sample.annotations) {
    gt.push_back(a.box());
    gt_label.push_back(head_label(a.category));
  }

  const FeatureForward fwd = forward_features(model_, sample.image);
  const auto& anchor_list = anchors(sample.image.width(), sample.image.height());

  nn::Tensor grad_cls(fwd.rpn_cls.shape());
  nn::Tensor grad_reg(fwd.rpn_reg.shape());
  rpn_losses(fwd, anchor_list, gt, w, h, loss, grad_cls, grad_reg);

  // RoI minibatch from the current proposals plus the ground truth itself.
  std::vector<BoundingBox> rois;
  for (const Proposal& p : propose(fwd.rpn_cls, fwd.rpn_reg, anchor_list, w, h, config_.proposals)) {
    rois.push_back(p.box);
  }
  rois.insert(rois.end(), gt.begin(), gt.end());

  struct Roi {
    std::size_t index;
    int gt;  // -1 for background
  };
  std::vector<Roi> fg, bg;
  for (std::size_t r = 0; r < rois.size(); ++r) {
    double best = 0.0;
    int match = -1;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(rois[r], gt[g]);
      if (v > best) {
        best = v;
        match = static_cast<int>(g);
      }
    }
    if (match >= 0 && best >= config_.roi_foreground_iou) {
      fg.push_back({r, match});
    } else {
      bg.push_back({r, -1});
    }
  }
  const auto fg_quota = static_cast<std::size_t>(
      std::floor(config_.roi_foreground_fraction * static_cast<double>(config_.roi_batch)));
  sample_prefix(fg, std::max<std::size_t>(fg_quota, 1));
  sample_prefix(bg, config_.roi_batch - std::min(config_.roi_batch, fg.size()));

  std::vector<Roi> batch = fg;
  batch.insert(batch.end(), bg.begin(), bg.end());
  const double n_rois = static_cast<double>(std::max<std::size_t>(batch.size(), 1));
  const double n_fg = static_cast<double>(std::max<std::size_t>(fg.size(), 1));

  nn::Tensor grad_feature(fwd.feature().shape());
  for (const Roi& roi : batch) {
    const HeadForward head = forward_head(model_, fwd.feature(), rois[roi.index]);
    const std::size_t label = roi.gt >= 0 ? gt_label[static_cast<std::size_t>(roi.gt)] : 0;
    const auto ce = nn::softmax_cross_entropy(head.cls_logits, label);
    loss.head_cls += ce.loss / n_rois;
    nn::Tensor g_cls = ce.grad;
    for (float& v : g_cls.data()) v = static_cast<float>(v / n_rois);

    nn::Tensor g_box(head.box.shape());
    if (label != 0) {
      const BoxDeltas t = encode_box(gt[static_cast<std::size_t>(roi.gt)], rois[roi.index]);
      nn::Tensor pred({4}), target({4});
      for (std::size_t i = 0; i < 4; ++i) {
        pred[i] = head.box[4 * (label - 1) + i];
        target[i] = static_cast<float>(t[i] / kHeadDeltaScale[i]);
      }
      loss.head_reg += nn::smooth_l1_loss(pred, target) / n_fg;
      const nn::Tensor g = nn::smooth_l1_backward(pred, target);
      for (std::size_t i = 0; i < 4; ++i) g_box[4 * (label - 1) + i] = static_cast<float>(g[i] / n_fg);
    }
    backward_head(model_, head, g_cls, g_box, grads_, grad_feature);
  }

  backward_features(model_, fwd, grad_cls, grad_reg, grad_feature, grads_);
  optimizer_.step(grads_.tensors);
  grads_.zero();
  return loss;
}

}  // namespace

TrainResult train(std::span<const TrainingSample> dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  for (const auto& s : dataset) {
    for (const auto& a : s.annotations) head_label(a.category);
  }

  Trainer trainer(config);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();

  TrainResult result{DetectorModel{}, {}, {}};
  result.loss_log.reserve(config.epochs * config.iters_per_epoch);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double sum = 0.0;
    for (std::size_t it = 0; it < config.iters_per_epoch; ++it) {
      if (cursor == order.size()) {
        trainer.rng().shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const IterationLoss l = trainer.step(dataset[order[cursor++]]);
      sum += l.total();
      result.loss_log.push_back(l);
    }
    const double mean = sum / static_cast<double>(config.iters_per_epoch);
    result.epoch_mean_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.model = trainer.release();
  return result;
}

std::string loss_log_csv(const std::vector<IterationLoss>& log, std::size_t iters_per_epoch) {
  std::ostringstream os;
  os.precision(9);
  os << "iteration,epoch,rpn_cls,rpn_reg,head_cls,head_reg,total\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& l = log[i];
    os << i << ',' << (iters_per_epoch ? i / iters_per_epoch : 0) << ',' << l.rpn_cls << ','
       << l.rpn_reg << ',' << l.head_cls << ',' << l.head_reg << ',' << l.total() << '\n';
  }
  return os.str();
}

}  // namespace cubesort::detect
