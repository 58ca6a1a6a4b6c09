#include "cubesort/detector/roi_pool.hpp"

#include <algorithm>
#include <cmath>

namespace cubesort::detect {

FeatureRegion map_to_feature(const BoundingBox& proposal, std::size_t stride, std::size_t feat_w,
                             std::size_t feat_h) {
  if (stride == 0) throw Error(ErrorCode::InvalidArgument, "roi stride must be >= 1");
  const double s = static_cast<double>(stride);
  const auto clampc = [](double v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  FeatureRegion r{clampc(std::floor(proposal.xmin / s), feat_w), clampc(std::floor(proposal.ymin / s), feat_h),
                  clampc(std::ceil(proposal.xmax / s), feat_w), clampc(std::ceil(proposal.ymax / s), feat_h)};
  if (r.x0 >= r.x1 || r.y0 >= r.y1) {
    throw Error(ErrorCode::EmptyRegion, "proposal maps to an empty feature region");
  }
  return r;
}

template <typename T>
RoiPoolResult<T> roi_pool(const nn::BasicTensor<T>& feature_map, const BoundingBox& proposal,
                          std::size_t stride, std::size_t bins) {
  if (feature_map.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "roi_pool expects [C,H,W]");
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "roi_pool needs at least one bin");
  const std::size_t c = feature_map.dim(0), fh = feature_map.dim(1), fw = feature_map.dim(2);
  const FeatureRegion reg = map_to_feature(proposal, stride, fw, fh);
  const std::size_t rh = reg.y1 - reg.y0, rw = reg.x1 - reg.x0;

  RoiPoolResult<T> r{nn::BasicTensor<T>({c, bins, bins}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t by = 0; by < bins; ++by) {
      const std::size_t y0 = reg.y0 + (by * rh) / bins;
      const std::size_t y1 = reg.y0 + ((by + 1) * rh + bins - 1) / bins;
      for (std::size_t bx = 0; bx < bins; ++bx, ++o) {
        const std::size_t x0 = reg.x0 + (bx * rw) / bins;
        const std::size_t x1 = reg.x0 + ((bx + 1) * rw + bins - 1) / bins;
        std::size_t best = (ch * fh + y0) * fw + x0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) {
            const std::size_t idx = (ch * fh + y) * fw + x;
            if (feature_map[idx] > feature_map[best]) best = idx;
          }
        }
        r.output[o] = feature_map[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <typename T>
void roi_pool_backward(const nn::BasicTensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                       nn::BasicTensor<T>& grad_feature) {
  if (argmax.size() != grad_out.size()) {
    throw Error(ErrorCode::ShapeMismatch, "roi_pool_backward: argmax/gradient size mismatch");
  }
  for (std::size_t i = 0; i < argmax.size(); ++i) grad_feature[argmax[i]] += grad_out[i];
}

template RoiPoolResult<float> roi_pool(const nn::Tensor&, const BoundingBox&, std::size_t, std::size_t);
template RoiPoolResult<double> roi_pool(const nn::TensorD&, const BoundingBox&, std::size_t, std::size_t);
template void roi_pool_backward(const nn::Tensor&, const std::vector<std::size_t>&, nn::Tensor&);
template void roi_pool_backward(const nn::TensorD&, const std::vector<std::size_t>&, nn::TensorD&);

}  // namespace cubesort::detect
