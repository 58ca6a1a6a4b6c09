#pragma once

#include <cstddef>
#include <vector>

#include "cubesort/box.hpp"
#include "cubesort/tensornet/tensor.hpp"

namespace cubesort::detect {

inline constexpr std::size_t kRoiBins = 4;

/// Proposal footprint on the feature grid: image box divided by the stride
/// and rounded outward, clipped to the map. Half-open cell ranges.
struct FeatureRegion {
  std::size_t x0, y0, x1, y1;
};

/// Throws EmptyRegion when nothing remains after mapping and clipping.
FeatureRegion map_to_feature(const BoundingBox& proposal, std::size_t stride, std::size_t feat_w,
                             std::size_t feat_h);

template <typename T>
struct RoiPoolResult {
  nn::BasicTensor<T> output;        // [C, bins, bins]
  std::vector<std::size_t> argmax;  // flat feature-map index per output element
};

/// Max over each of bins x bins sub-windows; bin i spans
/// [floor(i * n / bins), ceil((i + 1) * n / bins)) of the region.
template <typename T>
RoiPoolResult<T> roi_pool(const nn::BasicTensor<T>& feature_map, const BoundingBox& proposal,
                          std::size_t stride = 8, std::size_t bins = kRoiBins);

/// Scatters `grad_out` back through the recorded argmax into `grad_feature`.
template <typename T>
void roi_pool_backward(const nn::BasicTensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                       nn::BasicTensor<T>& grad_feature);

}  // namespace cubesort::detect
