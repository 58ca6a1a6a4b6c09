#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cubesort/tensornet/tensor.hpp"

namespace cubesort::nn {

inline constexpr std::uint32_t kWeightsVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// "CSNN", u32 version, then per tensor: u32 name length, name bytes,
/// u32 rank, u32 extents, float32 data. All integers and floats little-endian.
std::vector<std::uint8_t> encode_weights(std::span<const NamedTensor> tensors);

/// Throws BadWeights on any structural problem.
std::vector<NamedTensor> decode_weights(std::span<const std::uint8_t> bytes);

void write_weights_file(const std::string& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_weights_file(const std::string& path);

}  // namespace cubesort::nn
