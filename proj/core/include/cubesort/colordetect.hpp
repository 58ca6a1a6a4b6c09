#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cubesort/box.hpp"
#include "cubesort/imaging.hpp"

namespace cubesort::color {

/// 8-bit HSV with hue halved into [0, 179].
struct HsvPixel {
  std::uint8_t h = 0;
  std::uint8_t s = 0;
  std::uint8_t v = 0;

  friend constexpr bool operator==(const HsvPixel&, const HsvPixel&) = default;
};

/// Inclusive HSV window. h_lo > h_hi wraps through hue 0.
struct HsvRange {
  std::uint8_t h_lo = 0;
  std::uint8_t h_hi = 179;
  std::uint8_t s_lo = 0;
  std::uint8_t s_hi = 255;
  std::uint8_t v_lo = 0;
  std::uint8_t v_hi = 255;
  std::string category;

  bool contains(HsvPixel p) const noexcept;
};

/// red wraps [170, 10]; green [40, 85]; blue [95, 130]; yellow [20, 35];
/// all with s >= 100 and v >= 80.
std::vector<HsvRange> default_ranges();

inline constexpr std::size_t kDefaultMinArea = 64;

HsvPixel bgr_to_hsv(std::uint8_t b, std::uint8_t g, std::uint8_t r) noexcept;

class BitMask {
 public:
  BitMask(std::size_t width, std::size_t height)
      : width_(width), height_(height), bits_(width * height, 0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool get(std::size_t x, std::size_t y) const noexcept { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v) noexcept { bits_[y * width_ + x] = v ? 1 : 0; }
  std::size_t count() const noexcept;

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> bits_;
};

struct Blob {
  BoundingBox bbox;  // integral, half-open
  std::size_t area = 0;
  std::string category;
};

BitMask threshold_mask(const imaging::ImageBuffer& img, const HsvRange& range);

/// 8-connected components of at least `min_area` pixels, sorted by
/// (ymin, xmin). Throws InvalidArgument when min_area is zero.
std::vector<Blob> connected_components(const BitMask& mask, std::size_t min_area);

/// Union over `ranges` of the components of each range's mask, tagged with
/// the range category. Throws InvalidArgument when `ranges` is empty.
std::vector<Blob> detect_colored_objects(const imaging::ImageBuffer& img,
                                         const std::vector<HsvRange>& ranges,
                                         std::size_t min_area = kDefaultMinArea);

/// `box` grown by `pad` on every side and clipped to the image.
/// Throws DegenerateBox for zero-area boxes or boxes entirely outside.
imaging::ImageBuffer crop(const imaging::ImageBuffer& img, const BoundingBox& box,
                          std::size_t pad = 0);

/// Writes `<category><index>.ppm` for every blob into `dir` (created if
/// needed); index counts per category from `first_index`. Returns the paths.
std::vector<std::string> store_crops(const imaging::ImageBuffer& img, const std::vector<Blob>& blobs,
                                     const std::string& dir, std::size_t pad = 0,
                                     std::size_t first_index = 0);

}  // namespace cubesort::color
