#include "cubesort/colordetect.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <utility>

#include "cubesort/error.hpp"

namespace cubesort::color {

bool HsvRange::contains(HsvPixel p) const noexcept {
  const bool hue_ok = h_lo <= h_hi ? (p.h >= h_lo && p.h <= h_hi) : (p.h >= h_lo || p.h <= h_hi);
  return hue_ok && p.s >= s_lo && p.s <= s_hi && p.v >= v_lo && p.v <= v_hi;
}

std::vector<HsvRange> default_ranges() {
  return {
      {170, 10, 100, 255, 80, 255, "red"},
      {40, 85, 100, 255, 80, 255, "green"},
      {95, 130, 100, 255, 80, 255, "blue"},
      {20, 35, 100, 255, 80, 255, "yellow"},
  };
}

// Integer evaluation of the max-channel hue/saturation formulas. Both
// roundings are half-up on exact rationals, so no floating point is needed.
HsvPixel bgr_to_hsv(std::uint8_t b, std::uint8_t g, std::uint8_t r) noexcept {
  const int v = std::max({r, g, b});
  const int lo = std::min({r, g, b});
  const int diff = v - lo;
  HsvPixel out;
  out.v = static_cast<std::uint8_t>(v);
  if (diff == 0) return out;
  out.s = static_cast<std::uint8_t>((2 * 255 * diff + v) / (2 * v));

  // Half-degrees scaled by diff: hue/2 = num / diff.
  int num;
  if (v == r) {
    num = 30 * (g - b);
  } else if (v == g) {
    num = 60 * diff + 30 * (b - r);
  } else {
    num = 120 * diff + 30 * (r - g);
  }
  if (num < 0) num += 180 * diff;
  int h = (2 * num + diff) / (2 * diff);
  if (h >= 180) h -= 180;
  out.h = static_cast<std::uint8_t>(h);
  return out;
}

std::size_t BitMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BitMask threshold_mask(const imaging::ImageBuffer& img, const HsvRange& range) {
  BitMask mask(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const imaging::Bgr c = img.at(x, y);
      if (range.contains(bgr_to_hsv(c.b, c.g, c.r))) mask.set(x, y, true);
    }
  }
  return mask;
}

std::vector<Blob> connected_components(const BitMask& mask, std::size_t min_area) {
  if (min_area == 0) throw Error(ErrorCode::InvalidArgument, "min_area must be >= 1");
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<std::uint8_t> visited(w * h, 0);
  std::vector<std::size_t> stack;
  std::vector<Blob> blobs;

  for (std::size_t sy = 0; sy < h; ++sy) {
    for (std::size_t sx = 0; sx < w; ++sx) {
      if (!mask.get(sx, sy) || visited[sy * w + sx]) continue;
      std::size_t x0 = sx, x1 = sx, y0 = sy, y1 = sy, area = 0;
      visited[sy * w + sx] = 1;
      stack.push_back(sy * w + sx);
      while (!stack.empty()) {
        const std::size_t idx = stack.back();
        stack.pop_back();
        const std::size_t x = idx % w;
        const std::size_t y = idx / w;
        ++area;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        const std::size_t ylo = y > 0 ? y - 1 : 0, yhi = std::min(y + 1, h - 1);
        const std::size_t xlo = x > 0 ? x - 1 : 0, xhi = std::min(x + 1, w - 1);
        for (std::size_t ny = ylo; ny <= yhi; ++ny) {
          for (std::size_t nx = xlo; nx <= xhi; ++nx) {
            const std::size_t n = ny * w + nx;
            if (!visited[n] && mask.get(nx, ny)) {
              visited[n] = 1;
              stack.push_back(n);
            }
          }
        }
      }
      if (area >= min_area) {
        blobs.push_back({{static_cast<double>(x0), static_cast<double>(y0),
                          static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)},
                         area,
                         {}});
      }
    }
  }
  std::stable_sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    return std::pair(a.bbox.ymin, a.bbox.xmin) < std::pair(b.bbox.ymin, b.bbox.xmin);
  });
  return blobs;
}

std::vector<Blob> detect_colored_objects(const imaging::ImageBuffer& img,
                                         const std::vector<HsvRange>& ranges,
                                         std::size_t min_area) {
  if (ranges.empty()) throw Error(ErrorCode::InvalidArgument, "no color ranges configured");
  std::vector<Blob> out;
  for (const HsvRange& range : ranges) {
    auto blobs = connected_components(threshold_mask(img, range), min_area);
    for (Blob& blob : blobs) {
      blob.category = range.category;
      out.push_back(std::move(blob));
    }
  }
  return out;
}

imaging::ImageBuffer crop(const imaging::ImageBuffer& img, const BoundingBox& box, std::size_t pad) {
  if (box.degenerate()) throw Error(ErrorCode::DegenerateBox, "crop box has zero area");
  const double p = static_cast<double>(pad);
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  const long x0 = std::clamp(static_cast<long>(std::floor(box.xmin - p)), 0L, w);
  const long y0 = std::clamp(static_cast<long>(std::floor(box.ymin - p)), 0L, h);
  const long x1 = std::clamp(static_cast<long>(std::ceil(box.xmax + p)), 0L, w);
  const long y1 = std::clamp(static_cast<long>(std::ceil(box.ymax + p)), 0L, h);
  if (x0 >= x1 || y0 >= y1) throw Error(ErrorCode::DegenerateBox, "crop box lies outside image");

  imaging::ImageBuffer out(static_cast<std::size_t>(x1 - x0), static_cast<std::size_t>(y1 - y0));
  for (long y = y0; y < y1; ++y) {
    for (long x = x0; x < x1; ++x) {
      out.set(static_cast<std::size_t>(x - x0), static_cast<std::size_t>(y - y0),
              img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)));
    }
  }
  return out;
}

std::vector<std::string> store_crops(const imaging::ImageBuffer& img, const std::vector<Blob>& blobs,
                                     const std::string& dir, std::size_t pad,
                                     std::size_t first_index) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  std::map<std::string, std::size_t> next;
  std::vector<std::string> paths;
  for (const Blob& blob : blobs) {
    const std::string name = blob.category.empty() ? "object" : blob.category;
    auto [it, inserted] = next.try_emplace(name, first_index);
    const auto path = (std::filesystem::path(dir) / (name + std::to_string(it->second++) + ".ppm"));
    imaging::write_ppm_file(path.string(), crop(img, blob.bbox, pad));
    paths.push_back(path.string());
  }
  return paths;
}

}  // namespace cubesort::color
