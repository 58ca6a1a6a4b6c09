#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubesort/annotation.hpp"
#include "cubesort/box.hpp"

namespace cubesort::imaging {

struct Bgr {
  std::uint8_t b = 0;
  std::uint8_t g = 0;
  std::uint8_t r = 0;

  friend constexpr bool operator==(const Bgr&, const Bgr&) = default;
};

inline constexpr Bgr kAnnotationGreen{0, 255, 0};

/// Row-major 8-bit raster, three bytes per pixel in B,G,R order.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  /// Throws InvalidArgument when either dimension is zero.
  ImageBuffer(std::size_t width, std::size_t height, Bgr fill = {});
  /// Adopts `data`; its length must be width * height * 3.
  ImageBuffer(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  Bgr at(std::size_t x, std::size_t y) const noexcept {
    const std::uint8_t* p = data_.data() + (y * width_ + x) * 3;
    return {p[0], p[1], p[2]};
  }
  void set(std::size_t x, std::size_t y, Bgr c) noexcept {
    std::uint8_t* p = data_.data() + (y * width_ + x) * 3;
    p[0] = c.b;
    p[1] = c.g;
    p[2] = c.r;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

// --- PPM (binary P6, maxval 255) ---------------------------------------

ImageBuffer load_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_ppm(const ImageBuffer& img);

ImageBuffer read_ppm_file(const std::string& path);
void write_ppm_file(const std::string& path, const ImageBuffer& img);

// --- raster operations -------------------------------------------------

/// 2x2 box average with round-half-up; odd trailing row/column dropped.
ImageBuffer rescale_half(const ImageBuffer& img);

/// Border of `box` (integer pixel edges, rounded) painted with `color`.
/// The box is clipped to the image; a zero-area box leaves it unchanged.
ImageBuffer draw_rect(const ImageBuffer& img, const BoundingBox& box,
                      Bgr color = kAnnotationGreen, std::size_t thickness = 1);

// --- synthetic scenes --------------------------------------------------

enum class ColorCategory { Red, Green, Blue, Yellow };

std::string_view to_string(ColorCategory c) noexcept;
/// Nominal render color for a category (before noise).
Bgr category_color(ColorCategory c) noexcept;

enum class DefectKind { Notch, Hole };

/// `fraction` in (0, 0.5]. A notch removes a right triangle at `corner`
/// (0 = top-left, 1 = top-right, 2 = bottom-right, 3 = bottom-left) whose
/// legs are 2 * fraction * side pixels, capped at side - 1. A hole paints a
/// centred dark disc of radius fraction * side / 2.
struct DefectSpec {
  DefectKind kind = DefectKind::Notch;
  double fraction = 0.25;
  int corner = 1;
};

struct CubeSpec {
  ColorCategory color = ColorCategory::Red;
  int center_x = 0;
  int center_y = 0;
  int side = 8;
  std::optional<DefectSpec> defect;

  /// Exact pixel extent: xmin = center_x - side / 2, xmax = xmin + side.
  BoundingBox bbox() const noexcept;
};

inline constexpr Bgr kDefaultBackground{190, 190, 190};
inline constexpr int kNoiseAmplitude = 8;

struct SceneSpec {
  std::size_t canvas_width = 540;
  std::size_t canvas_height = 610;
  Bgr background = kDefaultBackground;
  std::vector<CubeSpec> cubes;
  std::uint64_t seed = 0;
};

/// Rendered raster plus one annotation per cube, in `cubes` order. The
/// annotation filename is left empty; width/height are the canvas size.
struct Scene {
  ImageBuffer image;
  std::vector<Annotation> annotations;
};

/// Renders the scene deterministically from `spec.seed`.
/// Throws OverlapError when two cube boxes intersect and InvalidScene when a
/// cube leaves the canvas or violates CubeSpec/DefectSpec constraints.
Scene synth_scene(const SceneSpec& spec);

/// Color painted inside hole defects.
Bgr hole_color(Bgr background) noexcept;

}  // namespace cubesort::imaging
