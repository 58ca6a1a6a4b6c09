#pragma once

namespace cubesort {

/// Axis-aligned box in pixel coordinates, [xmin, xmax) x [ymin, ymax).
/// Coordinates are fractional inside the detector and integral at I/O
/// boundaries (annotations, blobs, CSV).
struct BoundingBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  constexpr double width() const noexcept { return xmax - xmin; }
  constexpr double height() const noexcept { return ymax - ymin; }
  constexpr double area() const noexcept { return width() * height(); }
  constexpr double center_x() const noexcept { return 0.5 * (xmin + xmax); }
  constexpr double center_y() const noexcept { return 0.5 * (ymin + ymax); }
  constexpr bool degenerate() const noexcept { return !(xmin < xmax) || !(ymin < ymax); }

  friend constexpr bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

}  // namespace cubesort
