#include "cubesort/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"

namespace cubesort::imaging {

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, Bgr fill)
    : width_(width), height_(height) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  data_.resize(width * height * 3);
  for (std::size_t i = 0; i < width * height; ++i) {
    data_[3 * i] = fill.b;
    data_[3 * i + 1] = fill.g;
    data_[3 * i + 2] = fill.r;
  }
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (data_.size() != width * height * 3) {
    throw Error(ErrorCode::InvalidArgument, "raster length does not match dimensions");
  }
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_number(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) {
      throw Error(ErrorCode::TruncatedData, std::string("header ends before ") + field);
    }
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      ++pos_;
      if (++digits > 9) throw Error(ErrorCode::InvalidArgument, std::string(field) + " too large");
    }
    if (digits == 0) {
      throw Error(ErrorCode::InvalidArgument, std::string("malformed ") + field);
    }
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ImageBuffer load_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(ErrorCode::BadMagic, "expected binary PPM magic \"P6\"");
  }
  HeaderReader reader(bytes);
  reader.advance(2);
  const std::size_t width = reader.read_number("width");
  const std::size_t height = reader.read_number("height");
  const std::size_t maxval = reader.read_number("maxval");
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval) + " != 255");
  }
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::InvalidArgument, "zero image dimension");
  }
  // Exactly one whitespace byte separates maxval from the raster.
  if (reader.remaining() == 0) throw Error(ErrorCode::TruncatedData, "missing raster");
  reader.advance(1);

  const std::size_t needed = width * height * 3;
  if (reader.remaining() < needed) {
    throw Error(ErrorCode::TruncatedData, "raster has " + std::to_string(reader.remaining()) +
                                              " bytes, header promises " + std::to_string(needed));
  }
  std::vector<std::uint8_t> data(needed);
  const std::uint8_t* src = bytes.data() + reader.pos();
  for (std::size_t i = 0; i < width * height; ++i) {
    data[3 * i] = src[3 * i + 2];
    data[3 * i + 1] = src[3 * i + 1];
    data[3 * i + 2] = src[3 * i];
  }
  return ImageBuffer(width, height, std::move(data));
}

std::vector<std::uint8_t> save_ppm(const ImageBuffer& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto raster = img.bytes();
  out.reserve(out.size() + raster.size());
  for (std::size_t i = 0; i + 2 < raster.size(); i += 3) {
    out.push_back(raster[i + 2]);
    out.push_back(raster[i + 1]);
    out.push_back(raster[i]);
  }
  return out;
}

ImageBuffer read_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_ppm(bytes);
}

void write_ppm_file(const std::string& path, const ImageBuffer& img) {
  const auto bytes = save_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// raster operations

ImageBuffer rescale_half(const ImageBuffer& img) {
  if (img.width() < 2 || img.height() < 2) {
    throw Error(ErrorCode::TooSmall, "rescale_half needs at least 2x2 pixels");
  }
  const std::size_t w = img.width() / 2;
  const std::size_t h = img.height() / 2;
  const auto src = img.bytes();
  const std::size_t stride = img.width() * 3;
  std::vector<std::uint8_t> out(w * h * 3);
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* row0 = src.data() + (2 * y) * stride;
    const std::uint8_t* row1 = row0 + stride;
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t i = 6 * x + c;
        const unsigned sum = row0[i] + row0[i + 3] + row1[i] + row1[i + 3];
        out[(y * w + x) * 3 + c] = static_cast<std::uint8_t>((sum + 2) / 4);
      }
    }
  }
  return ImageBuffer(w, h, std::move(out));
}

namespace {

struct PixelRect {
  long x0, y0, x1, y1;  // half-open
  bool empty() const noexcept { return x0 >= x1 || y0 >= y1; }
};

PixelRect clip_to_image(const BoundingBox& box, const ImageBuffer& img) {
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  return {std::clamp(std::lround(box.xmin), 0L, w), std::clamp(std::lround(box.ymin), 0L, h),
          std::clamp(std::lround(box.xmax), 0L, w), std::clamp(std::lround(box.ymax), 0L, h)};
}

}  // namespace

ImageBuffer draw_rect(const ImageBuffer& img, const BoundingBox& box, Bgr color,
                      std::size_t thickness) {
  ImageBuffer out = img;
  if (thickness == 0) thickness = 1;
  const PixelRect r = clip_to_image(box, img);
  if (r.empty()) return out;
  const auto t = static_cast<long>(thickness);
  for (long y = r.y0; y < r.y1; ++y) {
    const bool edge_row = y < r.y0 + t || y >= r.y1 - t;
    for (long x = r.x0; x < r.x1; ++x) {
      if (edge_row || x < r.x0 + t || x >= r.x1 - t) {
        out.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), color);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// synthetic scenes

std::string_view to_string(ColorCategory c) noexcept {
  switch (c) {
    case ColorCategory::Red: return "red";
    case ColorCategory::Green: return "green";
    case ColorCategory::Blue: return "blue";
    case ColorCategory::Yellow: return "yellow";
  }
  return "unknown";
}

Bgr category_color(ColorCategory c) noexcept {
  switch (c) {
    case ColorCategory::Red: return {30, 30, 220};
    case ColorCategory::Green: return {40, 180, 40};
    case ColorCategory::Blue: return {200, 60, 30};
    case ColorCategory::Yellow: return {20, 210, 220};
  }
  return {};
}

Bgr hole_color(Bgr background) noexcept {
  const unsigned luma = (29u * background.b + 150u * background.g + 77u * background.r + 128u) >> 8;
  const auto v = static_cast<std::uint8_t>(luma / 3);
  return {v, v, v};
}

BoundingBox CubeSpec::bbox() const noexcept {
  const int x0 = center_x - side / 2;
  const int y0 = center_y - side / 2;
  return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x0 + side),
          static_cast<double>(y0 + side)};
}

namespace {

std::uint8_t add_noise(std::uint8_t base, std::int64_t noise) noexcept {
  return static_cast<std::uint8_t>(std::clamp<std::int64_t>(base + noise, 0, 255));
}

void validate_scene(const SceneSpec& spec) {
  if (spec.canvas_width == 0 || spec.canvas_height == 0) {
    throw Error(ErrorCode::InvalidScene, "canvas dimensions must be positive");
  }
  for (std::size_t i = 0; i < spec.cubes.size(); ++i) {
    const CubeSpec& cube = spec.cubes[i];
    if (cube.side < 8) throw Error(ErrorCode::InvalidScene, "cube side must be >= 8");
    const BoundingBox b = cube.bbox();
    if (b.xmin < 0 || b.ymin < 0 || b.xmax > static_cast<double>(spec.canvas_width) ||
        b.ymax > static_cast<double>(spec.canvas_height)) {
      throw Error(ErrorCode::InvalidScene, "cube " + std::to_string(i) + " leaves the canvas");
    }
    if (cube.defect) {
      if (!(cube.defect->fraction > 0.0 && cube.defect->fraction <= 0.5)) {
        throw Error(ErrorCode::InvalidScene, "defect fraction must lie in (0, 0.5]");
      }
      if (cube.defect->corner < 0 || cube.defect->corner > 3) {
        throw Error(ErrorCode::InvalidScene, "notch corner must be 0..3");
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      const BoundingBox o = spec.cubes[j].bbox();
      const bool disjoint =
          b.xmax <= o.xmin || o.xmax <= b.xmin || b.ymax <= o.ymin || o.ymax <= b.ymin;
      if (!disjoint) {
        throw Error(ErrorCode::OverlapError,
                    "cubes " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

void render_notch(ImageBuffer& img, int x0, int y0, int side, const DefectSpec& d, Bgr bg) {
  const int legs = std::min(side - 1, static_cast<int>(std::lround(2.0 * d.fraction * side)));
  for (int dy = 0; dy < legs; ++dy) {
    for (int dx = 0; dx + dy < legs; ++dx) {
      const bool right = d.corner == 1 || d.corner == 2;
      const bool bottom = d.corner == 2 || d.corner == 3;
      const int x = right ? x0 + side - 1 - dx : x0 + dx;
      const int y = bottom ? y0 + side - 1 - dy : y0 + dy;
      img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), bg);
    }
  }
}

void render_hole(ImageBuffer& img, int x0, int y0, int side, const DefectSpec& d, Bgr bg) {
  const double radius = d.fraction * side / 2.0;
  const double cx = x0 + side / 2.0;
  const double cy = y0 + side / 2.0;
  const Bgr dark = hole_color(bg);
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) {
      const double ddx = x + 0.5 - cx;
      const double ddy = y + 0.5 - cy;
      if (ddx * ddx + ddy * ddy <= radius * radius) {
        img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), dark);
      }
    }
  }
}

}  // namespace

Scene synth_scene(const SceneSpec& spec) {
  validate_scene(spec);
  Scene scene{ImageBuffer(spec.canvas_width, spec.canvas_height, spec.background), {}};
  Xoshiro256ss rng(spec.seed);

  for (const CubeSpec& cube : spec.cubes) {
    const BoundingBox b = cube.bbox();
    const int x0 = static_cast<int>(b.xmin);
    const int y0 = static_cast<int>(b.ymin);
    const Bgr base = category_color(cube.color);
    for (int y = y0; y < y0 + cube.side; ++y) {
      for (int x = x0; x < x0 + cube.side; ++x) {
        const Bgr c{add_noise(base.b, rng.between(-kNoiseAmplitude, kNoiseAmplitude)),
                    add_noise(base.g, rng.between(-kNoiseAmplitude, kNoiseAmplitude)),
                    add_noise(base.r, rng.between(-kNoiseAmplitude, kNoiseAmplitude))};
        scene.image.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c);
      }
    }
    if (cube.defect) {
      if (cube.defect->kind == DefectKind::Notch) {
        render_notch(scene.image, x0, y0, cube.side, *cube.defect, spec.background);
      } else {
        render_hole(scene.image, x0, y0, cube.side, *cube.defect, spec.background);
      }
    }
    Annotation a;
    a.width = static_cast<int>(spec.canvas_width);
    a.height = static_cast<int>(spec.canvas_height);
    a.category = cube.defect ? kDefect : kIntact;
    a.xmin = x0;
    a.ymin = y0;
    a.xmax = x0 + cube.side;
    a.ymax = y0 + cube.side;
    scene.annotations.push_back(std::move(a));
  }
  return scene;
}

}  // namespace cubesort::imaging
