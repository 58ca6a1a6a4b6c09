#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "cubesort/error.hpp"
#include "cubesort/imaging.hpp"
#include "cubesort/rng.hpp"
#include "oracles.hpp"

using namespace cubesort;
using namespace cubesort::imaging;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ImageBuffer random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  Xoshiro256ss rng(seed);
  std::vector<std::uint8_t> data(w * h * 3);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
  return ImageBuffer(w, h, std::move(data));
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Ppm, SinglePixelRedLoadsAsBgr) {
  auto bytes = bytes_of("P6\n1 1\n255\n");
  bytes.insert(bytes.end(), {0xFF, 0x00, 0x00});
  const ImageBuffer img = load_ppm(bytes);
  ASSERT_EQ(img.width(), 1u);
  ASSERT_EQ(img.height(), 1u);
  EXPECT_EQ(img.at(0, 0), (Bgr{0, 0, 255}));
}

TEST(Ppm, WrongMagicIsBadMagic) {
  auto bytes = bytes_of("P5\n1 1\n255\n");
  bytes.push_back(0);
  EXPECT_EQ(code_of([&] { load_ppm(bytes); }), ErrorCode::BadMagic);
}

TEST(Ppm, ShortRasterIsTruncated) {
  auto bytes = bytes_of("P6\n2 2\n255\n");
  bytes.insert(bytes.end(), 11, 0x10);
  EXPECT_EQ(code_of([&] { load_ppm(bytes); }), ErrorCode::TruncatedData);
}

TEST(Ppm, OtherMaxvalRejected) {
  auto bytes = bytes_of("P6\n1 1\n65535\n");
  bytes.insert(bytes.end(), 6, 0);
  EXPECT_EQ(code_of([&] { load_ppm(bytes); }), ErrorCode::UnsupportedMaxval);
}

TEST(Ppm, CommentsInHeaderAreSkipped) {
  auto bytes = bytes_of("P6\n# made by hand\n1 1\n255\n");
  bytes.insert(bytes.end(), {1, 2, 3});
  EXPECT_EQ(load_ppm(bytes).at(0, 0), (Bgr{3, 2, 1}));
}

TEST(Ppm, BlackPixelEncodesExactly) {
  const auto out = save_ppm(ImageBuffer(1, 1, Bgr{0, 0, 0}));
  auto expected = bytes_of("P6\n1 1\n255\n");
  expected.insert(expected.end(), {0, 0, 0});
  EXPECT_EQ(out, expected);
}

TEST(Ppm, FullFrameHeader) {
  const auto out = save_ppm(ImageBuffer(540, 610));
  EXPECT_EQ(std::string(out.begin(), out.begin() + 15), "P6\n540 610\n255\n");
  EXPECT_EQ(out.size(), 15u + 540u * 610u * 3u);
}

TEST(Ppm, RoundTripIsByteExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Xoshiro256ss rng(seed);
    const ImageBuffer img = random_image(1 + rng.below(40), 1 + rng.below(40), seed);
    const auto bytes = save_ppm(img);
    EXPECT_EQ(load_ppm(bytes), img);
    EXPECT_EQ(save_ppm(load_ppm(bytes)), bytes);
  }
}

TEST(Ppm, FuzzedTruncationsAlwaysStructured) {
  const auto bytes = save_ppm(random_image(5, 4, 1));
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(n));
    EXPECT_THROW(load_ppm(cut), Error) << "prefix " << n;
  }
}

TEST(Rescale, FrameDimensionsHalve) {
  const ImageBuffer half = rescale_half(ImageBuffer(540, 610));
  EXPECT_EQ(half.width(), 270u);
  EXPECT_EQ(half.height(), 305u);
  const ImageBuffer quarter = rescale_half(half);
  EXPECT_EQ(quarter.width(), 135u);
  EXPECT_EQ(quarter.height(), 152u);
}

TEST(Rescale, UniformBlockKeepsColour) {
  EXPECT_EQ(rescale_half(ImageBuffer(2, 2, Bgr{7, 99, 201})).at(0, 0), (Bgr{7, 99, 201}));
}

TEST(Rescale, MeanRoundsHalfUp) {
  ImageBuffer img(2, 2);
  img.set(0, 0, {0, 0, 0});
  img.set(1, 0, {10, 10, 10});
  img.set(0, 1, {20, 20, 20});
  img.set(1, 1, {30, 30, 30});
  EXPECT_EQ(rescale_half(img).at(0, 0), (Bgr{15, 15, 15}));
  img.set(1, 1, {31, 32, 33});  // sums 61, 62, 63 -> 15.25, 15.5, 15.75
  EXPECT_EQ(rescale_half(img).at(0, 0), (Bgr{15, 16, 16}));
}

TEST(Rescale, MatchesScalarOracleOnRandomImages) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageBuffer img = random_image(2 + seed * 3, 3 + seed * 2, seed);
    EXPECT_EQ(rescale_half(img), oracle::rescale_half_scalar(img));
  }
}

TEST(Rescale, TooSmall) {
  EXPECT_EQ(code_of([] { rescale_half(ImageBuffer(1, 5)); }), ErrorCode::TooSmall);
}

TEST(DrawRect, FullThreeByThreeLeavesCentre) {
  const ImageBuffer img(3, 3, Bgr{1, 1, 1});
  const ImageBuffer out = draw_rect(img, {0, 0, 3, 3});
  int changed = 0;
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 3; ++x) changed += out.at(x, y) == kAnnotationGreen;
  EXPECT_EQ(changed, 8);
  EXPECT_EQ(out.at(1, 1), (Bgr{1, 1, 1}));
}

TEST(DrawRect, EmptyBoxLeavesImage) {
  const ImageBuffer img = random_image(6, 6, 3);
  EXPECT_EQ(draw_rect(img, {2, 1, 2, 5}), img);
}

TEST(DrawRect, RecolouredCountMatchesPerimeter) {
  Xoshiro256ss rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const ImageBuffer img(30, 25, Bgr{5, 5, 5});
    const long x0 = rng.between(-5, 28), y0 = rng.between(-5, 23);
    const long x1 = x0 + rng.between(1, 15), y1 = y0 + rng.between(1, 15);
    const long t = rng.between(1, 3);
    const ImageBuffer out = draw_rect(img, {double(x0), double(y0), double(x1), double(y1)}, kAnnotationGreen,
                                      static_cast<std::size_t>(t));
    std::size_t changed = 0;
    for (std::size_t y = 0; y < 25; ++y)
      for (std::size_t x = 0; x < 30; ++x) changed += out.at(x, y) == kAnnotationGreen;
    const long cx0 = std::max(0L, x0), cy0 = std::max(0L, y0), cx1 = std::min(30L, x1), cy1 = std::min(25L, y1);
    EXPECT_EQ(changed, oracle::border_pixel_count(cx0, cy0, cx1, cy1, t));
  }
}

TEST(Scene, EmptyCubeListIsPlainBackground) {
  SceneSpec spec;
  const Scene s = synth_scene(spec);
  EXPECT_TRUE(s.annotations.empty());
  EXPECT_EQ(s.image, ImageBuffer(540, 610, kDefaultBackground));
}

TEST(Scene, IntactCubeAnnotation) {
  SceneSpec spec;
  spec.cubes.push_back({ColorCategory::Red, 100, 100, 40, std::nullopt});
  const Scene s = synth_scene(spec);
  ASSERT_EQ(s.annotations.size(), 1u);
  const Annotation& a = s.annotations[0];
  EXPECT_EQ(a.category, "intact");
  EXPECT_EQ(a.xmin, 80);
  EXPECT_EQ(a.ymin, 80);
  EXPECT_EQ(a.xmax, 120);
  EXPECT_EQ(a.ymax, 120);
  EXPECT_EQ(a.width, 540);
  EXPECT_EQ(a.height, 610);
}

TEST(Scene, NotchExposesBackgroundTriangle) {
  SceneSpec spec;
  spec.cubes.push_back({ColorCategory::Blue, 100, 100, 40, DefectSpec{DefectKind::Notch, 0.25, 1}});
  const Scene s = synth_scene(spec);
  EXPECT_EQ(s.annotations[0].category, "defect");
  std::size_t background = 0;
  for (std::size_t y = 80; y < 120; ++y)
    for (std::size_t x = 80; x < 120; ++x) background += s.image.at(x, y) == kDefaultBackground;
  EXPECT_GE(background, 200u);
  // Legs of 2 * 0.25 * 40 = 20 px: 20 * 21 / 2 cells.
  EXPECT_EQ(background, 210u);
}

TEST(Scene, HolePaintsDarkDisc) {
  SceneSpec spec;
  spec.cubes.push_back({ColorCategory::Yellow, 200, 200, 60, DefectSpec{DefectKind::Hole, 0.4, 0}});
  const Scene s = synth_scene(spec);
  EXPECT_EQ(s.image.at(200, 200), hole_color(kDefaultBackground));
}

TEST(Scene, OverlapRejected) {
  SceneSpec spec;
  spec.cubes.push_back({ColorCategory::Red, 100, 100, 40, std::nullopt});
  spec.cubes.push_back({ColorCategory::Green, 130, 110, 40, std::nullopt});
  EXPECT_EQ(code_of([&] { synth_scene(spec); }), ErrorCode::OverlapError);
}

TEST(Scene, OutOfCanvasRejected) {
  SceneSpec spec;
  spec.cubes.push_back({ColorCategory::Red, 10, 100, 40, std::nullopt});
  EXPECT_EQ(code_of([&] { synth_scene(spec); }), ErrorCode::InvalidScene);
  spec.cubes[0] = {ColorCategory::Red, 100, 100, 6, std::nullopt};
  EXPECT_EQ(code_of([&] { synth_scene(spec); }), ErrorCode::InvalidScene);
  spec.cubes[0] = {ColorCategory::Red, 100, 100, 40, DefectSpec{DefectKind::Notch, 0.7, 0}};
  EXPECT_EQ(code_of([&] { synth_scene(spec); }), ErrorCode::InvalidScene);
}

TEST(Scene, SameSeedByteIdentical) {
  SceneSpec spec;
  spec.seed = 99;
  spec.cubes.push_back({ColorCategory::Green, 150, 300, 80, DefectSpec{DefectKind::Hole, 0.3, 2}});
  spec.cubes.push_back({ColorCategory::Red, 400, 100, 50, std::nullopt});
  EXPECT_EQ(save_ppm(synth_scene(spec).image), save_ppm(synth_scene(spec).image));
  SceneSpec other = spec;
  other.seed = 100;
  EXPECT_NE(synth_scene(spec).image, synth_scene(other).image);
}

TEST(Scene, NoiseStaysWithinAmplitude) {
  SceneSpec spec;
  spec.cubes.push_back({ColorCategory::Green, 150, 150, 50, std::nullopt});
  const Scene s = synth_scene(spec);
  const Bgr nominal = category_color(ColorCategory::Green);
  for (std::size_t y = 125; y < 175; ++y)
    for (std::size_t x = 125; x < 175; ++x) {
      const Bgr p = s.image.at(x, y);
      ASSERT_LE(std::abs(int(p.b) - int(nominal.b)), kNoiseAmplitude);
      ASSERT_LE(std::abs(int(p.g) - int(nominal.g)), kNoiseAmplitude);
      ASSERT_LE(std::abs(int(p.r) - int(nominal.r)), kNoiseAmplitude);
    }
}

TEST(Scene, AnnotationTightlyBoundsForeground) {
  Xoshiro256ss rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    SceneSpec spec;
    spec.seed = rng();
    const int side = static_cast<int>(rng.between(8, 120));
    CubeSpec c{static_cast<ColorCategory>(trial % 4), static_cast<int>(rng.between(side, 540 - side)),
               static_cast<int>(rng.between(side, 610 - side)), side, std::nullopt};
    if (trial % 2) c.defect = DefectSpec{trial % 4 == 1 ? DefectKind::Notch : DefectKind::Hole, 0.3, trial % 4};
    spec.cubes.push_back(c);
    const Scene s = synth_scene(spec);
    int xmin = 1 << 30, ymin = 1 << 30, xmax = -1, ymax = -1;
    for (int y = 0; y < 610; ++y)
      for (int x = 0; x < 540; ++x)
        if (s.image.at(x, y) != kDefaultBackground) {
          xmin = std::min(xmin, x);
          ymin = std::min(ymin, y);
          xmax = std::max(xmax, x + 1);
          ymax = std::max(ymax, y + 1);
        }
    const Annotation& a = s.annotations[0];
    EXPECT_EQ(xmin, a.xmin);
    EXPECT_EQ(ymin, a.ymin);
    EXPECT_EQ(xmax, a.xmax);
    EXPECT_EQ(ymax, a.ymax);
  }
}
