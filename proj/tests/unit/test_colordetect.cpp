#include <gtest/gtest.h>

#include <filesystem>

#include "cubesort/colordetect.hpp"
#include "cubesort/detector/box_ops.hpp"
#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"
#include "oracles.hpp"

using namespace cubesort;
using namespace cubesort::color;
using imaging::Bgr;
using imaging::ImageBuffer;

namespace {

void expect_matches_reference(int b, int g, int r) {
  const HsvPixel got = bgr_to_hsv(static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(r));
  const oracle::Hsv want = oracle::hsv_reference(b, g, r);
  ASSERT_EQ(got.h, want.h) << b << "," << g << "," << r;
  ASSERT_EQ(got.s, want.s) << b << "," << g << "," << r;
  ASSERT_EQ(got.v, want.v) << b << "," << g << "," << r;
}

HsvRange by_category(const std::string& name) {
  for (const auto& r : default_ranges())
    if (r.category == name) return r;
  throw std::runtime_error("no range " + name);
}

}  // namespace

TEST(Hsv, Black) { EXPECT_EQ(bgr_to_hsv(0, 0, 0), (HsvPixel{0, 0, 0})); }

TEST(Hsv, PureRed) { EXPECT_EQ(bgr_to_hsv(0, 0, 255), (HsvPixel{0, 255, 255})); }

TEST(Hsv, MixedTriple) { expect_matches_reference(32, 64, 128); }

TEST(Hsv, RandomTriplesMatchReference) {
  Xoshiro256ss rng(2024);
  for (int i = 0; i < 100000; ++i) {
    expect_matches_reference(static_cast<int>(rng.below(256)), static_cast<int>(rng.below(256)),
                             static_cast<int>(rng.below(256)));
  }
}

TEST(Hsv, TwoZeroChannelsMatchReference) {
  for (int v = 0; v < 256; ++v) {
    expect_matches_reference(v, 0, 0);
    expect_matches_reference(0, v, 0);
    expect_matches_reference(0, 0, v);
  }
}

TEST(Hsv, GreysHaveZeroSaturationAndHue) {
  for (int v = 0; v < 256; ++v) {
    const HsvPixel p = bgr_to_hsv(v, v, v);
    EXPECT_EQ(p.s, 0);
    EXPECT_EQ(p.h, 0);
    EXPECT_EQ(p.v, v);
  }
}

TEST(Hsv, HueNeverExceeds179) {
  for (int b = 0; b < 256; b += 3)
    for (int g = 0; g < 256; g += 3)
      for (int r = 0; r < 256; r += 3) ASSERT_LE(bgr_to_hsv(b, g, r).h, 179);
}

TEST(Threshold, BlackImageNeverMatchesBrightRange) {
  const BitMask m = threshold_mask(ImageBuffer(8, 8), by_category("green"));
  EXPECT_EQ(m.count(), 0u);
}

TEST(Threshold, RedWrapRangeCoversPureRed) {
  const BitMask m = threshold_mask(ImageBuffer(5, 4, Bgr{0, 0, 255}), by_category("red"));
  EXPECT_EQ(m.count(), 20u);
}

TEST(Threshold, MatchesPerPixelEvaluation) {
  Xoshiro256ss rng(8);
  std::vector<std::uint8_t> data(40 * 30 * 3);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
  const ImageBuffer img(40, 30, data);
  for (const HsvRange& range : default_ranges()) {
    const BitMask m = threshold_mask(img, range);
    for (std::size_t y = 0; y < 30; ++y)
      for (std::size_t x = 0; x < 40; ++x) {
        const Bgr p = img.at(x, y);
        const oracle::Hsv h = oracle::hsv_reference(p.b, p.g, p.r);
        const bool hue = range.h_lo <= range.h_hi ? (h.h >= range.h_lo && h.h <= range.h_hi)
                                                  : (h.h >= range.h_lo || h.h <= range.h_hi);
        const bool want = hue && h.s >= range.s_lo && h.s <= range.s_hi && h.v >= range.v_lo && h.v <= range.v_hi;
        ASSERT_EQ(m.get(x, y), want);
      }
  }
}

TEST(Threshold, WideningNeverClearsBits) {
  Xoshiro256ss rng(21);
  std::vector<std::uint8_t> data(32 * 32 * 3);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
  const ImageBuffer img(32, 32, data);
  HsvRange narrow{40, 85, 100, 200, 80, 200, "green"};
  HsvRange wide = narrow;
  wide.h_lo = 30;
  wide.s_hi = 255;
  wide.v_lo = 20;
  const BitMask a = threshold_mask(img, narrow), b = threshold_mask(img, wide);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      if (a.get(x, y)) {
        ASSERT_TRUE(b.get(x, y));
      }
}

TEST(Components, EmptyMask) { EXPECT_TRUE(connected_components(BitMask(5, 5), 1).empty()); }

TEST(Components, SinglePixel) {
  BitMask m(5, 5);
  m.set(2, 3, true);
  const auto blobs = connected_components(m, 1);
  ASSERT_EQ(blobs.size(), 1u);
  EXPECT_EQ(blobs[0].area, 1u);
  EXPECT_EQ(blobs[0].bbox, (BoundingBox{2, 3, 3, 4}));
}

TEST(Components, DiagonalNeighboursJoin) {
  BitMask m(4, 4);
  m.set(1, 1, true);
  m.set(2, 2, true);
  EXPECT_EQ(connected_components(m, 1).size(), 1u);
}

TEST(Components, ZeroMinAreaRejected) { EXPECT_THROW(connected_components(BitMask(2, 2), 0), Error); }

TEST(Components, RandomMasksMatchFloodFill) {
  Xoshiro256ss rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 1 + rng.below(40), h = 1 + rng.below(40);
    const double density = rng.uniform(0.05, 0.6);
    BitMask m(w, h);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) m.set(x, y, rng.uniform01() < density);
    const std::size_t min_area = 1 + rng.below(6);
    const auto got = connected_components(m, min_area);
    const auto want = oracle::flood_fill_components(m, min_area);
    ASSERT_EQ(got.size(), want.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].area, want[i].area);
      EXPECT_EQ(got[i].bbox, (BoundingBox{double(want[i].xmin), double(want[i].ymin), double(want[i].xmax),
                                          double(want[i].ymax)}));
      EXPECT_LE(got[i].area, static_cast<std::size_t>(got[i].bbox.area()));
      total += got[i].area;
    }
    if (min_area == 1) {
      EXPECT_EQ(total, m.count());
    }
  }
}

TEST(ColorObjects, OneRedCubeFound) {
  imaging::SceneSpec spec;
  spec.cubes.push_back({imaging::ColorCategory::Red, 200, 250, 70, std::nullopt});
  const auto scene = imaging::synth_scene(spec);
  const auto blobs = detect_colored_objects(scene.image, default_ranges());
  ASSERT_EQ(blobs.size(), 1u);
  EXPECT_EQ(blobs[0].category, "red");
  EXPECT_GE(detect::iou(blobs[0].bbox, scene.annotations[0].box()), 0.9);
}

TEST(ColorObjects, EveryPaletteColourIsSeparable) {
  for (int c = 0; c < 4; ++c) {
    imaging::SceneSpec spec;
    spec.seed = static_cast<std::uint64_t>(c);
    spec.cubes.push_back({static_cast<imaging::ColorCategory>(c), 300, 300, 90,
                          imaging::DefectSpec{imaging::DefectKind::Hole, 0.4, 0}});
    const auto scene = imaging::synth_scene(spec);
    const auto blobs = detect_colored_objects(scene.image, default_ranges());
    ASSERT_EQ(blobs.size(), 1u) << c;
    EXPECT_EQ(blobs[0].category, imaging::to_string(static_cast<imaging::ColorCategory>(c)));
    EXPECT_GE(detect::iou(blobs[0].bbox, scene.annotations[0].box()), 0.9);
  }
}

TEST(ColorObjects, EmptySceneHasNoBlobs) {
  EXPECT_TRUE(detect_colored_objects(imaging::synth_scene({}).image, default_ranges()).empty());
}

TEST(ColorObjects, TwoSeparatedCubes) {
  imaging::SceneSpec spec;
  spec.cubes.push_back({imaging::ColorCategory::Red, 100, 100, 60, std::nullopt});
  spec.cubes.push_back({imaging::ColorCategory::Blue, 400, 500, 60, std::nullopt});
  const auto blobs = detect_colored_objects(imaging::synth_scene(spec).image, default_ranges());
  ASSERT_EQ(blobs.size(), 2u);
  std::vector<std::string> cats{blobs[0].category, blobs[1].category};
  std::sort(cats.begin(), cats.end());
  EXPECT_EQ(cats, (std::vector<std::string>{"blue", "red"}));
}

TEST(ColorObjects, EmptyRangeTableRejected) {
  EXPECT_THROW(detect_colored_objects(ImageBuffer(4, 4), {}), Error);
}

TEST(Crop, FullImageIsIdentity) {
  Xoshiro256ss rng(1);
  std::vector<std::uint8_t> data(6 * 5 * 3);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
  const ImageBuffer img(6, 5, data);
  EXPECT_EQ(crop(img, {0, 0, 6, 5}), img);
}

TEST(Crop, SingleInteriorPixel) {
  ImageBuffer img(4, 4);
  img.set(1, 1, {9, 8, 7});
  const ImageBuffer c = crop(img, {1, 1, 2, 2});
  ASSERT_EQ(c.width(), 1u);
  ASSERT_EQ(c.height(), 1u);
  EXPECT_EQ(c.at(0, 0), (Bgr{9, 8, 7}));
}

TEST(Crop, PadClipsAtBorder) {
  Xoshiro256ss rng(17);
  const ImageBuffer img(20, 15);
  for (int trial = 0; trial < 100; ++trial) {
    const long x0 = rng.between(0, 18), y0 = rng.between(0, 13);
    const long x1 = rng.between(x0 + 1, 20), y1 = rng.between(y0 + 1, 15);
    const long pad = rng.between(0, 6);
    const ImageBuffer c = crop(img, {double(x0), double(y0), double(x1), double(y1)}, static_cast<std::size_t>(pad));
    EXPECT_EQ(static_cast<long>(c.width()), std::min(20L, x1 + pad) - std::max(0L, x0 - pad));
    EXPECT_EQ(static_cast<long>(c.height()), std::min(15L, y1 + pad) - std::max(0L, y0 - pad));
  }
}

TEST(Crop, DegenerateBox) {
  try {
    crop(ImageBuffer(4, 4), {2, 2, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBox);
  }
}

TEST(Crop, StoreCropsWritesNamedFiles) {
  imaging::SceneSpec spec;
  spec.cubes.push_back({imaging::ColorCategory::Red, 100, 100, 60, std::nullopt});
  spec.cubes.push_back({imaging::ColorCategory::Red, 400, 400, 60, std::nullopt});
  const auto scene = imaging::synth_scene(spec);
  const auto blobs = detect_colored_objects(scene.image, default_ranges());
  const auto dir = std::filesystem::temp_directory_path() / "cubesort_crops_test";
  std::filesystem::remove_all(dir);
  const auto paths = store_crops(scene.image, blobs, dir.string(), 2);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(std::filesystem::path(paths[0]).filename(), "red0.ppm");
  EXPECT_EQ(std::filesystem::path(paths[1]).filename(), "red1.ppm");
  const ImageBuffer c = imaging::read_ppm_file(paths[0]);
  EXPECT_EQ(c.width(), 64u);
  std::filesystem::remove_all(dir);
}
