#include <benchmark/benchmark.h>

#include "cubesort/colordetect.hpp"
#include "cubesort/imaging.hpp"
#include "cubesort/rng.hpp"

using namespace cubesort;

namespace {

void BM_BgrToHsv(benchmark::State& state) {
  Xoshiro256ss rng(1);
  std::vector<std::uint8_t> px(3 * 4096);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng.below(256));
  for (auto _ : state) {
    for (std::size_t i = 0; i < px.size(); i += 3) benchmark::DoNotOptimize(color::bgr_to_hsv(px[i], px[i + 1], px[i + 2]));
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_BgrToHsv);

imaging::ImageBuffer frame() {
  imaging::SceneSpec spec;
  spec.seed = 2;
  for (int i = 0; i < 4; ++i) {
    imaging::CubeSpec c;
    c.color = static_cast<imaging::ColorCategory>(i);
    c.side = 80;
    c.center_x = 120 + 200 * (i % 2);
    c.center_y = 150 + 250 * (i / 2);
    spec.cubes.push_back(c);
  }
  return imaging::synth_scene(spec).image;
}

void BM_DetectColoredObjects(benchmark::State& state) {
  const auto img = frame();
  const auto ranges = color::default_ranges();
  for (auto _ : state) benchmark::DoNotOptimize(color::detect_colored_objects(img, ranges));
}
BENCHMARK(BM_DetectColoredObjects)->Unit(benchmark::kMillisecond);

void BM_RescaleHalf(benchmark::State& state) {
  const auto img = frame();
  for (auto _ : state) benchmark::DoNotOptimize(imaging::rescale_half(img));
}
BENCHMARK(BM_RescaleHalf);

void BM_SynthScene(benchmark::State& state) {
  imaging::SceneSpec spec;
  imaging::CubeSpec c;
  c.side = 90;
  c.center_x = 270;
  c.center_y = 305;
  spec.cubes.push_back(c);
  for (auto _ : state) benchmark::DoNotOptimize(imaging::synth_scene(spec));
}
BENCHMARK(BM_SynthScene)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
