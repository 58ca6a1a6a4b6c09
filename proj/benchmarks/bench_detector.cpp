#include <benchmark/benchmark.h>

#include "cubesort/detector/detector.hpp"
#include "cubesort/rng.hpp"

using namespace cubesort;

namespace {

void BM_Nms(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Xoshiro256ss rng(1);
  std::vector<BoundingBox> boxes;
  std::vector<double> scores;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0, 250), y = rng.uniform(0, 280);
    boxes.push_back({x, y, x + rng.uniform(10, 60), y + rng.uniform(10, 60)});
    scores.push_back(rng.uniform01());
  }
  for (auto _ : state) benchmark::DoNotOptimize(detect::nms(boxes, scores, 0.7));
}
BENCHMARK(BM_Nms)->Arg(64)->Arg(256)->Arg(1024);

imaging::Scene bench_scene() {
  imaging::SceneSpec spec;
  spec.seed = 3;
  imaging::CubeSpec c;
  c.side = 90;
  c.center_x = 200;
  c.center_y = 300;
  c.defect = imaging::DefectSpec{imaging::DefectKind::Hole, 0.4, 0};
  spec.cubes.push_back(c);
  return imaging::synth_scene(spec);
}

void BM_DetectFrame(benchmark::State& state) {
  const auto model = detect::DetectorModel::create(detect::default_anchor_scales(), 1);
  const auto img = imaging::rescale_half(bench_scene().image);
  for (auto _ : state) benchmark::DoNotOptimize(detect::detect(img, model));
}
BENCHMARK(BM_DetectFrame)->Unit(benchmark::kMillisecond);

void BM_TrainIteration(benchmark::State& state) {
  auto scene = bench_scene();
  auto a = scene.annotations[0];
  a.xmin /= 2;
  a.ymin /= 2;
  a.xmax /= 2;
  a.ymax /= 2;
  a.width /= 2;
  a.height /= 2;
  const std::vector<detect::TrainingSample> data{{imaging::rescale_half(scene.image), {a}}};
  detect::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.iters_per_epoch = 1;
  for (auto _ : state) benchmark::DoNotOptimize(detect::train(data, cfg));
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

}  // namespace
