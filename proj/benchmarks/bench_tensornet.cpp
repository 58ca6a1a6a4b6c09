#include <benchmark/benchmark.h>

#include "cubesort/rng.hpp"
#include "cubesort/tensornet/layers.hpp"

using namespace cubesort;

namespace {

void BM_Conv3x3(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  Xoshiro256ss rng(1);
  auto layer = nn::ConvLayer::zeros(ch * 2, ch, 3, 1, 1);
  nn::he_uniform_init(layer.kernels, ch * 9, rng);
  nn::Tensor x({ch, side, side});
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_forward(x, layer));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ch * ch * 2 * side * side * 9));
}
BENCHMARK(BM_Conv3x3)->Args({3, 136})->Args({8, 68})->Args({16, 34});

void BM_ConvBackward(benchmark::State& state) {
  Xoshiro256ss rng(2);
  auto layer = nn::ConvLayer::zeros(16, 8, 3, 1, 1);
  nn::he_uniform_init(layer.kernels, 72, rng);
  nn::Tensor x({8, 68, 68});
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform(-1, 1));
  const nn::Tensor g({16, 68, 68}, 0.01f);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward(x, layer, g));
}
BENCHMARK(BM_ConvBackward);

void BM_Fc(benchmark::State& state) {
  Xoshiro256ss rng(3);
  nn::Tensor w({256, 512}), b({256}), x({512});
  nn::he_uniform_init(w, 512, rng);
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform01());
  for (auto _ : state) benchmark::DoNotOptimize(nn::fully_connected(x, w, b));
}
BENCHMARK(BM_Fc);

}  // namespace
