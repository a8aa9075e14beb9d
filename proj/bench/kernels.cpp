#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "easz/image.hpp"
#include "easz/mask.hpp"
#include "easz/metrics.hpp"
#include "easz/model.hpp"
#include "easz/squeeze.hpp"
#include "easz/synthetic.hpp"

using namespace easz;

namespace {

Image noisy(const Image& img, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image out = img;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng() % 9) - 4, 0, 255));
  return out;
}

const Image& scene() {
  static const Image img = synthetic_scene(512, 512, 3, 1);
  return img;
}

const EraseMask& mask8() {
  static const EraseMask m = generate_row_mask({8, 8, 2, 1, 1, 3});
  return m;
}

template <auto Fn>
void BM_Squeeze(benchmark::State& state) {
  const PatchGrid grid = patchify(scene(), 32, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(grid, std::span(&mask8(), 1)));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * scene().pixels.size()));
}

template <auto Fn>
void BM_Unsqueeze(benchmark::State& state) {
  const auto sq = squeeze(patchify(scene(), 32, 4), std::span(&mask8(), 1));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(sq, std::span(&mask8(), 1), 0));
}

template <auto Fn>
void BM_Mse(benchmark::State& state) {
  const Image b = noisy(scene(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(scene(), b));
}

template <auto Fn>
void BM_Ssim(benchmark::State& state) {
  const Image b = noisy(scene(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(scene(), b, SsimOptions{}));
}

template <auto Fn>
void BM_Reconstruct(benchmark::State& state) {
  ModelConfig cfg;
  cfg.subpatch_size = 4;
  cfg.grid_side = 8;
  cfg.d_model = 32;
  cfg.heads = 2;
  const Reconstructor model(ModelParams::initialize(cfg, 1));
  const PatchGrid grid = patchify(synthetic_scene(128, 128, 1, 2), 32, 4);
  for (auto _ : state) {
    PatchGrid g = grid;
    Fn(model, g, std::span(&mask8(), 1));
    benchmark::DoNotOptimize(g.patches.data());
  }
}

}  // namespace

BENCHMARK(BM_Squeeze<ref::squeeze>)->Name("squeeze/serial");
BENCHMARK(BM_Squeeze<squeeze>)->Name("squeeze/openmp");
BENCHMARK(BM_Unsqueeze<ref::unsqueeze_patches>)->Name("unsqueeze/serial");
BENCHMARK(BM_Unsqueeze<unsqueeze_patches>)->Name("unsqueeze/openmp");
BENCHMARK(BM_Mse<ref::mse>)->Name("mse/serial");
BENCHMARK(BM_Mse<mse>)->Name("mse/openmp");
BENCHMARK(BM_Ssim<ref::ssim>)->Name("ssim/serial");
BENCHMARK(BM_Ssim<ssim>)->Name("ssim/openmp");
BENCHMARK(BM_Reconstruct<ref::reconstruct_grid>)->Name("reconstruct_grid/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reconstruct<reconstruct_grid>)->Name("reconstruct_grid/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
