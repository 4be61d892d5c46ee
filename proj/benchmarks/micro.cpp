// Microbenchmarks for the hot paths: detector forward/backward, the 5x5
// median filter, and one I-FGSM grid attack on an untrained model.

#include <benchmark/benchmark.h>

#include "cfbench/attack.hpp"
#include "cfbench/autograd.hpp"
#include "cfbench/detector.hpp"
#include "cfbench/image.hpp"
#include "cfbench/rng.hpp"

using namespace cfb;

namespace {

GrayImage random_patch(int extent, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  GrayImage img(extent, extent);
  for (auto& p : img.pixels) p = static_cast<float>(uniform01(g));
  return quantize8(img);
}

void bm_forward(benchmark::State& state, Family fam) {
  DetectorModel model = DetectorModel::build(ArchitectureSpec::for_family(fam), 7);
  const Tensor x = random_patch(32, 11).to_tensor();
  for (auto _ : state) {
    auto z = model.logits(x);
    benchmark::DoNotOptimize(z);
  }
}

void bm_backward(benchmark::State& state, Family fam) {
  DetectorModel model = DetectorModel::build(ArchitectureSpec::for_family(fam), 7);
  const Tensor x = random_patch(32, 11).to_tensor();
  Tensor grad;
  for (auto _ : state) {
    float m = model.margin_with_grad(x, 1, grad);
    benchmark::DoNotOptimize(m);
  }
}

void bm_median5(benchmark::State& state) {
  const GrayImage img = random_patch(static_cast<int>(state.range(0)), 13);
  for (auto _ : state) {
    GrayImage out = median_filter(img, 5);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}

void bm_ifgsm(benchmark::State& state) {
  DetectorModel model = DetectorModel::build(ArchitectureSpec::for_family(Family::BS_like), 7);
  const GrayImage patch = random_patch(32, 17);
  AttackConfig cfg;
  cfg.c = 0.5f;
  for (auto _ : state) {
    AttackResult r = ifgsm(model, patch, 1, cfg);
    benchmark::DoNotOptimize(r.success);
  }
}

}  // namespace

BENCHMARK_CAPTURE(bm_forward, bs_like, Family::BS_like);
BENCHMARK_CAPTURE(bm_forward, bcplus_like, Family::BCplus_like);
BENCHMARK_CAPTURE(bm_forward, vgg_like, Family::VGG_like);
BENCHMARK_CAPTURE(bm_backward, bs_like, Family::BS_like);
BENCHMARK_CAPTURE(bm_backward, vgg_like, Family::VGG_like);
BENCHMARK(bm_median5)->Arg(32)->Arg(320);
BENCHMARK(bm_ifgsm);

BENCHMARK_MAIN();
