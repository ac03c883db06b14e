// Copyright 2026 The DADF Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "dadf/metrics.hpp"
#include "dadf/model.hpp"
#include "dadf/ops.hpp"
#include "dadf/scoring.hpp"
#include "dadf/synthetic.hpp"

using namespace dadf;

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = rng.normal_tensor({n, n}, 1), b = rng.normal_tensor({n, n}, 1);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

// Forward pass of the default model from raw image to reconstructions.
void BM_Reconstruct(benchmark::State& state) {
  const DadfModel model(ModelConfig{});
  Rng rng(2);
  const Tensor image = to_tensor(render_normal(DatasetSpec{}, rng));
  NoGradGuard guard;
  const FeaturePyramid prior = model.prior(image);
  for (auto _ : state) benchmark::DoNotOptimize(model.net().reconstruct(prior));
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMillisecond);

void BM_FlowForward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const FlowStack stack(channels, FlowConfig{}, 3);
  Rng rng(3);
  const Tensor u = rng.normal_tensor({16, 16, channels}, 1);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(stack.forward(u));
}
BENCHMARK(BM_FlowForward)->Arg(48)->Arg(192)->Unit(benchmark::kMillisecond);

void BM_AnomalyMap(benchmark::State& state) {
  DadfModel model(ModelConfig{});
  Rng rng(4);
  const Tensor image = to_tensor(render_normal(DatasetSpec{}, rng));
  ImageAnalysis analysis = analyze(image, model);
  analysis.flow_trained = true;
  ScoringOptions options;
  options.interpolation = state.range(0) == 0 ? Interpolation::kMap : Interpolation::kField;
  for (auto _ : state) benchmark::DoNotOptimize(anomaly_map(analysis, options));
}
BENCHMARK(BM_AnomalyMap)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

std::vector<std::vector<double>> random_maps(std::size_t n, std::size_t side, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> maps(n, std::vector<double>(side * side));
  for (auto& m : maps) {
    for (double& v : m) v = u(gen);
  }
  return maps;
}

// Square defects in the middle of each mask.
std::vector<std::vector<std::uint8_t>> square_masks(std::size_t n, std::size_t side) {
  std::vector<std::vector<std::uint8_t>> masks(n, std::vector<std::uint8_t>(side * side, 0));
  for (auto& m : masks) {
    for (std::size_t y = side / 4; y < side / 2; ++y) {
      for (std::size_t x = side / 4; x < side / 2; ++x) m[y * side + x] = 1;
    }
  }
  return masks;
}

void BM_PixelAuroc(benchmark::State& state) {
  std::mt19937_64 gen(5);
  const auto maps = random_maps(100, 64, gen);
  const auto masks = square_masks(100, 64);
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    scores.insert(scores.end(), maps[k].begin(), maps[k].end());
    labels.insert(labels.end(), masks[k].begin(), masks[k].end());
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auroc(scores, labels));
}
BENCHMARK(BM_PixelAuroc)->Unit(benchmark::kMillisecond);

void BM_AuPro(benchmark::State& state) {
  std::mt19937_64 gen(6);
  const auto maps = random_maps(60, 64, gen);
  const auto masks = square_masks(60, 64);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::au_pro(maps, masks, 64, 64));
}
BENCHMARK(BM_AuPro)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
