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

#include <cmath>
#include <random>

#include "doctest.h"
#include "dadf/metrics.hpp"
#include "dadf/scoring.hpp"
#include "dadf_verify/oracles.hpp"

using namespace dadf;

namespace {

// Two-scale analysis on a 16x16 input with identity flows.
ImageAnalysis synthetic_analysis(Rng& rng) {
  ImageAnalysis a;
  a.out_height = a.out_width = 16;
  a.prior.maps = {rng.normal_tensor({4, 4, 3}, 1), rng.normal_tensor({2, 2, 5}, 1)};
  a.reconstruction.self_rec.maps = {rng.normal_tensor({4, 4, 3}, 1), rng.normal_tensor({2, 2, 5}, 1)};
  a.reconstruction.memory_rec.maps = {rng.normal_tensor({4, 4, 3}, 1), rng.normal_tensor({2, 2, 5}, 1)};
  for (const Tensor& m : a.prior.maps) {
    a.flow_stats.push_back(per_location_stats(m, FlowStack(m.dim(2), FlowConfig{}, 1)));
  }
  return a;
}

std::vector<std::uint8_t> mask_from(const std::vector<int>& pixels, std::size_t side) {
  std::vector<std::uint8_t> m(side * side, 0);
  for (int p : pixels) m[static_cast<std::size_t>(p)] = 1;
  return m;
}

}  // namespace

TEST_CASE("recon_self with a perfect reconstruction is a zero map") {
  Rng rng(1);
  ImageAnalysis a = synthetic_analysis(rng);
  a.reconstruction.self_rec = a.prior;
  ScoringOptions options;
  options.mode = ScoreMode::kReconSelf;
  const AnomalyMap m = anomaly_map(a, options);
  for (Real v : m.scores) CHECK(v == 0);
  CHECK(m.image_score == 0);
}

TEST_CASE("latent_norm of identity flows is the upsampled input energy") {
  Rng rng(2);
  const ImageAnalysis a = synthetic_analysis(rng);
  ScoringOptions options;
  options.mode = ScoreMode::kLatentNorm;
  const AnomalyMap m = anomaly_map(a, options);
  for (std::size_t i = 0; i < 2; ++i) {
    const Tensor& u = a.prior.maps[i];
    std::vector<Real> energy(u.dim(0) * u.dim(1), 0);
    for (std::size_t p = 0; p < energy.size(); ++p) {
      for (std::size_t c = 0; c < u.dim(2); ++c) energy[p] += u.data()[p * u.dim(2) + c] * u.data()[p * u.dim(2) + c];
    }
    const auto up = bilinear_upsample(energy, u.dim(0), u.dim(1), 16, 16);
    for (std::size_t p = 0; p < up.size(); ++p) CHECK(m.per_scale[i][p] == doctest::Approx(up[p]).epsilon(1e-5));
  }
}

TEST_CASE("per-scale terms sum to the map in every mode") {
  Rng rng(3);
  ImageAnalysis a = synthetic_analysis(rng);
  a.flow_trained = true;
  for (auto mode : {ScoreMode::kLikelihood, ScoreMode::kLatentNorm, ScoreMode::kReconSelf,
                    ScoreMode::kReconMemory, ScoreMode::kReconFused}) {
    for (auto interp : {Interpolation::kMap, Interpolation::kField}) {
      ScoringOptions options;
      options.mode = mode;
      options.interpolation = interp;
      const AnomalyMap m = anomaly_map(a, options);
      REQUIRE(m.scores.size() == 256);
      for (std::size_t p = 0; p < 256; ++p) {
        CHECK(std::abs(m.per_scale[0][p] + m.per_scale[1][p] - m.scores[p]) < 1e-5);
      }
    }
  }
}

TEST_CASE("fused map is the weighted branch sum") {
  Rng rng(4);
  const ImageAnalysis a = synthetic_analysis(rng);
  ScoringOptions self, mem, fused;
  self.mode = ScoreMode::kReconSelf;
  mem.mode = ScoreMode::kReconMemory;
  fused.mode = ScoreMode::kReconFused;
  fused.fuse_weight = Real(0.3);
  const auto s = anomaly_map(a, self).scores, m = anomaly_map(a, mem).scores, f = anomaly_map(a, fused).scores;
  for (std::size_t p = 0; p < f.size(); ++p) CHECK(f[p] == doctest::Approx(0.3 * s[p] + 0.7 * m[p]).epsilon(1e-5));
}

TEST_CASE("likelihood mode needs a trained flow") {
  Rng rng(5);
  const ImageAnalysis a = synthetic_analysis(rng);
  CHECK_THROWS_AS(anomaly_map(a, ScoringOptions{}), ContractError);
}

TEST_CASE("resampling helpers") {
  const std::vector<Real> flat(16, Real(2.5));
  for (Real v : bilinear_upsample(flat, 4, 4, 16, 16)) CHECK(v == doctest::Approx(2.5));
  for (Real v : gaussian_smooth(flat, 4, 4, 4)) CHECK(v == doctest::Approx(2.5));
  std::vector<Real> spike(25, 0);
  spike[12] = 1;
  ScoringOptions raw;
  raw.smoothing = false;
  CHECK(image_score(spike, 5, 5, raw) == 1);
  CHECK(image_score(spike, 5, 5, ScoringOptions{}) < 1);
}

TEST_CASE("auroc") {
  const std::vector<double> a{0.9, 0.1};
  CHECK(metrics::auroc(a, std::vector<std::uint8_t>{1, 0}) == 1.0);
  const std::vector<double> ties(6, 0.3);
  CHECK(metrics::auroc(ties, std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1}) == 0.5);
  const std::vector<double> s{0.8, 0.4, 0.6, 0.2};
  const std::vector<std::uint8_t> l{1, 0, 0, 1};
  CHECK(metrics::auroc(s, l) == 0.5);
  CHECK(metrics::auroc(s, l) == verify::oracle::pairwise_auroc(s, l));
  CHECK_THROWS_AS(metrics::auroc(a, std::vector<std::uint8_t>{1, 1}), std::exception);

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> r(50);
  std::vector<std::uint8_t> y(50), flipped(50);
  for (std::size_t i = 0; i < 50; ++i) {
    r[i] = std::round(u(gen) * 10) / 10;
    y[i] = i % 3 == 0;
    flipped[i] = 1 - y[i];
  }
  CHECK(std::abs(metrics::auroc(r, y) + metrics::auroc(r, flipped) - 1) < 1e-9);
}

TEST_CASE("au_pro") {
  constexpr std::size_t kSide = 8;
  SUBCASE("perfect map") {
    const auto mask = mask_from({9, 10, 17, 18, 40}, kSide);
    const std::vector<std::vector<double>> maps{{mask.begin(), mask.end()}};
    CHECK(metrics::au_pro(maps, std::vector<std::vector<std::uint8_t>>{mask}, kSide, kSide) == doctest::Approx(1.0));
  }
  SUBCASE("constant map matches the exhaustive sweep") {
    const auto mask = mask_from({0, 1, 8, 9, 63}, kSide);
    const std::vector<std::vector<double>> maps{std::vector<double>(64, 0.5)};
    const std::vector<std::vector<std::uint8_t>> masks{mask};
    CHECK(metrics::au_pro(maps, masks, kSide, kSide) ==
          doctest::Approx(verify::oracle::threshold_sweep_pro(maps, masks, {}, kSide, kSide, 0.3)).epsilon(1e-12));
  }
  SUBCASE("one region found and one missed plateaus at one half") {
    // Region A scores 1, region B 0, the background spreads over (0.1, 0.9),
    // so B stays undetected until the false-positive rate reaches 1.
    const auto mask = mask_from({0, 1, 8, 9, 54, 55, 62, 63}, kSide);
    std::vector<double> map(64);
    for (std::size_t p = 0; p < 64; ++p) map[p] = mask[p] ? 0.0 : 0.1 + 0.8 * static_cast<double>(p) / 64;
    for (int p : {0, 1, 8, 9}) map[static_cast<std::size_t>(p)] = 1.0;
    const std::vector<std::vector<double>> maps{map};
    const std::vector<std::vector<std::uint8_t>> masks{mask};
    CHECK(metrics::au_pro(maps, masks, kSide, kSide) == doctest::Approx(0.5));
  }
  SUBCASE("no anomalous pixels is a contract error") {
    const std::vector<std::vector<double>> maps{std::vector<double>(64, 0.0)};
    const std::vector<std::vector<std::uint8_t>> masks{std::vector<std::uint8_t>(64, 0)};
    CHECK_THROWS(metrics::au_pro(maps, masks, kSide, kSide));
  }
}

TEST_CASE("spro") {
  constexpr std::size_t kSide = 8;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 1);
  const auto mask = mask_from({0, 1, 2, 3, 27, 28, 35, 36, 60}, kSide);
  std::vector<double> map(64);
  for (double& v : map) v = u(gen);
  const std::vector<std::vector<double>> maps{map};
  const std::vector<std::vector<std::uint8_t>> masks{mask};
  CHECK(metrics::spro(maps, masks, {}, kSide, kSide) == doctest::Approx(metrics::au_pro(maps, masks, kSide, kSide)));

  // Half of a region with saturation 0.5 is full credit.
  std::vector<double> half(64, 0.0);
  for (int p : {0, 1}) half[static_cast<std::size_t>(p)] = 1.0;
  const auto one = mask_from({0, 1, 2, 3}, kSide);
  const std::vector<std::vector<double>> hm{half};
  const std::vector<std::vector<std::uint8_t>> om{one};
  const std::vector<std::vector<double>> sat{{0.5}};
  CHECK(metrics::spro(hm, om, sat, kSide, kSide) == doctest::Approx(1.0));

  const std::vector<std::vector<double>> mixed{{0.3, 0.8, 1.0}};
  CHECK(metrics::spro(maps, masks, mixed, kSide, kSide) ==
        doctest::Approx(verify::oracle::threshold_sweep_pro(maps, masks, mixed, kSide, kSide, 0.3)).epsilon(1e-12));
}

TEST_CASE("connected components") {
  const std::vector<std::uint8_t> empty(16, 0);
  CHECK(metrics::connected_components({empty, 4, 4}).empty());
  const auto diagonal = mask_from({0, 5}, 4);
  CHECK(metrics::connected_components({diagonal, 4, 4}).size() == 1);

  std::mt19937_64 gen(13);
  std::bernoulli_distribution on(0.35);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> mask(256);
    for (auto& m : mask) m = on(gen);
    CHECK(metrics::connected_components({mask, 16, 16}) == verify::oracle::flood_fill_components(mask, 16, 16));
  }
}
