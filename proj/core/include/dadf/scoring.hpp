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

#pragma once

#include <span>
#include <string>
#include <vector>

#include "dadf/model.hpp"

DADF_NAMESPACE_BEGIN

/// Every mode scores "higher = more anomalous".
enum class ScoreMode {
  kLikelihood,   // per-location NLL up to a constant: |z|^2/2 - local logdet
  kLatentNorm,   // |z|^2
  kReconSelf,    // |phi_P - phi_S|^2
  kReconMemory,  // |phi_P - phi_M|^2
  kReconFused,   // w * self + (1 - w) * memory
};

std::string to_string(ScoreMode mode);
ScoreMode parse_score_mode(const std::string& text);

/// kMap interpolates each per-scale scalar map; kField interpolates the
/// underlying vector field and takes the squared norm afterwards.
enum class Interpolation { kMap, kField };

std::string to_string(Interpolation interpolation);
Interpolation parse_interpolation(const std::string& text);

struct ScoringOptions {
  ScoreMode mode = ScoreMode::kLikelihood;
  Interpolation interpolation = Interpolation::kMap;
  Real fuse_weight = Real(0.5);
  bool smoothing = true;
  Real sigma = Real(4);
};

/// Everything needed to produce any mode's map for one image.
struct ImageAnalysis {
  std::size_t out_height = 0;
  std::size_t out_width = 0;
  FeaturePyramid prior;
  Reconstruction reconstruction;
  std::vector<LocationStats> flow_stats;  // empty when the flow is untrained and skipped
  bool flow_trained = false;
};

struct AnomalyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Real> scores;                  // input resolution, row-major
  std::vector<std::vector<Real>> per_scale;  // upsampled per-scale terms; sum to `scores`
  Real image_score = 0;
  ScoreMode mode = ScoreMode::kLikelihood;
};

ImageAnalysis analyze(const Tensor& raw_image, const DadfModel& model);

/// Per-scale raw map at feature resolution (H_i * W_i values).
std::vector<Real> scale_map(const ImageAnalysis& analysis, std::size_t scale,
                            const ScoringOptions& options);

/// Per-scale term at input resolution. Under kField the interpolation acts on
/// the latent (or prior minus reconstruction) before the squared norm; the
/// local log-det map is always interpolated as a scalar field.
std::vector<Real> upsampled_scale_map(const ImageAnalysis& analysis, std::size_t scale,
                                      const ScoringOptions& options);

AnomalyMap anomaly_map(const ImageAnalysis& analysis, const ScoringOptions& options);
AnomalyMap anomaly_map(const Tensor& raw_image, const DadfModel& model,
                       const ScoringOptions& options);

/// Max of the (optionally Gaussian-smoothed) map.
Real image_score(const std::vector<Real>& map, std::size_t height, std::size_t width,
                 const ScoringOptions& options);

/// Bilinear resize with half-pixel centers and edge clamping.
std::vector<Real> bilinear_upsample(const std::vector<Real>& src, std::size_t height,
                                    std::size_t width, std::size_t out_height,
                                    std::size_t out_width);
/// Same for a row-major H x W x C field; returns out_height x out_width x C.
std::vector<Real> bilinear_upsample(std::span<const Real> src, std::size_t height, std::size_t width,
                                    std::size_t channels, std::size_t out_height,
                                    std::size_t out_width);
/// Separable Gaussian blur, radius ceil(3 sigma), edge clamping.
std::vector<Real> gaussian_smooth(const std::vector<Real>& src, std::size_t height,
                                  std::size_t width, Real sigma);

DADF_NAMESPACE_END
