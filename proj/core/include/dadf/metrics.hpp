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

#include <cstdint>
#include <span>
#include <vector>

// Evaluation metrics. These are precision-independent and always work in
// double; they live outside the precision namespace.
namespace dadf::metrics {

/// Area under the ROC curve as the Mann-Whitney statistic (ties count 1/2).
/// Labels are 0/1; both classes must be present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// A binary mask over an image of `height` x `width` pixels, row-major.
struct MaskView {
  std::span<const std::uint8_t> pixels;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// 8-connected components of the nonzero pixels. Each region lists its
/// pixel indices in row-major order; regions are ordered by their first
/// pixel in row-major order.
std::vector<std::vector<std::size_t>> connected_components(const MaskView& mask);

struct ProOptions {
  double fpr_limit = 0.3;
  /// Empty: the exact curve over every distinct score. Otherwise only these
  /// thresholds (plus the two trivial end points) are evaluated.
  std::vector<double> thresholds;
};

/// Normalized area under the per-region-overlap vs false-positive-rate
/// curve, integrated by trapezoid up to fpr_limit and divided by it.
/// maps[k] and masks[k] belong to image k and have equal size.
double au_pro(std::span<const std::vector<double>> maps,
              std::span<const std::vector<std::uint8_t>> masks, std::size_t height,
              std::size_t width, const ProOptions& options = {});

/// Saturated PRO: each region's overlap is divided by its saturation
/// fraction and clipped at 1. saturation[k] is empty (all 1), a single
/// value for every region of image k, or one value per region of image k.
double spro(std::span<const std::vector<double>> maps,
            std::span<const std::vector<std::uint8_t>> masks,
            std::span<const std::vector<double>> saturation, std::size_t height,
            std::size_t width, const ProOptions& options = {});

}  // namespace dadf::metrics
