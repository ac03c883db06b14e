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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Reference implementations that deliberately share no code with the
// library: direct definitions evaluated the slow way, in double.
namespace dadf::verify::oracle {

/// Fraction of (positive, negative) pairs ordered correctly, ties 1/2.
double pairwise_auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// 8-connected regions by breadth-first flood fill. Each region is sorted;
/// regions are ordered by their smallest pixel index.
std::vector<std::vector<std::size_t>> flood_fill_components(std::span<const std::uint8_t> mask,
                                                            std::size_t height, std::size_t width);

/// (Saturated) PRO area by rebuilding the curve from scratch at every
/// threshold. A pixel is flagged at threshold t when its score is >= t.
/// `thresholds` empty means every distinct score; the curve always gets the
/// (0, 0) and (1, 1) end points. `saturation` follows the library contract.
double threshold_sweep_pro(const std::vector<std::vector<double>>& maps,
                           const std::vector<std::vector<std::uint8_t>>& masks,
                           const std::vector<std::vector<double>>& saturation, std::size_t height,
                           std::size_t width, double fpr_limit,
                           const std::vector<double>& thresholds = {});

/// log|det J| of f at x, J assembled column by column from central
/// differences and factorized by partial-pivot LU.
double jacobian_logabsdet(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                          const std::vector<double>& x, double step);

/// Composite midpoint rule over [x0, x1] x [y0, y1] with n cells per axis.
double grid_integral(const std::function<double(double, double)>& f, double x0, double x1,
                     double y0, double y1, std::size_t n);

}  // namespace dadf::verify::oracle
