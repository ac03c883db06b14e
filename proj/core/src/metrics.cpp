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

#include "dadf/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dadf/errors.hpp"

namespace dadf::metrics {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auroc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positives = 0, rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Average 1-based rank of the tie group [i, j).
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 1) throw ContractError("auroc: labels must be 0 or 1");
      if (labels[order[k]] == 1) {
        positives += 1;
        rank_sum += rank;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0 || negatives == 0) throw ContractError("auroc needs both classes present");
  return (rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
}

std::vector<std::vector<std::size_t>> connected_components(const MaskView& mask) {
  const std::size_t h = mask.height, w = mask.width;
  if (mask.pixels.size() != h * w) throw ShapeError("connected_components: mask size mismatch");
  // Two-pass union-find labeling.
  std::vector<std::size_t> parent(h * w);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      if (!mask.pixels[p]) continue;
      if (x > 0 && mask.pixels[p - 1]) unite(p, p - 1);
      if (y > 0) {
        const std::size_t up = p - w;
        if (mask.pixels[up]) unite(p, up);
        if (x > 0 && mask.pixels[up - 1]) unite(p, up - 1);
        if (x + 1 < w && mask.pixels[up + 1]) unite(p, up + 1);
      }
    }
  }
  std::vector<std::vector<std::size_t>> regions;
  std::vector<std::size_t> label_of(h * w, SIZE_MAX);
  for (std::size_t p = 0; p < h * w; ++p) {
    if (!mask.pixels[p]) continue;
    const std::size_t root = find(p);
    if (label_of[root] == SIZE_MAX) {
      label_of[root] = regions.size();
      regions.emplace_back();
    }
    regions[label_of[root]].push_back(p);
  }
  return regions;
}

namespace {

struct CurvePoint {
  double fpr;
  double pro;
};

double integrate(const std::vector<CurvePoint>& curve, double limit) {
  double area = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const CurvePoint a = curve[i - 1], b = curve[i];
    if (a.fpr >= limit) break;
    if (b.fpr <= limit) {
      area += 0.5 * (a.pro + b.pro) * (b.fpr - a.fpr);
    } else {
      const double t = (limit - a.fpr) / (b.fpr - a.fpr);
      const double pro_at_limit = a.pro + t * (b.pro - a.pro);
      area += 0.5 * (a.pro + pro_at_limit) * (limit - a.fpr);
      break;
    }
  }
  return area / limit;
}

double saturated_pro(std::span<const std::vector<double>> maps,
                     std::span<const std::vector<std::uint8_t>> masks,
                     std::span<const std::vector<double>> saturation, std::size_t height,
                     std::size_t width, const ProOptions& options) {
  if (maps.size() != masks.size()) throw ShapeError("PRO: maps and masks differ in count");
  if (!(options.fpr_limit > 0 && options.fpr_limit <= 1)) {
    throw ContractError("PRO: fpr_limit must lie in (0, 1]");
  }
  const std::size_t n_pixels = height * width;
  // Pixel -> region id (SIZE_MAX for normal pixels), per image offset.
  std::vector<double> scores;
  std::vector<std::size_t> region_of;
  std::vector<double> region_size;
  std::vector<double> region_saturation;
  scores.reserve(maps.size() * n_pixels);
  region_of.reserve(maps.size() * n_pixels);
  double normal_pixels = 0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (maps[k].size() != n_pixels || masks[k].size() != n_pixels) {
      throw ShapeError("PRO: image " + std::to_string(k) + " has the wrong pixel count");
    }
    const auto regions = connected_components({masks[k], height, width});
    const std::vector<double> sat = k < saturation.size() ? saturation[k] : std::vector<double>{};
    if (sat.size() > 1 && sat.size() != regions.size()) {
      throw ContractError("sPRO: image " + std::to_string(k) + " has " +
                          std::to_string(regions.size()) + " regions but " +
                          std::to_string(sat.size()) + " saturation values");
    }
    std::vector<std::size_t> local(n_pixels, SIZE_MAX);
    for (std::size_t r = 0; r < regions.size(); ++r) {
      const double s = sat.empty() ? 1.0 : (sat.size() == 1 ? sat[0] : sat[r]);
      if (!(s > 0 && s <= 1)) throw ContractError("sPRO: saturation must lie in (0, 1]");
      for (std::size_t p : regions[r]) local[p] = region_size.size();
      region_size.push_back(static_cast<double>(regions[r].size()));
      region_saturation.push_back(s);
    }
    for (std::size_t p = 0; p < n_pixels; ++p) {
      scores.push_back(maps[k][p]);
      region_of.push_back(local[p]);
      if (local[p] == SIZE_MAX) normal_pixels += 1;
    }
  }
  if (region_size.empty()) throw ContractError("PRO: no anomalous region in any mask");
  if (normal_pixels == 0) throw ContractError("PRO: no normal pixels to measure false positives");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<double> thresholds = options.thresholds;
  const bool exact = thresholds.empty();
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());

  const double n_regions = static_cast<double>(region_size.size());
  std::vector<double> hits(region_size.size(), 0.0);
  double false_positives = 0, pro_sum = 0;
  std::vector<CurvePoint> curve{{0.0, 0.0}};
  std::size_t next_threshold = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double level = scores[order[i]];
    if (!exact) {
      // Emit sparse thresholds lying above this tie group.
      while (next_threshold < thresholds.size() && thresholds[next_threshold] > level) {
        curve.push_back({false_positives / normal_pixels, pro_sum / n_regions});
        ++next_threshold;
      }
    }
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == level) {
      const std::size_t r = region_of[order[j]];
      if (r == SIZE_MAX) {
        false_positives += 1;
      } else {
        const double before = std::min(1.0, hits[r] / region_size[r] / region_saturation[r]);
        hits[r] += 1;
        pro_sum += std::min(1.0, hits[r] / region_size[r] / region_saturation[r]) - before;
      }
      ++j;
    }
    if (exact) curve.push_back({false_positives / normal_pixels, pro_sum / n_regions});
    i = j;
  }
  for (; !exact && next_threshold < thresholds.size(); ++next_threshold) {
    curve.push_back({false_positives / normal_pixels, pro_sum / n_regions});
  }
  curve.push_back({1.0, 1.0});
  return integrate(curve, options.fpr_limit);
}

}  // namespace

double au_pro(std::span<const std::vector<double>> maps,
              std::span<const std::vector<std::uint8_t>> masks, std::size_t height,
              std::size_t width, const ProOptions& options) {
  return saturated_pro(maps, masks, {}, height, width, options);
}

double spro(std::span<const std::vector<double>> maps,
            std::span<const std::vector<std::uint8_t>> masks,
            std::span<const std::vector<double>> saturation, std::size_t height,
            std::size_t width, const ProOptions& options) {
  return saturated_pro(maps, masks, saturation, height, width, options);
}

}  // namespace dadf::metrics
