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

#include "dadf_verify/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace dadf::verify::oracle {

double pairwise_auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  if (pairs == 0) throw std::invalid_argument("pairwise_auroc: need both classes");
  return wins / pairs;
}

std::vector<std::vector<std::size_t>> flood_fill_components(std::span<const std::uint8_t> mask,
                                                            std::size_t height, std::size_t width) {
  std::vector<bool> seen(mask.size(), false);
  std::vector<std::vector<std::size_t>> regions;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    std::vector<std::size_t> region;
    std::deque<std::size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      region.push_back(p);
      const auto y = static_cast<long>(p / width), x = static_cast<long>(p % width);
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<long>(height) || nx >= static_cast<long>(width)) {
            continue;
          }
          const auto q = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
          if (mask[q] && !seen[q]) {
            seen[q] = true;
            queue.push_back(q);
          }
        }
      }
    }
    std::sort(region.begin(), region.end());
    regions.push_back(std::move(region));
  }
  return regions;
}

double threshold_sweep_pro(const std::vector<std::vector<double>>& maps,
                           const std::vector<std::vector<std::uint8_t>>& masks,
                           const std::vector<std::vector<double>>& saturation, std::size_t height,
                           std::size_t width, double fpr_limit,
                           const std::vector<double>& thresholds) {
  struct Region {
    std::size_t image;
    std::vector<std::size_t> pixels;
    double saturation;
  };
  std::vector<Region> regions;
  std::set<double> levels;
  double normal_pixels = 0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto found = flood_fill_components(masks[k], height, width);
    for (std::size_t r = 0; r < found.size(); ++r) {
      double s = 1;
      if (k < saturation.size() && saturation[k].size() == 1) s = saturation[k][0];
      if (k < saturation.size() && saturation[k].size() > 1) s = saturation[k][r];
      regions.push_back({k, found[r], s});
    }
    for (std::size_t p = 0; p < maps[k].size(); ++p) {
      levels.insert(maps[k][p]);
      if (!masks[k][p]) normal_pixels += 1;
    }
  }
  if (!thresholds.empty()) levels = std::set<double>(thresholds.begin(), thresholds.end());

  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    const double t = *it;
    double false_positives = 0;
    for (std::size_t k = 0; k < maps.size(); ++k) {
      for (std::size_t p = 0; p < maps[k].size(); ++p) {
        if (!masks[k][p] && maps[k][p] >= t) false_positives += 1;
      }
    }
    double overlap = 0;
    for (const Region& r : regions) {
      double hit = 0;
      for (std::size_t p : r.pixels) hit += maps[r.image][p] >= t ? 1 : 0;
      overlap += std::min(1.0, hit / static_cast<double>(r.pixels.size()) / r.saturation);
    }
    curve.emplace_back(false_positives / normal_pixels, overlap / static_cast<double>(regions.size()));
  }
  curve.emplace_back(1.0, 1.0);

  double area = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto [xa, ya] = curve[i - 1];
    const auto [xb, yb] = curve[i];
    const double lo = std::min(xa, fpr_limit), hi = std::min(xb, fpr_limit);
    if (hi <= lo) continue;
    auto at = [&](double x) { return xb == xa ? ya : ya + (yb - ya) * (x - xa) / (xb - xa); };
    area += 0.5 * (at(lo) + at(hi)) * (hi - lo);
  }
  return area / fpr_limit;
}

double jacobian_logabsdet(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                          const std::vector<double>& x, double step) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd jac(n, n);
  std::vector<double> probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    probe[j] = x[j] + step;
    const std::vector<double> up = f(probe);
    probe[j] = x[j] - step;
    const std::vector<double> down = f(probe);
    probe[j] = x[j];
    if (static_cast<Eigen::Index>(up.size()) != n) throw std::invalid_argument("Jacobian must be square");
    for (Eigen::Index i = 0; i < n; ++i) jac(i, j) = (up[i] - down[i]) / (2 * step);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  const Eigen::MatrixXd& packed = lu.matrixLU();
  double logdet = 0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(std::abs(packed(i, i)));
  return logdet;
}

double grid_integral(const std::function<double(double, double)>& f, double x0, double x1,
                     double y0, double y1, std::size_t n) {
  const double hx = (x1 - x0) / static_cast<double>(n), hy = (y1 - y0) / static_cast<double>(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      total += f(x0 + (static_cast<double>(i) + 0.5) * hx, y0 + (static_cast<double>(j) + 0.5) * hy);
    }
  }
  return total * hx * hy;
}

}  // namespace dadf::verify::oracle
