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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "dadf/metrics.hpp"
#include "dadf_verify/oracles.hpp"
#include "dadf_verify/verify.hpp"

// The per-precision suites are compiled twice, once into each inline
// precision namespace of the library; this file sees both sets.
namespace dadf::f32::checks {
verify::Report flow_roundtrip();
}
namespace dadf::f64::checks {
verify::Report flow_roundtrip();
verify::Report logdet();
verify::Report density();
verify::Report gradcheck_modules();
}  // namespace dadf::f64::checks

namespace dadf::verify {
namespace {

template <typename... Args>
std::string fmt(const char* format, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

void append(Report& into, Report more) {
  into.insert(into.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

constexpr std::size_t kSide = 8;

// One constructed evaluation set: a few 8x8 images with masks, maps and
// per-region saturation.
struct Instance {
  std::vector<std::vector<double>> maps;
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::vector<double>> saturation;
};

Instance make_instance(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> images(1, 3), coin(0, 3), level(0, 5), pos(0, kSide - 1),
      extent(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Instance inst;
  const int n = images(gen);
  const bool ties = seed % 2 == 0;
  for (int k = 0; k < n; ++k) {
    std::vector<std::uint8_t> mask(kSide * kSide, 0);
    // Rectangles and stray pixels; some touch only diagonally.
    const int shapes = coin(gen);
    for (int s = 0; s < shapes; ++s) {
      const int y = pos(gen), x = pos(gen), h = extent(gen), w = extent(gen);
      for (int yy = y; yy < std::min<int>(kSide, y + h); ++yy) {
        for (int xx = x; xx < std::min<int>(kSide, x + w); ++xx) mask[yy * kSide + xx] = 1;
      }
    }
    for (int s = coin(gen); s > 0; --s) mask[pos(gen) * kSide + pos(gen)] = 1;
    std::vector<double> map(kSide * kSide);
    for (std::size_t p = 0; p < map.size(); ++p) {
      const double base = ties ? static_cast<double>(level(gen)) : unit(gen);
      map[p] = base + (mask[p] ? (ties ? 1.0 : 0.4) : 0.0) * (coin(gen) > 0 ? 1 : 0);
    }
    inst.masks.push_back(std::move(mask));
    inst.maps.push_back(std::move(map));
  }
  // Guarantee both an anomalous region and normal pixels.
  inst.masks[0][0] = 1;
  inst.masks[0][kSide * kSide - 1] = 0;
  for (std::size_t k = 0; k < inst.masks.size(); ++k) {
    const auto regions = oracle::flood_fill_components(inst.masks[k], kSide, kSide);
    std::vector<double> sat;
    const int style = coin(gen);
    if (style == 1) sat = {0.25 + 0.75 * unit(gen)};
    if (style >= 2) {
      for (std::size_t r = 0; r < regions.size(); ++r) sat.push_back(0.1 + 0.9 * unit(gen));
    }
    inst.saturation.push_back(std::move(sat));
  }
  return inst;
}

Instance transformed(const Instance& inst, double (*f)(double)) {
  Instance out = inst;
  for (auto& map : out.maps) {
    for (double& v : map) v = f(v);
  }
  return out;
}

struct Values {
  double auroc = 0;
  double au_pro = 0;
  double spro = 0;
};

Values library_values(const Instance& inst, double fpr_limit) {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t k = 0; k < inst.maps.size(); ++k) {
    scores.insert(scores.end(), inst.maps[k].begin(), inst.maps[k].end());
    labels.insert(labels.end(), inst.masks[k].begin(), inst.masks[k].end());
  }
  metrics::ProOptions options;
  options.fpr_limit = fpr_limit;
  return {metrics::auroc(scores, labels), metrics::au_pro(inst.maps, inst.masks, kSide, kSide, options),
          metrics::spro(inst.maps, inst.masks, inst.saturation, kSide, kSide, options)};
}

}  // namespace

Report flow_roundtrip_suite() {
  Report report = f32::checks::flow_roundtrip();
  append(report, f64::checks::flow_roundtrip());
  return report;
}

Report logdet_suite() { return f64::checks::logdet(); }

Report density_suite() { return f64::checks::density(); }

Report gradcheck_suite() { return f64::checks::gradcheck_modules(); }

Report metric_oracle_suite() {
  constexpr std::size_t kInstances = 200;
  constexpr double kProTolerance = 1e-12;
  constexpr double kInvarianceTolerance = 1e-9;
  constexpr double kLimits[] = {0.3, 1.0, 0.05};
  std::size_t auroc_bad = 0, component_bad = 0, pro_bad = 0, sparse_bad = 0, invariance_bad = 0;
  double pro_err = 0, invariance_err = 0;
  for (std::size_t seed = 0; seed < kInstances; ++seed) {
    const Instance inst = make_instance(seed);
    const double limit = kLimits[seed % 3];

    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t k = 0; k < inst.maps.size(); ++k) {
      scores.insert(scores.end(), inst.maps[k].begin(), inst.maps[k].end());
      labels.insert(labels.end(), inst.masks[k].begin(), inst.masks[k].end());
      const auto lib = metrics::connected_components({inst.masks[k], kSide, kSide});
      if (lib != oracle::flood_fill_components(inst.masks[k], kSide, kSide)) ++component_bad;
    }
    const Values lib = library_values(inst, limit);
    if (lib.auroc != oracle::pairwise_auroc(scores, labels)) ++auroc_bad;

    const double pro = oracle::threshold_sweep_pro(inst.maps, inst.masks, {}, kSide, kSide, limit);
    const double spro =
        oracle::threshold_sweep_pro(inst.maps, inst.masks, inst.saturation, kSide, kSide, limit);
    const double err = std::max(std::abs(lib.au_pro - pro), std::abs(lib.spro - spro));
    pro_err = std::max(pro_err, err);
    if (err > kProTolerance) ++pro_bad;

    // Sparse threshold list: every third distinct score.
    std::vector<double> levels = scores;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<double> sparse;
    for (std::size_t i = seed % 3; i < levels.size(); i += 3) sparse.push_back(levels[i]);
    metrics::ProOptions options;
    options.fpr_limit = limit;
    options.thresholds = sparse;
    const double sparse_lib = metrics::spro(inst.maps, inst.masks, inst.saturation, kSide, kSide, options);
    const double sparse_ref =
        oracle::threshold_sweep_pro(inst.maps, inst.masks, inst.saturation, kSide, kSide, limit, sparse);
    if (std::abs(sparse_lib - sparse_ref) > kProTolerance) ++sparse_bad;
    pro_err = std::max(pro_err, std::abs(sparse_lib - sparse_ref));

    for (auto f : {+[](double v) { return 2 * v + 1; }, +[](double v) { return v * v * v; }}) {
      const Values moved = library_values(transformed(inst, f), limit);
      const double d = std::max({std::abs(moved.auroc - lib.auroc), std::abs(moved.au_pro - lib.au_pro),
                                 std::abs(moved.spro - lib.spro)});
      invariance_err = std::max(invariance_err, d);
      if (d > kInvarianceTolerance) ++invariance_bad;
    }
  }
  return {
      {"metrics/auroc_vs_pairwise", auroc_bad == 0,
       fmt("%zu of %zu instances differ (exact equality required)", auroc_bad, kInstances)},
      {"metrics/components_vs_flood_fill", component_bad == 0,
       fmt("%zu mismatching masks over %zu instances", component_bad, kInstances)},
      {"metrics/pro_vs_threshold_sweep", pro_bad == 0 && sparse_bad == 0,
       fmt("au_pro/spro max abs diff %.2e (tol %.0e); %zu dense and %zu sparse mismatches", pro_err,
           kProTolerance, pro_bad, sparse_bad)},
      {"metrics/monotone_invariance", invariance_bad == 0,
       fmt("max change under 2x+1 and x^3: %.2e (tol %.0e)", invariance_err, kInvarianceTolerance)},
  };
}

Report selftest() {
  Report report = flow_roundtrip_suite();
  append(report, logdet_suite());
  append(report, density_suite());
  append(report, gradcheck_suite());
  append(report, metric_oracle_suite());
  return report;
}

bool all_pass(const Report& report) {
  return std::all_of(report.begin(), report.end(), [](const CheckResult& c) { return c.pass; });
}

std::string format(const Report& report) {
  std::ostringstream out;
  for (const CheckResult& c : report) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
  }
  return out.str();
}

}  // namespace dadf::verify
