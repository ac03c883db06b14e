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

#include "dadf/evaluate.hpp"

#include <algorithm>
#include "json.hpp"

DADF_NAMESPACE_BEGIN

namespace {

struct ScoredSet {
  std::vector<double> image_scores;
  std::vector<std::vector<double>> maps;
};

MetricSet metrics_of(const ScoredSet& set, std::span<const Sample> test, std::size_t height,
                     std::size_t width, const metrics::ProOptions& pro) {
  std::vector<std::uint8_t> labels;
  std::vector<double> pixel_scores;
  std::vector<std::uint8_t> pixel_labels;
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::vector<double>> saturation;
  for (std::size_t k = 0; k < test.size(); ++k) {
    labels.push_back(test[k].label);
    pixel_scores.insert(pixel_scores.end(), set.maps[k].begin(), set.maps[k].end());
    pixel_labels.insert(pixel_labels.end(), test[k].mask.begin(), test[k].mask.end());
    masks.push_back(test[k].mask);
    saturation.push_back({test[k].saturation});
  }
  MetricSet out;
  out.image_auroc = metrics::auroc(set.image_scores, labels);
  out.pixel_auroc = metrics::auroc(pixel_scores, pixel_labels);
  out.au_pro = metrics::au_pro(set.maps, masks, height, width, pro);
  out.spro = metrics::spro(set.maps, masks, saturation, height, width, pro);
  return out;
}

std::vector<double> to_double(const std::vector<Real>& v) { return {v.begin(), v.end()}; }

nlohmann::ordered_json metrics_json(const MetricSet& m) {
  nlohmann::ordered_json j;
  j["image_auroc"] = m.image_auroc;
  j["pixel_auroc"] = m.pixel_auroc;
  j["au_pro"] = m.au_pro;
  j["spro"] = m.spro;
  return j;
}

}  // namespace

std::vector<ImageAnalysis> analyze_all(const DadfModel& model, std::span<const Sample> samples) {
  std::vector<ImageAnalysis> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(analyze(s.image, model));
  return out;
}

EvalReport evaluate(std::span<const ImageAnalysis> analyses, std::span<const Sample> test,
                    const EvalOptions& options) {
  if (analyses.size() != test.size()) throw ShapeError("evaluate: one analysis per sample required");
  const bool has_normal = std::any_of(test.begin(), test.end(), [](const Sample& s) { return s.label == 0; });
  const bool has_anomalous = std::any_of(test.begin(), test.end(), [](const Sample& s) { return s.label == 1; });
  if (!has_normal || !has_anomalous) {
    throw ContractError("evaluation needs both normal and anomalous test images");
  }
  const std::size_t height = analyses.front().out_height, width = analyses.front().out_width;
  const std::size_t scales = analyses.front().prior.scales();
  ScoredSet overall;
  std::vector<ScoredSet> per_scale(scales);
  for (std::size_t k = 0; k < analyses.size(); ++k) {
    if (analyses[k].out_height != height || analyses[k].out_width != width ||
        test[k].mask.size() != height * width) {
      throw ShapeError("evaluate: test images differ in size");
    }
    const AnomalyMap map = anomaly_map(analyses[k], options.scoring);
    overall.image_scores.push_back(static_cast<double>(map.image_score));
    overall.maps.push_back(to_double(map.scores));
    for (std::size_t i = 0; i < scales; ++i) {
      per_scale[i].image_scores.push_back(
          static_cast<double>(image_score(map.per_scale[i], height, width, options.scoring)));
      per_scale[i].maps.push_back(to_double(map.per_scale[i]));
    }
  }
  EvalReport report;
  report.overall = metrics_of(overall, test, height, width, options.pro);
  for (const ScoredSet& s : per_scale) report.per_scale.push_back(metrics_of(s, test, height, width, options.pro));
  return report;
}

EvalReport evaluate(const DadfModel& model, std::span<const Sample> test, const EvalOptions& options) {
  if (options.scoring.mode == ScoreMode::kLikelihood && !model.flow_trained) {
    throw ContractError("likelihood scoring requires a trained flow");
  }
  const std::vector<ImageAnalysis> analyses = analyze_all(model, test);
  return evaluate(analyses, test, options);
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j = metrics_json(report.overall);
  nlohmann::ordered_json scales = nlohmann::ordered_json::array();
  for (const MetricSet& m : report.per_scale) scales.push_back(metrics_json(m));
  j["per_scale"] = scales;
  return j.dump(2) + "\n";
}

DADF_NAMESPACE_END
