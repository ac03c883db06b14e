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

#include "dadf/metrics.hpp"
#include "dadf/scoring.hpp"
#include "dadf/synthetic.hpp"

DADF_NAMESPACE_BEGIN

struct MetricSet {
  double image_auroc = 0;
  double pixel_auroc = 0;
  double au_pro = 0;
  double spro = 0;
};

struct EvalReport {
  MetricSet overall;
  std::vector<MetricSet> per_scale;  // each scale's upsampled term scored alone
};

struct EvalOptions {
  ScoringOptions scoring;
  metrics::ProOptions pro;
};

/// Scores every test sample and computes the metrics. The test set must
/// contain both normal and anomalous images.
EvalReport evaluate(const DadfModel& model, std::span<const Sample> test, const EvalOptions& options);

/// Same, from precomputed analyses (one per sample), so several scoring
/// modes can share one forward pass.
EvalReport evaluate(std::span<const ImageAnalysis> analyses, std::span<const Sample> test,
                    const EvalOptions& options);

std::vector<ImageAnalysis> analyze_all(const DadfModel& model, std::span<const Sample> samples);

/// JSON with keys image_auroc, pixel_auroc, au_pro, spro, per_scale.
std::string to_json(const EvalReport& report);

DADF_NAMESPACE_END
