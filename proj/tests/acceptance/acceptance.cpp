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

// Acceptance run: one PASS/FAIL line per criterion, exit 0 only if all pass.
// Tolerances are pinned here; the desk benchmark uses library defaults and
// seed 0 throughout.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <unistd.h>
#include <vector>

#include "dadf/checkpoint.hpp"
#include "dadf/config.hpp"
#include "dadf/evaluate.hpp"
#include "dadf/synthetic.hpp"
#include "dadf/train.hpp"
#include "dadf_verify/precision.hpp"
#include "dadf_verify/verify.hpp"

namespace fs = std::filesystem;
using namespace dadf;

namespace {

constexpr double kRoundtripTolF32 = 1e-5;
constexpr double kRoundtripSeconds = 30.0;
constexpr double kDeskAuroc = 0.90;
constexpr double kDeskCpuSeconds = 15 * 60.0;
constexpr double kVariantSlack = 0.01;

template <typename... Args>
std::string fmt(const char* format, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

struct Line {
  int id;
  bool pass;
  std::string detail;
};

// Suite results collapse to one line; the first failing check is named.
Line from_report(int id, const verify::Report& report) {
  std::size_t failed = 0;
  std::string first;
  for (const auto& c : report) {
    if (!c.pass) {
      if (failed++ == 0) first = c.name + " (" + c.detail + ")";
    }
  }
  if (failed == 0) return {id, true, fmt("%zu checks pass", report.size())};
  return {id, false, fmt("%zu of %zu checks fail, first %s", failed, report.size(), first.c_str())};
}

struct DeskRun {
  std::unique_ptr<DadfModel> model;
  RunConfig run;
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<std::uint8_t> checkpoint;
  std::string report;
  double cpu = 0;
};

std::vector<Tensor> images_of(const std::vector<Sample>& samples) {
  std::vector<Tensor> out;
  for (const Sample& s : samples) out.push_back(s.image);
  return out;
}

DeskRun desk_run(const fs::path& root) {
  const double start = cpu_seconds();
  DeskRun r;
  generate(DatasetSpec{}, root);
  const auto all = load(root);
  r.train = select_split(all, true);
  r.test = select_split(all, false);
  r.run.validate();
  r.model = std::make_unique<DadfModel>(r.run.model);
  const auto images = images_of(r.train);
  TrainHooks hooks;
  hooks.on_epoch = [](const EpochLog& e) {
    std::fprintf(stderr, "  %s epoch %zu  self %.4f mem %.4f flow %.4f\n",
                 e.stage == TrainStage::kTransformer ? "transformer" : "flow", e.epoch, e.loss_self,
                 e.loss_memory, e.loss_flow);
  };
  train_transformer(*r.model, images, r.run.train, hooks);
  train_flow(*r.model, images, r.run.train, hooks);
  r.checkpoint = encode_checkpoint(*r.model, r.run);
  EvalOptions options;
  options.scoring = r.run.scoring;
  r.report = to_json(evaluate(*r.model, r.test, options));
  r.cpu = cpu_seconds() - start;
  return r;
}

struct Subset {
  std::vector<Sample> samples;
  std::vector<ImageAnalysis> analyses;
};

// Normal test images plus the anomalous ones of the listed kinds.
Subset subset(const std::vector<Sample>& test, const std::vector<ImageAnalysis>& analyses,
              const std::vector<std::string>& kinds) {
  Subset out;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const bool keep = test[k].kind == "normal" ||
                      std::find(kinds.begin(), kinds.end(), test[k].kind) != kinds.end();
    if (keep) {
      out.samples.push_back(test[k]);
      out.analyses.push_back(analyses[k]);
    }
  }
  return out;
}

MetricSet score(const Subset& s, ScoreMode mode) {
  EvalOptions options;
  options.scoring.mode = mode;
  return evaluate(s.analyses, s.samples, options).overall;
}

}  // namespace

int main() {
  std::vector<Line> lines;
  const fs::path scratch = fs::temp_directory_path() / fmt("dadf_acceptance_%d", static_cast<int>(getpid()));
  fs::remove_all(scratch);

  std::fprintf(stderr, "suites\n");
  const auto t0 = std::chrono::steady_clock::now();
  verify::Report roundtrip = verify::flow_roundtrip_suite();
  const double suite_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const verify::Report logdet = verify::logdet_suite();
  const verify::Report density = verify::density_suite();
  const verify::Report grads = verify::gradcheck_suite();
  const verify::Report metric = verify::metric_oracle_suite();

  std::fprintf(stderr, "desk run 1\n");
  DeskRun first = desk_run(scratch / "run1");

  // Criterion 1 also covers the trained desk flows: 100 draws from each
  // stack's own standardization statistics.
  {
    const auto t1 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(0, 101));
    const auto& flows = first.model->net().flows();
    double worst = 0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const FlowStack& stack = flows[i];
      const auto geometry = first.model->net().geometry()[i];
      const auto mean = stack.standardize_mean().data();
      const auto inv_std = stack.standardize_inv_std().data();
      std::vector<Tensor> inputs;
      for (int k = 0; k < 100; ++k) {
        Tensor u = Tensor::zeros({geometry.height, geometry.width, stack.channels()});
        auto d = u.mutable_data();
        for (std::size_t p = 0; p < d.size(); ++p) {
          const std::size_t c = p % stack.channels();
          d[p] = mean[c] + rng.normal() / inv_std[c];
        }
        inputs.push_back(std::move(u));
      }
      const double err = checks::roundtrip_error(stack, inputs);
      worst = std::max(worst, err);
      roundtrip.push_back({fmt("trained_desk_scale%zu", i), err < kRoundtripTolF32,
                           fmt("%.2e", err)});
    }
    const double seconds =
        suite_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    Line line = from_report(1, roundtrip);
    line.pass = line.pass && seconds < kRoundtripSeconds;
    line.detail += fmt("; trained desk stacks max err %.2e (tol %.0e); %.1f s (limit %.0f s)", worst,
                       kRoundtripTolF32, seconds, kRoundtripSeconds);
    lines.push_back(line);
  }
  lines.push_back(from_report(2, logdet));
  lines.push_back(from_report(3, density));
  lines.push_back(from_report(4, grads));
  lines.push_back(from_report(5, metric));

  std::fprintf(stderr, "scoring\n");
  const auto analyses = analyze_all(*first.model, first.test);
  const Subset desk = subset(first.test, analyses, {"patch", "scratch"});
  const MetricSet likelihood = score(desk, ScoreMode::kLikelihood);
  const MetricSet fused = score(desk, ScoreMode::kReconFused);
  lines.push_back({6,
                   likelihood.image_auroc >= kDeskAuroc && likelihood.pixel_auroc >= kDeskAuroc &&
                       first.cpu < kDeskCpuSeconds,
                   fmt("likelihood image AUROC %.4f, pixel AUROC %.4f (min %.2f); run CPU %.0f s (limit %.0f s)",
                       likelihood.image_auroc, likelihood.pixel_auroc, kDeskAuroc, first.cpu,
                       kDeskCpuSeconds)});
  lines.push_back({7, likelihood.pixel_auroc >= fused.pixel_auroc,
                   fmt("pixel AUROC likelihood %.4f vs recon_fused %.4f", likelihood.pixel_auroc,
                       fused.pixel_auroc)});

  std::fprintf(stderr, "variant P\n");
  {
    ModelConfig variant = first.run.model;
    variant.flow.variant = FlowVariant::kP;
    auto p_model = with_fresh_flows(*first.model, variant);
    train_flow(*p_model, images_of(first.train), first.run.train);
    const auto p_analyses = analyze_all(*p_model, first.test);
    const MetricSet p = score(subset(first.test, p_analyses, {"patch", "scratch"}), ScoreMode::kLikelihood);
    lines.push_back({8, likelihood.pixel_auroc >= p.pixel_auroc - kVariantSlack,
                     fmt("pixel AUROC variant D %.4f vs variant P %.4f (slack %.2f)", likelihood.pixel_auroc,
                         p.pixel_auroc, kVariantSlack)});
  }

  {
    double self_sum = 0, mem_sum = 0;
    std::size_t count = 0;
    ScoringOptions self_opts, mem_opts;
    self_opts.mode = ScoreMode::kReconSelf;
    mem_opts.mode = ScoreMode::kReconMemory;
    for (std::size_t k = 0; k < first.test.size(); ++k) {
      if (first.test[k].label == 0) continue;
      const AnomalyMap s = anomaly_map(analyses[k], self_opts);
      const AnomalyMap m = anomaly_map(analyses[k], mem_opts);
      for (std::size_t p = 0; p < s.scores.size(); ++p) {
        if (!first.test[k].mask[p]) continue;
        self_sum += s.scores[p];
        mem_sum += m.scores[p];
        ++count;
      }
    }
    const double self_mean = self_sum / static_cast<double>(count);
    const double mem_mean = mem_sum / static_cast<double>(count);
    const Subset swap = subset(first.test, analyses, {"swap"});
    const MetricSet self_swap = score(swap, ScoreMode::kReconSelf);
    const MetricSet mem_swap = score(swap, ScoreMode::kReconMemory);
    lines.push_back({9, mem_mean > self_mean && mem_swap.image_auroc >= self_swap.image_auroc,
                     fmt("anomalous-pixel mean error memory %.3f vs self %.3f; swap image AUROC memory "
                         "%.4f vs self %.4f",
                         mem_mean, self_mean, mem_swap.image_auroc, self_swap.image_auroc)});
  }

  std::fprintf(stderr, "desk run 2\n");
  {
    const DeskRun second = desk_run(scratch / "run2");
    const bool same_ckpt = first.checkpoint == second.checkpoint;
    const bool same_report = first.report == second.report;
    lines.push_back({10, same_ckpt && same_report,
                     fmt("checkpoints %s (%zu bytes), reports %s", same_ckpt ? "identical" : "differ",
                         first.checkpoint.size(), same_report ? "identical" : "differ")});
  }
  fs::remove_all(scratch);

  bool all = true;
  for (const Line& l : lines) {
    std::printf("%s criterion %2d: %s\n", l.pass ? "PASS" : "FAIL", l.id, l.detail.c_str());
    all = all && l.pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
