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

// dadf: data generation, training, scoring, evaluation and self-test.
//
// stdout carries only machine-readable output (TSV epoch logs, scores,
// JSON reports, self-test lines); diagnostics go to stderr. Exit codes:
// 0 ok, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dadf/checkpoint.hpp"
#include "dadf/config.hpp"
#include "dadf/evaluate.hpp"
#include "dadf/synthetic.hpp"
#include "dadf/train.hpp"
#include "dadf_verify/verify.hpp"

namespace fs = std::filesystem;
using namespace dadf;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---- gen-data ----

struct GenArgs {
  std::string out;
  std::vector<std::string> spec;
  std::uint64_t seed = 0;
};

std::size_t spec_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw UsageError("--spec " + key + ": expected a non-negative integer, got '" + value + "'");
  }
}

DatasetSpec parse_spec(const GenArgs& args) {
  DatasetSpec spec;
  spec.seed = args.seed;
  for (const std::string& item : args.spec) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--spec expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "texture") {
        spec.texture = parse_texture(value);
      } else if (key == "image_size") {
        spec.image_size = spec_count(key, value);
      } else if (key == "n_train") {
        spec.n_train = spec_count(key, value);
      } else if (key == "n_test_normal") {
        spec.n_test_normal = spec_count(key, value);
      } else if (key == "n_test_anomalous") {
        spec.n_test_anomalous = spec_count(key, value);
      } else if (key == "kinds") {
        spec.anomaly_kinds.clear();
        std::stringstream ss(value);
        for (std::string kind; std::getline(ss, kind, ',');) spec.anomaly_kinds.push_back(parse_anomaly_kind(kind));
      } else {
        throw UsageError("--spec: unknown key '" + key +
                         "' (texture, image_size, n_train, n_test_normal, n_test_anomalous, kinds)");
      }
    } catch (const ContractError& e) {
      throw UsageError(std::string("--spec: ") + e.what());
    }
  }
  return spec;
}

int cmd_gen_data(const GenArgs& args) {
  const DatasetSpec spec = parse_spec(args);
  spec.validate();
  std::cout << generate(spec, args.out).string() << "\n";
  return 0;
}

// ---- shared config handling ----

struct ConfigArgs {
  std::string config;
  std::vector<std::string> set;
};

void overlay(RunConfig& run, const ConfigArgs& args) {
  if (!args.config.empty()) apply_config_text(run, read_config_file(args.config));
  for (const std::string& s : args.set) apply_override(run, s);
}

std::vector<Tensor> training_images(const std::string& data) {
  std::vector<Tensor> images;
  for (const Sample& s : select_split(load(data), true)) images.push_back(s.image);
  if (images.empty()) throw ContractError(data + ": dataset has no training images");
  return images;
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string out;
  std::string ckpt;
  std::string stage = "all";
  ConfigArgs config;
};

void print_epoch(const EpochLog& log) {
  std::printf("%s\t%zu\t%.9g\t%.9g\t%.9g\n", log.stage == TrainStage::kTransformer ? "transformer" : "flow",
              log.epoch, log.loss_self, log.loss_memory, log.loss_flow);
  std::fflush(stdout);
}

int cmd_train(const TrainArgs& args) {
  std::unique_ptr<DadfModel> model;
  RunConfig run;
  if (args.stage == "flow") {
    const fs::path source = args.ckpt.empty() ? fs::path(args.out) : fs::path(args.ckpt);
    if (!fs::exists(source)) {
      throw ContractError("--stage flow needs a checkpoint with a trained transformer; " + source.string() +
                          " does not exist (run --stage transformer first)");
    }
    LoadedCheckpoint loaded = load_checkpoint(source);
    if (!loaded.model->transformer_trained) {
      throw ContractError(source.string() + ": transformer stage has not been run; cannot train the flow");
    }
    run = loaded.config;
    overlay(run, args.config);
    run.validate();
    model = with_fresh_flows(*loaded.model, run.model);
  } else {
    overlay(run, args.config);
    run.validate();
    model = std::make_unique<DadfModel>(run.model);
  }
  const std::vector<Tensor> images = training_images(args.data);
  std::cerr << "training on " << images.size() << " images, stage " << args.stage << "\n";
  std::printf("stage\tepoch\tloss_self\tloss_memory\tloss_flow\n");
  TrainHooks hooks;
  hooks.on_epoch = print_epoch;
  if (args.stage == "transformer" || args.stage == "all") train_transformer(*model, images, run.train, hooks);
  if (args.stage == "flow" || args.stage == "all") train_flow(*model, images, run.train, hooks);
  save_checkpoint(args.out, *model, run);
  std::cerr << "wrote " << args.out << "\n";
  return 0;
}

// ---- score ----

struct ScoreArgs {
  std::string image;
  std::string ckpt;
  std::string mode;
  std::string heatmap;
  std::vector<std::string> set;
};

ScoringOptions scoring_for(const RunConfig& stored, const std::string& mode, const std::vector<std::string>& set) {
  RunConfig run = stored;
  for (const std::string& s : set) {
    if (s.rfind("score.", 0) != 0) throw UsageError("--set here accepts only score.* keys, got '" + s + "'");
    apply_override(run, s);
  }
  if (!mode.empty()) run.scoring.mode = parse_score_mode(mode);
  run.validate();
  return run.scoring;
}

int cmd_score(const ScoreArgs& args) {
  const LoadedCheckpoint loaded = load_checkpoint(args.ckpt);
  const ScoringOptions options = scoring_for(loaded.config, args.mode, args.set);
  const RgbImage rgb = read_ppm(args.image);
  const std::size_t expected = loaded.config.model.encoder.in_size;
  if (rgb.height != expected || rgb.width != expected) {
    throw ContractError(args.image + " is " + std::to_string(rgb.height) + "x" + std::to_string(rgb.width) +
                        " but the checkpoint expects " + std::to_string(expected) + "x" +
                        std::to_string(expected));
  }
  const AnomalyMap map = anomaly_map(to_tensor(rgb), *loaded.model, options);
  std::cout << fmt_double(map.image_score) << "\n";
  if (!args.heatmap.empty()) {
    const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
    const double min = *lo, max = *hi;
    std::vector<std::uint16_t> pixels(map.scores.size(), 0);
    if (max > min) {
      for (std::size_t p = 0; p < pixels.size(); ++p) {
        pixels[p] = static_cast<std::uint16_t>(std::lround((map.scores[p] - min) / (max - min) * 65535.0));
      }
    }
    write_pgm16(args.heatmap, map.height, map.width, pixels,
                {"raw_range " + fmt_double(min) + " " + fmt_double(max), "mode " + to_string(options.mode)});
  }
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string data;
  std::string ckpt;
  std::string report;
  std::string mode;
  std::string kinds;
  std::vector<std::string> set;
};

int cmd_eval(const EvalArgs& args) {
  const LoadedCheckpoint loaded = load_checkpoint(args.ckpt);
  EvalOptions options;
  options.scoring = scoring_for(loaded.config, args.mode, args.set);
  std::vector<Sample> test = select_split(load(args.data), false);
  if (!args.kinds.empty()) {
    std::vector<std::string> keep;
    std::stringstream ss(args.kinds);
    for (std::string kind; std::getline(ss, kind, ',');) keep.push_back(to_string(parse_anomaly_kind(kind)));
    std::erase_if(test, [&](const Sample& s) {
      return s.label == 1 && std::find(keep.begin(), keep.end(), s.kind) == keep.end();
    });
  }
  const EvalReport report = evaluate(*loaded.model, test, options);
  const std::string json = to_json(report);
  if (!args.report.empty()) {
    std::ofstream out(args.report, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(args.report + ": cannot open for writing");
    out << json << "\n";
    if (!out) throw FormatError(args.report + ": write failed");
  }
  std::cout << json << "\n";
  return 0;
}

// ---- selftest ----

int cmd_selftest() {
  const verify::Report report = verify::selftest();
  std::cout << verify::format(report);
  for (const verify::CheckResult& c : report) {
    if (!c.pass) std::cerr << "selftest: failing check " << c.name << "\n";
  }
  return verify::all_pass(report) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-attention discriminative flow anomaly detector"};
  app.require_subcommand(1);
  app.footer("Run configuration (INI; --config FILE, then --set section.key=value overrides):\n\n" +
             describe_defaults());

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic texture dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--spec", gen.spec,
                      "Dataset setting key=value: texture (stripes|checker|blobs), image_size, n_train, "
                      "n_test_normal, n_test_anomalous, kinds (comma list of patch,scratch,swap)");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train and write a checkpoint; epoch losses as TSV on stdout");
  train_cmd->add_option("--data", train.data, "Dataset directory")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint to write")->required();
  train_cmd->add_option("--stage", train.stage, "transformer, flow or all")
      ->check(CLI::IsMember({"transformer", "flow", "all"}))
      ->capture_default_str();
  train_cmd->add_option("--ckpt", train.ckpt, "Checkpoint holding the trained transformer (--stage flow; default --out)");
  train_cmd->add_option("--config", train.config.config, "Run configuration file");
  train_cmd->add_option("--set", train.config.set, "Override section.key=value (repeatable)");
  train_cmd->footer("Defaults:\n\n" + describe_defaults());

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score one PPM image; prints the image score");
  score_cmd->add_option("--image", score.image, "Input image (binary PPM)")->required();
  score_cmd->add_option("--ckpt", score.ckpt, "Checkpoint")->required();
  score_cmd->add_option("--mode", score.mode,
                        "likelihood, latent_norm, recon_self, recon_mem or recon_fused (default: checkpoint's)");
  score_cmd->add_option("--heatmap", score.heatmap, "16-bit PGM heatmap to write");
  score_cmd->add_option("--set", score.set, "Scoring override score.key=value (repeatable)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the test split; prints the JSON report");
  eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();
  eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--report", eval.report, "JSON report to write");
  eval_cmd->add_option("--mode", eval.mode, "Scoring mode (default: checkpoint's)");
  eval_cmd->add_option("--kinds", eval.kinds, "Keep only these anomaly kinds (comma list)");
  eval_cmd->add_option("--set", eval.set, "Scoring override score.key=value (repeatable)");

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the invariant suites; exit 0 only if all pass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(train);
    if (*score_cmd) return cmd_score(score);
    if (*eval_cmd) return cmd_eval(eval);
    if (*selftest_cmd) return cmd_selftest();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
