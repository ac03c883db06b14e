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
#include <filesystem>
#include <numbers>
#include <unistd.h>

#include "doctest.h"
#include "dadf/checkpoint.hpp"
#include "dadf/config.hpp"
#include "dadf/ops.hpp"
#include "dadf/scoring.hpp"
#include "dadf/synthetic.hpp"
#include "dadf/train.hpp"

using namespace dadf;
namespace fs = std::filesystem;

namespace {

// A small model on 32x32 images so whole training runs take seconds.
RunConfig tiny_run() {
  RunConfig run;
  run.model.encoder.in_size = 32;
  run.model.patch.token_dim = 24;
  run.model.attention.token_dim = 24;
  run.model.attention.heads = 2;
  run.model.attention.depth = 1;
  run.model.attention.mlp_ratio = 2;
  run.model.flow.n_blocks = 2;
  run.train.batch_size = 4;
  run.train.lr = Real(1e-3);
  run.train.stage1_epochs = 2;
  run.train.stage2_epochs = 2;
  run.validate();
  return run;
}

std::vector<Tensor> normal_images(std::size_t n, std::uint64_t seed) {
  DatasetSpec spec;
  spec.image_size = 32;
  Rng rng(seed);
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(to_tensor(render_normal(spec, rng)));
  return out;
}

std::unique_ptr<DadfModel> trained_tiny(const RunConfig& run, const std::vector<Tensor>& images,
                                        std::vector<EpochLog>* logs = nullptr) {
  auto model = std::make_unique<DadfModel>(run.model);
  auto a = train_transformer(*model, images, run.train);
  auto b = train_flow(*model, images, run.train);
  if (logs) {
    logs->insert(logs->end(), a.epochs.begin(), a.epochs.end());
    logs->insert(logs->end(), b.epochs.begin(), b.epochs.end());
  }
  return model;
}

bool all_zero(const ParameterList& params) {
  for (const NamedTensor& p : params) {
    for (Real g : p.tensor.grad()) {
      if (g != 0) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("reconstruction losses") {
  const FeaturePyramid p{{Tensor::from({1, 1, 2}, {0.5, 0.5})}};
  const FeaturePyramid s{{Tensor::from({1, 1, 2}, {-0.5, 1.5})}};
  CHECK(loss_self(p, p).item() == 0);
  CHECK(loss_self(p, s).item() == doctest::Approx(2));
  CHECK(loss_memory(p, s).item() == loss_self(p, s).item());
  CHECK(loss_memory(p, s).item() > 0);
  CHECK_THROWS_AS(loss_self(p, FeaturePyramid{}), ShapeError);
}

TEST_CASE("flow loss of an identity stack is the Gaussian energy") {
  Rng rng(1);
  const std::vector<FlowStack> stacks{FlowStack(4, FlowConfig{}, 1), FlowStack(2, FlowConfig{}, 2)};
  std::vector<std::vector<Tensor>> batch;
  double expect = 0;
  for (int k = 0; k < 3; ++k) {
    batch.push_back({rng.normal_tensor({2, 2, 4}, 1), rng.normal_tensor({1, 1, 2}, 1)});
    double energy = 0;
    for (const Tensor& t : batch.back()) {
      for (Real v : t.data()) energy += 0.5 * static_cast<double>(v) * v;
    }
    expect += energy + 0.5 * 18 * std::log(2 * std::numbers::pi);
  }
  expect /= 3;
  CHECK(loss_flow(batch, stacks).item() == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("each stage touches only its own parameters") {
  const RunConfig run = tiny_run();
  DadfNet net(pyramid_geometry(run.model.encoder, run.model.patch), run.model.attention, run.model.flow, 3);
  Rng rng(4);
  FeaturePyramid prior;
  for (const auto& g : net.geometry()) prior.maps.push_back(rng.normal_tensor(g.map_shape(), 1));

  const Reconstruction rec = net.reconstruct(prior);
  const StageLoss first = total_loss(TrainStage::kTransformer, prior, rec.self_rec, rec.memory_rec, {}, {});
  CHECK(first.total.item() == doctest::Approx(first.self_part.item() + first.memory_part.item()));
  backward(first.total);
  CHECK(all_zero(net.flow_parameters()));
  CHECK_FALSE(all_zero(net.transformer_parameters()));

  for (Tensor t : tensors_of(net.parameters())) t.zero_grad();
  const Reconstruction again = net.reconstruct(prior);
  const StageLoss second = total_loss(TrainStage::kFlow, prior, again.self_rec, again.memory_rec, net.flows(),
                                      net.joint(prior, again));
  backward(second.total);
  CHECK(all_zero(net.transformer_parameters()));
}

TEST_CASE("training is deterministic and checkpoints round trip") {
  const RunConfig run = tiny_run();
  const auto images = normal_images(8, 5);
  std::vector<EpochLog> logs_a, logs_b;
  const auto a = trained_tiny(run, images, &logs_a);
  const auto b = trained_tiny(run, images, &logs_b);
  REQUIRE(logs_a.size() == 4);
  for (std::size_t i = 0; i < logs_a.size(); ++i) {
    CHECK(logs_a[i].loss_self == logs_b[i].loss_self);
    CHECK(logs_a[i].loss_flow == logs_b[i].loss_flow);
  }
  const auto bytes = encode_checkpoint(*a, run);
  CHECK(bytes == encode_checkpoint(*b, run));

  const fs::path path = fs::temp_directory_path() / ("dadf_unit_" + std::to_string(getpid()) + ".ckpt");
  save_checkpoint(path, *a, run);
  const LoadedCheckpoint loaded = load_checkpoint(path);
  fs::remove(path);
  CHECK(loaded.model->flow_trained);
  CHECK(serialize(loaded.config) == serialize(run));
  const auto probes = normal_images(5, 6);
  for (const Tensor& image : probes) {
    ScoringOptions options;
    const AnomalyMap x = anomaly_map(image, *a, options), y = anomaly_map(image, *loaded.model, options);
    CHECK(x.scores == y.scores);
    CHECK(x.image_score == y.image_score);
  }

  SUBCASE("truncated or damaged bytes are rejected") {
    for (std::size_t cut : {std::size_t{3}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
      const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
      CHECK_THROWS_AS(decode_checkpoint(head), FormatError);
    }
    auto bad_version = bytes;
    bad_version[4] = 99;
    CHECK_THROWS_AS(decode_checkpoint(bad_version), FormatError);
  }
}

TEST_CASE("flow stage requires a trained transformer") {
  const RunConfig run = tiny_run();
  DadfModel model(run.model);
  CHECK_THROWS_AS(train_flow(model, normal_images(2, 7), run.train), ContractError);
}

TEST_CASE("flow loss falls over the first 200 steps") {
  RunConfig run = tiny_run();
  run.train.stage1_epochs = 5;
  run.train.stage2_epochs = 25;
  const auto images = normal_images(32, 8);  // 8 steps per epoch
  DadfModel model(run.model);
  train_transformer(model, images, run.train);
  std::vector<double> losses;
  TrainHooks hooks;
  hooks.on_step = [&](std::size_t, double loss) { losses.push_back(loss); };
  train_flow(model, images, run.train, hooks);
  REQUIRE(losses.size() == 200);
  // Means over consecutive windows of 40 steps.
  std::vector<double> windows;
  for (std::size_t w = 0; w < 5; ++w) {
    double m = 0;
    for (std::size_t i = 40 * w; i < 40 * (w + 1); ++i) m += losses[i];
    windows.push_back(m / 40);
  }
  for (std::size_t w = 1; w < windows.size(); ++w) CHECK(windows[w] < windows[w - 1]);
}

TEST_CASE("with_fresh_flows keeps the transformer and resets the flows") {
  const RunConfig run = tiny_run();
  const auto images = normal_images(8, 9);
  const auto trained = trained_tiny(run, images);
  ModelConfig variant = run.model;
  variant.flow.variant = FlowVariant::kP;
  const auto fresh = with_fresh_flows(*trained, variant);
  CHECK(fresh->transformer_trained);
  CHECK_FALSE(fresh->flow_trained);
  const auto a = trained->net().transformer_parameters(), b = fresh->net().transformer_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i].tensor.data(), y = b[i].tensor.data();
    CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
  ModelConfig other = run.model;
  other.attention.depth = 2;
  CHECK_THROWS_AS(with_fresh_flows(*trained, other), ContractError);
}

TEST_CASE("config text round trips and rejects unknown keys") {
  RunConfig run = tiny_run();
  run.scoring.mode = ScoreMode::kReconFused;
  CHECK(serialize(parse_run_config(serialize(run))) == serialize(run));
  CHECK_THROWS_AS(parse_run_config("[train]\nbogus = 1\n"), ContractError);
  CHECK_THROWS_AS(parse_run_config("[flow]\nn_blocks = x\n"), ContractError);
  RunConfig over;
  apply_override(over, "train.lr=0.5");
  CHECK(over.train.lr == Real(0.5));
  CHECK_THROWS_AS(apply_override(over, "nodot=1"), ContractError);
}
