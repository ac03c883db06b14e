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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dadf/losses.hpp"
#include "dadf/model.hpp"

DADF_NAMESPACE_BEGIN

struct TrainConfig {
  Real lr = Real(1e-4);
  Real weight_decay = Real(0.01);
  std::size_t batch_size = 8;
  std::size_t stage1_epochs = 50;
  std::size_t stage2_epochs = 30;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  TrainStage stage = TrainStage::kTransformer;
  std::size_t epoch = 0;  // 1-based
  double loss_self = 0;    // per-image means over the epoch
  double loss_memory = 0;
  double loss_flow = 0;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Called after each optimizer step with the batch loss.
  std::function<void(std::size_t step, double loss)> on_step;
};

struct StageResult {
  std::vector<EpochLog> epochs;
  /// Names of the parameters the stage's optimizer updated.
  std::vector<std::string> optimized;
};

/// Stage 1: fits image normalization, then trains embedding, transformer and
/// output heads on L_S + L_M. `images` are raw normal training images.
StageResult train_transformer(DadfModel& model, std::span<const Tensor> images,
                              const TrainConfig& config, const TrainHooks& hooks = {});

/// Stage 2: freezes the transformer, fixes flow standardization from the
/// training features, then trains the flows on the likelihood loss.
StageResult train_flow(DadfModel& model, std::span<const Tensor> images, const TrainConfig& config,
                       const TrainHooks& hooks = {});

/// Likelihood training of bare flow stacks on precomputed per-scale inputs
/// (each sample holds one tensor per stack). Standardization is not touched.
StageResult fit_flows(std::vector<FlowStack>& stacks, std::span<const std::vector<Tensor>> samples,
                      const TrainConfig& config, const TrainHooks& hooks = {},
                      const std::string& name_prefix = "flow");

/// Per-scale flow inputs of one image with the transformer frozen.
std::vector<Tensor> frozen_joint_features(const DadfModel& model, const Tensor& raw_image);

DADF_NAMESPACE_END
