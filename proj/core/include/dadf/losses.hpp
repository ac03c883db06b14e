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
#include <vector>

#include "dadf/encoder.hpp"
#include "dadf/flow.hpp"

DADF_NAMESPACE_BEGIN

/// Sum over scales and locations of ||prior(h,w) - rec(h,w)||^2.
Tensor reconstruction_loss(const FeaturePyramid& prior, const FeaturePyramid& rec);

/// Self-branch reconstruction loss L_S.
inline Tensor loss_self(const FeaturePyramid& prior, const FeaturePyramid& self_rec) {
  return reconstruction_loss(prior, self_rec);
}

/// Memory-branch reconstruction loss L_M.
inline Tensor loss_memory(const FeaturePyramid& prior, const FeaturePyramid& memory_rec) {
  return reconstruction_loss(prior, memory_rec);
}

/// Negative log-likelihood of one sample summed over scales.
Tensor flow_nll(std::span<const Tensor> joint, std::span<const FlowStack> stacks);

/// Mean NLL over a batch of samples (each a per-scale list of flow inputs).
/// Equals the KL objective up to the data entropy, a constant.
Tensor loss_flow(std::span<const std::vector<Tensor>> batch, std::span<const FlowStack> stacks);

enum class TrainStage { kTransformer, kFlow };

struct StageLoss {
  Tensor total;
  Tensor self_part;
  Tensor memory_part;
  Tensor flow_part;
};

/// The objective optimized in a stage: L_S + L_M for the transformer stage,
/// the flow likelihood loss for the flow stage. Parts not in the stage are
/// left undefined.
StageLoss total_loss(TrainStage stage, const FeaturePyramid& prior, const FeaturePyramid& self_rec,
                     const FeaturePyramid& memory_rec, std::span<const FlowStack> stacks,
                     std::span<const Tensor> joint);

DADF_NAMESPACE_END
