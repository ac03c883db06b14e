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

#include "dadf/losses.hpp"

#include <string>
#include <vector>

#include "dadf/ops.hpp"

DADF_NAMESPACE_BEGIN

Tensor reconstruction_loss(const FeaturePyramid& prior, const FeaturePyramid& rec) {
  if (prior.scales() != rec.scales() || prior.scales() == 0) {
    throw ShapeError("reconstruction loss: " + std::to_string(prior.scales()) + " vs " +
                     std::to_string(rec.scales()) + " scales");
  }
  Tensor total;
  for (std::size_t i = 0; i < prior.scales(); ++i) {
    const Tensor term = sum_squares(sub(prior.maps[i], rec.maps[i]));
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

Tensor flow_nll(std::span<const Tensor> joint, std::span<const FlowStack> stacks) {
  if (joint.size() != stacks.size() || joint.empty()) {
    throw ShapeError("flow loss: " + std::to_string(joint.size()) + " inputs for " +
                     std::to_string(stacks.size()) + " flows");
  }
  Tensor total;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const FlowOutput out = stacks[i].forward(joint[i]);
    const Tensor nll = scale(log_likelihood(out.z, out.logdet), Real(-1));
    check_finite(nll, "flow likelihood at scale " + std::to_string(i));
    total = total.defined() ? add(total, nll) : nll;
  }
  return total;
}

Tensor loss_flow(std::span<const std::vector<Tensor>> batch, std::span<const FlowStack> stacks) {
  if (batch.empty()) throw ContractError("flow loss on an empty batch");
  Tensor total;
  for (const auto& sample : batch) {
    const Tensor nll = flow_nll(sample, stacks);
    total = total.defined() ? add(total, nll) : nll;
  }
  return scale(total, Real(1) / static_cast<Real>(batch.size()));
}

StageLoss total_loss(TrainStage stage, const FeaturePyramid& prior, const FeaturePyramid& self_rec,
                     const FeaturePyramid& memory_rec, std::span<const FlowStack> stacks,
                     std::span<const Tensor> joint) {
  StageLoss out;
  if (stage == TrainStage::kTransformer) {
    out.self_part = loss_self(prior, self_rec);
    out.memory_part = loss_memory(prior, memory_rec);
    out.total = add(out.self_part, out.memory_part);
  } else {
    // Reconstructions enter the flow as constants; the transformer is frozen.
    std::vector<Tensor> frozen;
    for (const Tensor& t : joint) frozen.push_back(t.detach());
    out.flow_part = flow_nll(frozen, stacks);
    out.total = out.flow_part;
  }
  return out;
}

DADF_NAMESPACE_END
