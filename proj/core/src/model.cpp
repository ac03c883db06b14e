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

#include "dadf/model.hpp"

#include <algorithm>
#include <string>

#include "dadf/random.hpp"

DADF_NAMESPACE_BEGIN

void ModelConfig::validate() const {
  encoder.validate();
  attention.validate();
  if (attention.token_dim != patch.token_dim) {
    throw ContractError("attention token_dim " + std::to_string(attention.token_dim) +
                        " differs from patch token_dim " + std::to_string(patch.token_dim));
  }
  pyramid_geometry(encoder, patch);
}

namespace {

Rng stream_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

PatchEmbedding make_embedding(const std::vector<ScaleGeometry>& geometry, std::size_t dim,
                              std::uint64_t seed) {
  Rng rng = stream_rng(seed, 1);
  return PatchEmbedding(geometry, dim, rng);
}

DualAttentionTransformer make_transformer(const DualAttnConfig& cfg, std::size_t length,
                                          std::uint64_t seed) {
  Rng rng = stream_rng(seed, 2);
  return DualAttentionTransformer(cfg, length, rng);
}

OutputHeads make_heads(const std::vector<ScaleGeometry>& geometry, std::size_t dim,
                       std::uint64_t seed, std::uint64_t stream) {
  Rng rng = stream_rng(seed, stream);
  return OutputHeads(geometry, dim, rng);
}

}  // namespace

DadfNet::DadfNet(std::vector<ScaleGeometry> geometry, const DualAttnConfig& attention,
                 const FlowConfig& flow, std::uint64_t seed)
    : geometry_(std::move(geometry)),
      flow_config_(flow),
      embedding_(make_embedding(geometry_, attention.token_dim, seed)),
      transformer_(make_transformer(attention, geometry_.front().tokens(), seed)),
      self_heads_(make_heads(geometry_, attention.token_dim, seed, 3)),
      memory_heads_(make_heads(geometry_, attention.token_dim, seed, 4)) {
  const std::size_t k = variant_multiplicity(flow.variant);
  for (std::size_t i = 0; i < geometry_.size(); ++i) {
    flows_.emplace_back(k * geometry_[i].channels, flow, derive_seed(seed, 100 + i));
  }
}

Reconstruction DadfNet::reconstruct(const FeaturePyramid& prior, const AttentionProbe* probe) const {
  const DualStreams streams = transformer_(embedding_(prior), probe);
  return {self_heads_(streams.self_tokens), memory_heads_(streams.memory_tokens)};
}

std::vector<Tensor> DadfNet::joint(const FeaturePyramid& prior, const Reconstruction& rec) const {
  return concat_joint(prior, rec.self_rec, rec.memory_rec, flow_config_.variant);
}

ParameterList DadfNet::transformer_parameters() const {
  ParameterList out;
  embedding_.collect(out, "embed");
  transformer_.collect(out, "transformer");
  self_heads_.collect(out, "self_heads");
  memory_heads_.collect(out, "memory_heads");
  return out;
}

ParameterList DadfNet::flow_parameters() const {
  ParameterList out;
  for (std::size_t i = 0; i < flows_.size(); ++i) flows_[i].collect(out, "flow" + std::to_string(i));
  return out;
}

ParameterList DadfNet::parameters() const {
  ParameterList out = transformer_parameters();
  ParameterList flows = flow_parameters();
  out.insert(out.end(), flows.begin(), flows.end());
  return out;
}

DadfModel::DadfModel(const ModelConfig& config)
    : config_((config.validate(), config)),
      encoder_(config_.encoder),
      net_(pyramid_geometry(config_.encoder, config_.patch), config_.attention, config_.flow,
           config_.seed) {}

FeaturePyramid DadfModel::prior(const Tensor& raw_image) const {
  return encoder_.extract(normalizer_.apply(raw_image));
}

std::unique_ptr<DadfModel> with_fresh_flows(const DadfModel& trained, const ModelConfig& config) {
  const ModelConfig& have = trained.config();
  const bool same = have.seed == config.seed && have.encoder.in_size == config.encoder.in_size &&
                    have.encoder.stage_channels == config.encoder.stage_channels &&
                    have.encoder.seed == config.encoder.seed &&
                    have.patch.patch_sizes == config.patch.patch_sizes &&
                    have.patch.token_dim == config.patch.token_dim &&
                    have.attention.depth == config.attention.depth &&
                    have.attention.heads == config.attention.heads &&
                    have.attention.token_dim == config.attention.token_dim &&
                    have.attention.mlp_ratio == config.attention.mlp_ratio &&
                    have.attention.memorial_query_source == config.attention.memorial_query_source;
  if (!same) {
    throw ContractError("checkpoint transformer does not match the requested configuration "
                        "(only [flow] settings and train.flow_variant may change)");
  }
  auto model = std::make_unique<DadfModel>(config);
  model->normalizer() = trained.normalizer();
  const ParameterList from = trained.net().transformer_parameters();
  const ParameterList to = model->net().transformer_parameters();
  for (std::size_t i = 0; i < from.size(); ++i) {
    Tensor target = to[i].tensor;
    const auto src = from[i].tensor.data();
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
  }
  model->transformer_trained = trained.transformer_trained;
  return model;
}

DADF_NAMESPACE_END
