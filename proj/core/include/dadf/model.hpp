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
#include <memory>
#include <vector>

#include "dadf/dual_attention.hpp"
#include "dadf/encoder.hpp"
#include "dadf/flow.hpp"
#include "dadf/patch_embed.hpp"

DADF_NAMESPACE_BEGIN

struct ModelConfig {
  EncoderConfig encoder;
  PatchEmbedConfig patch;
  DualAttnConfig attention;
  FlowConfig flow;
  /// Seeds every learnable initialization (the encoder has its own seed).
  std::uint64_t seed = 0;

  void validate() const;
};

struct Reconstruction {
  FeaturePyramid self_rec;    // phi_S
  FeaturePyramid memory_rec;  // phi_M
};

/// All learnable parts of the detector over an arbitrary pyramid geometry:
/// patch embedding, dual-attention transformer, the two sets of output
/// heads, and one flow per scale.
class DadfNet {
 public:
  DadfNet(std::vector<ScaleGeometry> geometry, const DualAttnConfig& attention,
          const FlowConfig& flow, std::uint64_t seed);

  Reconstruction reconstruct(const FeaturePyramid& prior,
                             const AttentionProbe* probe = nullptr) const;
  /// Flow inputs per scale for the configured variant.
  std::vector<Tensor> joint(const FeaturePyramid& prior, const Reconstruction& rec) const;

  /// Parameters trained by the reconstruction stage.
  ParameterList transformer_parameters() const;
  /// Parameters trained by the likelihood stage.
  ParameterList flow_parameters() const;
  ParameterList parameters() const;

  const std::vector<ScaleGeometry>& geometry() const { return geometry_; }
  const FlowConfig& flow_config() const { return flow_config_; }
  PatchEmbedding& embedding() { return embedding_; }
  const PatchEmbedding& embedding() const { return embedding_; }
  DualAttentionTransformer& transformer() { return transformer_; }
  const DualAttentionTransformer& transformer() const { return transformer_; }
  OutputHeads& self_heads() { return self_heads_; }
  OutputHeads& memory_heads() { return memory_heads_; }
  std::vector<FlowStack>& flows() { return flows_; }
  const std::vector<FlowStack>& flows() const { return flows_; }

 private:
  std::vector<ScaleGeometry> geometry_;
  FlowConfig flow_config_;
  PatchEmbedding embedding_;
  DualAttentionTransformer transformer_;
  OutputHeads self_heads_;
  OutputHeads memory_heads_;
  std::vector<FlowStack> flows_;
};

/// Frozen encoder + image normalization + learnable network, with the
/// training-state flags a checkpoint records.
class DadfModel {
 public:
  explicit DadfModel(const ModelConfig& config);

  /// Normalizes a raw [0,1] image and extracts its prior pyramid.
  FeaturePyramid prior(const Tensor& raw_image) const;

  const ModelConfig& config() const { return config_; }
  const PriorEncoder& encoder() const { return encoder_; }
  ImageNormalizer& normalizer() { return normalizer_; }
  const ImageNormalizer& normalizer() const { return normalizer_; }
  DadfNet& net() { return net_; }
  const DadfNet& net() const { return net_; }

  bool transformer_trained = false;
  bool flow_trained = false;

 private:
  ModelConfig config_;
  PriorEncoder encoder_;
  ImageNormalizer normalizer_;
  DadfNet net_;
};

/// A model built from `config` whose flows are freshly initialized and whose
/// normalization and transformer-stage parameters are copied from
/// `trained`. Only the flow settings may differ between the two configs.
std::unique_ptr<DadfModel> with_fresh_flows(const DadfModel& trained, const ModelConfig& config);

DADF_NAMESPACE_END
