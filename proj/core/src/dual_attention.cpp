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

#include "dadf/dual_attention.hpp"

#include <cmath>
#include <string>

#include "dadf/ops.hpp"

DADF_NAMESPACE_BEGIN

void DualAttnConfig::validate() const {
  if (heads == 0 || token_dim % heads != 0) {
    throw ContractError("token_dim " + std::to_string(token_dim) + " not divisible by heads " +
                        std::to_string(heads));
  }
  if (mlp_ratio == 0) throw ContractError("mlp_ratio must be positive");
}

AttentionParams AttentionParams::init(std::size_t dim, Rng& rng) {
  AttentionParams p{Linear::xavier(dim, dim, rng), Linear::xavier(dim, dim, rng),
                    Linear::xavier(dim, dim, rng), Linear::xavier(dim, dim, rng)};
  return p;
}

void AttentionParams::collect(ParameterList& out, const std::string& prefix) const {
  query.collect(out, prefix + ".query");
  key.collect(out, prefix + ".key");
  value.collect(out, prefix + ".value");
  output.collect(out, prefix + ".output");
}

Tensor multi_head_attention(const Tensor& query_in, const Tensor& kv_in,
                            const AttentionParams& params, std::size_t heads,
                            const AttentionProbe* probe) {
  const std::size_t dim = query_in.dim(1);
  const std::size_t head_dim = dim / heads;
  const Real inv_sqrt = Real(1) / std::sqrt(static_cast<Real>(head_dim));
  const auto mode = probe ? probe->weights : AttentionProbe::Weights::kLearned;

  const Tensor v = params.value(kv_in);
  Tensor q, k;
  if (mode != AttentionProbe::Weights::kUniform) {
    q = params.query(query_in);
    k = params.key(kv_in);
  }
  std::vector<Tensor> per_head;
  per_head.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t begin = h * head_dim;
    Tensor weights;
    if (mode == AttentionProbe::Weights::kUniform) {
      weights = Tensor::full({query_in.dim(0), kv_in.dim(0)}, Real(1) / static_cast<Real>(kv_in.dim(0)));
    } else {
      const Tensor logits = scale(
          matmul(slice_last(q, begin, head_dim), transpose(slice_last(k, begin, head_dim))), inv_sqrt);
      weights = softmax_rows(logits);
      if (mode == AttentionProbe::Weights::kDetached) weights = weights.detach();
    }
    if (probe && probe->record) probe->record->push_back(weights);
    per_head.push_back(matmul(weights, slice_last(v, begin, head_dim)));
  }
  return params.output(concat_last(per_head));
}

Mlp Mlp::init(std::size_t dim, std::size_t hidden, Rng& rng) {
  return {Linear::xavier(dim, hidden, rng), Linear::xavier(hidden, dim, rng)};
}

Tensor Mlp::operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }

void Mlp::collect(ParameterList& out, const std::string& prefix) const {
  fc1.collect(out, prefix + ".fc1");
  fc2.collect(out, prefix + ".fc2");
}

SelfBlock SelfBlock::init(const DualAttnConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.token_dim;
  SelfBlock b{LayerNormParams::identity(d), AttentionParams::init(d, rng),
              LayerNormParams::identity(d), Mlp::init(d, d * cfg.mlp_ratio, rng)};
  return b;
}

Tensor SelfBlock::operator()(const Tensor& x, std::size_t heads, const AttentionProbe* probe) const {
  const Tensor normed = norm_attn(x);
  const Tensor h = add(x, multi_head_attention(normed, normed, attn, heads, probe));
  return add(h, mlp(norm_mlp(h)));
}

void SelfBlock::collect(ParameterList& out, const std::string& prefix) const {
  norm_attn.collect(out, prefix + ".norm_attn");
  attn.collect(out, prefix + ".attn");
  norm_mlp.collect(out, prefix + ".norm_mlp");
  mlp.collect(out, prefix + ".mlp");
}

MemorialBlock MemorialBlock::init(const DualAttnConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.token_dim;
  MemorialBlock b{LayerNormParams::identity(d), LayerNormParams::identity(d),
                  AttentionParams::init(d, rng), LayerNormParams::identity(d),
                  Mlp::init(d, d * cfg.mlp_ratio, rng)};
  return b;
}

Tensor MemorialBlock::operator()(const Tensor& query_source, const Tensor& memory,
                                 std::size_t heads, const AttentionProbe* probe) const {
  if (query_source.dims() != memory.dims()) {
    throw ShapeError("memorial block: query " + shape_string(query_source.dims()) + " vs memory " +
                     shape_string(memory.dims()));
  }
  const Tensor h = add(memory, multi_head_attention(norm_query(query_source), norm_memory(memory),
                                                    attn, heads, probe));
  return add(h, mlp(norm_mlp(h)));
}

void MemorialBlock::collect(ParameterList& out, const std::string& prefix) const {
  norm_query.collect(out, prefix + ".norm_query");
  norm_memory.collect(out, prefix + ".norm_memory");
  attn.collect(out, prefix + ".attn");
  norm_mlp.collect(out, prefix + ".norm_mlp");
  mlp.collect(out, prefix + ".mlp");
}

DualAttentionTransformer::DualAttentionTransformer(const DualAttnConfig& config, std::size_t length,
                                                   Rng& rng)
    : config_(config) {
  config_.validate();
  for (std::size_t l = 0; l < config_.depth; ++l) {
    self_blocks_.push_back(SelfBlock::init(config_, rng));
    memorial_blocks_.push_back(MemorialBlock::init(config_, rng));
  }
  const std::size_t banks = config_.depth == 0 ? 1 : config_.depth;
  for (std::size_t l = 0; l < banks; ++l) {
    memory_.push_back(parameter(rng.normal_tensor({length, config_.token_dim}, Real(0.02))));
  }
}

DualStreams DualAttentionTransformer::operator()(const TokenSequence& tokens,
                                                 const AttentionProbe* probe) const {
  if (tokens.tokens.dims() != memory_.front().dims()) {
    throw ShapeError("token sequence " + shape_string(tokens.tokens.dims()) +
                     " does not match memory " + shape_string(memory_.front().dims()));
  }
  const Tensor input = add(tokens.tokens, tokens.pos);
  Tensor f = input;
  Tensor g = add(memory_[0], tokens.pos);
  for (std::size_t l = 0; l < config_.depth; ++l) {
    if (l > 0) g = add(g, memory_[l]);
    const Tensor& query = config_.memorial_query_source == QuerySource::kStream ? f : input;
    const Tensor next_f = self_blocks_[l](f, config_.heads, probe);
    g = memorial_blocks_[l](query, g, config_.heads, probe);
    f = next_f;
  }
  return {f, g};
}

void DualAttentionTransformer::collect(ParameterList& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < self_blocks_.size(); ++l) {
    self_blocks_[l].collect(out, prefix + ".self" + std::to_string(l));
    memorial_blocks_[l].collect(out, prefix + ".memorial" + std::to_string(l));
  }
  for (std::size_t l = 0; l < memory_.size(); ++l) {
    out.push_back({prefix + ".memory" + std::to_string(l), memory_[l]});
  }
}

OutputHeads::OutputHeads(std::vector<ScaleGeometry> geometry, std::size_t token_dim, Rng& rng)
    : geometry_(std::move(geometry)), token_dim_(token_dim) {
  validate_geometry(geometry_, token_dim_);
  const std::size_t d = token_dim_ / geometry_.size();
  for (const auto& g : geometry_) heads_.push_back(Linear::xavier(d, g.patch_features(), rng));
}

FeaturePyramid OutputHeads::operator()(const Tensor& tokens) const {
  if (tokens.rank() != 2 || tokens.dim(1) != token_dim_ || tokens.dim(0) != geometry_.front().tokens()) {
    throw ShapeError("unproject: tokens " + shape_string(tokens.dims()) + " incompatible with dim " +
                     std::to_string(token_dim_));
  }
  const std::size_t d = token_dim_ / geometry_.size();
  FeaturePyramid out;
  for (std::size_t i = 0; i < geometry_.size(); ++i) {
    const auto& g = geometry_[i];
    const Tensor features = heads_[i](slice_last(tokens, i * d, d));
    out.maps.push_back(unpatchify(features, g.height, g.width, g.channels, g.patch));
  }
  return out;
}

void OutputHeads::collect(ParameterList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    heads_[i].collect(out, prefix + ".head" + std::to_string(i));
  }
}

DADF_NAMESPACE_END
