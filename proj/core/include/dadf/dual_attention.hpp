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

#include <utility>
#include <vector>

#include "dadf/layers.hpp"
#include "dadf/patch_embed.hpp"

DADF_NAMESPACE_BEGIN

enum class QuerySource {
  kStream,  // memorial queries come from the self stream at the same depth
  kInput,   // memorial queries always come from E + pos
};

struct DualAttnConfig {
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t token_dim = 96;
  std::size_t mlp_ratio = 4;
  QuerySource memorial_query_source = QuerySource::kStream;

  void validate() const;
};

/// Instrumentation hooks for attention. Probes only; the default leaves
/// every block untouched.
struct AttentionProbe {
  enum class Weights {
    kLearned,   // softmax of the logits
    kDetached,  // softmax of the logits, cut from the graph
    kUniform,   // logits clamped to a constant: every weight is 1/L
  };
  Weights weights = Weights::kLearned;
  /// When set, every attention matrix (one per head) is appended here:
  /// self blocks first per depth, then the memorial block.
  std::vector<Tensor>* record = nullptr;
};

/// Multi-head attention projections (queries from one sequence, keys and
/// values from another).
struct AttentionParams {
  Linear query;
  Linear key;
  Linear value;
  Linear output;

  static AttentionParams init(std::size_t dim, Rng& rng);
  void collect(ParameterList& out, const std::string& prefix) const;
};

Tensor multi_head_attention(const Tensor& query_in, const Tensor& kv_in,
                            const AttentionParams& params, std::size_t heads,
                            const AttentionProbe* probe);

struct Mlp {
  Linear fc1;
  Linear fc2;

  static Mlp init(std::size_t dim, std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(ParameterList& out, const std::string& prefix) const;
};

/// Pre-norm transformer block: X + MHSA(LN(X)), then + MLP(LN(.)).
struct SelfBlock {
  LayerNormParams norm_attn;
  AttentionParams attn;
  LayerNormParams norm_mlp;
  Mlp mlp;

  static SelfBlock init(const DualAttnConfig& cfg, Rng& rng);
  Tensor operator()(const Tensor& x, std::size_t heads, const AttentionProbe* probe = nullptr) const;
  void collect(ParameterList& out, const std::string& prefix) const;
};

/// Cross-attention block on the memory stream:
///   G' = G + Attn(Q = LN_q(Q_src), K = V = LN_m(G));  out = G' + MLP(LN(G')).
/// The query source only reaches the output through the attention logits.
struct MemorialBlock {
  LayerNormParams norm_query;
  LayerNormParams norm_memory;
  AttentionParams attn;
  LayerNormParams norm_mlp;
  Mlp mlp;

  static MemorialBlock init(const DualAttnConfig& cfg, Rng& rng);
  Tensor operator()(const Tensor& query_source, const Tensor& memory, std::size_t heads,
                    const AttentionProbe* probe = nullptr) const;
  void collect(ParameterList& out, const std::string& prefix) const;
};

struct DualStreams {
  Tensor self_tokens;    // T_S
  Tensor memory_tokens;  // T_M
};

/// Two token streams propagated in parallel: the feature stream F through
/// self blocks and the memory stream G through memorial blocks.
class DualAttentionTransformer {
 public:
  DualAttentionTransformer(const DualAttnConfig& config, std::size_t length, Rng& rng);

  /// F_0 = E + pos, G_0 = M_0 + pos; before memorial block l > 0 the bank
  /// M_l is added to G.
  DualStreams operator()(const TokenSequence& tokens, const AttentionProbe* probe = nullptr) const;

  const DualAttnConfig& config() const { return config_; }
  std::vector<SelfBlock>& self_blocks() { return self_blocks_; }
  std::vector<MemorialBlock>& memorial_blocks() { return memorial_blocks_; }
  /// Learnable memory tokens M_l, one [L, dim] set per block (one for depth 0).
  std::vector<Tensor>& memory() { return memory_; }
  const std::vector<Tensor>& memory() const { return memory_; }
  void collect(ParameterList& out, const std::string& prefix) const;

 private:
  DualAttnConfig config_;
  std::vector<SelfBlock> self_blocks_;
  std::vector<MemorialBlock> memorial_blocks_;
  std::vector<Tensor> memory_;
};

/// Projection heads from reconstructed tokens back to pyramid shape.
class OutputHeads {
 public:
  OutputHeads(std::vector<ScaleGeometry> geometry, std::size_t token_dim, Rng& rng);

  /// Chunk i of every token -> C_i*P_i^2 features -> unpatchified map i.
  FeaturePyramid operator()(const Tensor& tokens) const;

  std::vector<Linear>& heads() { return heads_; }
  void collect(ParameterList& out, const std::string& prefix) const;

 private:
  std::vector<ScaleGeometry> geometry_;
  std::size_t token_dim_;
  std::vector<Linear> heads_;
};

DADF_NAMESPACE_END
