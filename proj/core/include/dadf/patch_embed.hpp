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

#include <array>
#include <vector>

#include "dadf/encoder.hpp"
#include "dadf/layers.hpp"

DADF_NAMESPACE_BEGIN

/// Shape of one pyramid level and the patch size used to tokenize it.
struct ScaleGeometry {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t patch = 1;

  std::size_t tokens() const { return (height / patch) * (width / patch); }
  std::size_t patch_features() const { return channels * patch * patch; }
  Shape map_shape() const { return {height, width, channels}; }
};

struct PatchEmbedConfig {
  std::array<std::size_t, 3> patch_sizes = {4, 2, 1};
  std::size_t token_dim = 96;
};

/// Geometry of the default three-level pyramid.
std::vector<ScaleGeometry> pyramid_geometry(const EncoderConfig& encoder,
                                            const PatchEmbedConfig& patch);

/// Token matrix [L, N*D] plus the matching fixed position encoding.
struct TokenSequence {
  Tensor tokens;
  Tensor pos;

  std::size_t length() const { return tokens.dim(0); }
  std::size_t dim() const { return tokens.dim(1); }
};

/// [H, W, C] -> [(H/P)(W/P), P*P*C]; each row is one patch flattened in
/// (row, col, channel) order, patches in row-major grid order.
Tensor patchify(const Tensor& map, std::size_t patch);
/// Inverse of patchify.
Tensor unpatchify(const Tensor& patches, std::size_t height, std::size_t width,
                  std::size_t channels, std::size_t patch);

/// Fixed 2-D sine/cosine encoding over a sqrt(L) x sqrt(L) grid: the first
/// half of the channels encodes the grid row, the second half the column.
/// Requires a square L and dim divisible by 4.
Tensor position_encoding(std::size_t length, std::size_t dim);

/// Per-scale affine projection heads C_i*P_i^2 -> D.
class PatchEmbedding {
 public:
  PatchEmbedding(std::vector<ScaleGeometry> geometry, std::size_t token_dim, Rng& rng);

  TokenSequence operator()(const FeaturePyramid& pyramid) const;

  const std::vector<ScaleGeometry>& geometry() const { return geometry_; }
  std::size_t token_dim() const { return token_dim_; }
  std::size_t scale_dim() const { return token_dim_ / geometry_.size(); }
  std::size_t length() const { return geometry_.front().tokens(); }
  std::vector<Linear>& heads() { return heads_; }
  const std::vector<Linear>& heads() const { return heads_; }
  void collect(ParameterList& out, const std::string& prefix) const;

 private:
  std::vector<ScaleGeometry> geometry_;
  std::size_t token_dim_;
  std::vector<Linear> heads_;
  Tensor pos_;
};

/// Checks that all scales tokenize to the same length and that token_dim
/// splits evenly across them.
void validate_geometry(const std::vector<ScaleGeometry>& geometry, std::size_t token_dim);

DADF_NAMESPACE_END
