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

#include "dadf/patch_embed.hpp"

#include <cmath>
#include <string>

#include "dadf/ops.hpp"

DADF_NAMESPACE_BEGIN

namespace {

// Maps token-matrix element order to map element order.
IndexMap patch_index(std::size_t h, std::size_t w, std::size_t c, std::size_t p) {
  const std::size_t gw = w / p;
  const std::size_t features = p * p * c;
  auto index = std::make_shared<std::vector<std::size_t>>(h * w * c);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t token = (y / p) * gw + x / p;
      const std::size_t within = ((y % p) * p + x % p) * c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        (*index)[token * features + within + ch] = (y * w + x) * c + ch;
      }
    }
  }
  return index;
}

}  // namespace

std::vector<ScaleGeometry> pyramid_geometry(const EncoderConfig& encoder,
                                            const PatchEmbedConfig& patch) {
  encoder.validate();
  std::vector<ScaleGeometry> out;
  for (std::size_t i = 0; i < EncoderConfig::kStages; ++i) {
    const std::size_t side = encoder.in_size / EncoderConfig::kStageStrides[i];
    out.push_back({side, side, encoder.stage_channels[i], patch.patch_sizes[i]});
  }
  validate_geometry(out, patch.token_dim);
  return out;
}

void validate_geometry(const std::vector<ScaleGeometry>& geometry, std::size_t token_dim) {
  if (geometry.empty()) throw ShapeError("at least one scale is required");
  if (token_dim % geometry.size() != 0) {
    throw ShapeError("token_dim " + std::to_string(token_dim) + " not divisible by " +
                     std::to_string(geometry.size()) + " scales");
  }
  const std::size_t length = geometry.front().tokens();
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const auto& g = geometry[i];
    if (g.patch == 0 || g.height % g.patch != 0 || g.width % g.patch != 0) {
      throw ShapeError("scale " + std::to_string(i) + ": " + shape_string(g.map_shape()) +
                       " is not divisible into " + std::to_string(g.patch) + "x" +
                       std::to_string(g.patch) + " patches");
    }
    if (g.tokens() != length) {
      throw ShapeError("scale " + std::to_string(i) + " yields " + std::to_string(g.tokens()) +
                       " tokens, scale 0 yields " + std::to_string(length));
    }
  }
}

Tensor patchify(const Tensor& map, std::size_t patch) {
  if (map.rank() != 3) throw ShapeError("patchify expects H x W x C, got " + shape_string(map.dims()));
  const std::size_t h = map.dim(0), w = map.dim(1), c = map.dim(2);
  if (patch == 0 || h % patch != 0 || w % patch != 0) {
    throw ShapeError("patchify: " + shape_string(map.dims()) + " not divisible by patch " +
                     std::to_string(patch));
  }
  return gather(map, {(h / patch) * (w / patch), patch * patch * c}, patch_index(h, w, c, patch));
}

Tensor unpatchify(const Tensor& patches, std::size_t height, std::size_t width,
                  std::size_t channels, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0 ||
      patches.dims() != Shape{(height / patch) * (width / patch), patch * patch * channels}) {
    throw ShapeError("unpatchify: " + shape_string(patches.dims()) + " does not tile " +
                     shape_string({height, width, channels}) + " with patch " +
                     std::to_string(patch));
  }
  const auto forward = patch_index(height, width, channels, patch);
  auto inverse = std::make_shared<std::vector<std::size_t>>(forward->size());
  for (std::size_t i = 0; i < forward->size(); ++i) (*inverse)[(*forward)[i]] = i;
  return gather(patches, {height, width, channels}, std::move(inverse));
}

Tensor position_encoding(std::size_t length, std::size_t dim) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(length))));
  if (length == 0 || side * side != length) {
    throw ContractError("position encoding needs a square token count, got " + std::to_string(length));
  }
  if (dim == 0 || dim % 4 != 0) {
    throw ContractError("position encoding dim must be a positive multiple of 4, got " +
                        std::to_string(dim));
  }
  const std::size_t quarter = dim / 4;
  std::vector<Real> values(length * dim);
  for (std::size_t t = 0; t < length; ++t) {
    const double coords[2] = {static_cast<double>(t / side), static_cast<double>(t % side)};
    for (std::size_t axis = 0; axis < 2; ++axis) {
      for (std::size_t k = 0; k < quarter; ++k) {
        const double omega = 1.0 / std::pow(10000.0, static_cast<double>(k) / static_cast<double>(quarter));
        const double angle = coords[axis] * omega;
        const std::size_t base = t * dim + axis * 2 * quarter;
        values[base + k] = static_cast<Real>(std::sin(angle));
        values[base + quarter + k] = static_cast<Real>(std::cos(angle));
      }
    }
  }
  return Tensor::from({length, dim}, std::move(values));
}

PatchEmbedding::PatchEmbedding(std::vector<ScaleGeometry> geometry, std::size_t token_dim, Rng& rng)
    : geometry_(std::move(geometry)), token_dim_(token_dim) {
  validate_geometry(geometry_, token_dim_);
  for (const auto& g : geometry_) heads_.push_back(Linear::xavier(g.patch_features(), scale_dim(), rng));
  pos_ = position_encoding(length(), token_dim_);
}

TokenSequence PatchEmbedding::operator()(const FeaturePyramid& pyramid) const {
  if (pyramid.scales() != geometry_.size()) {
    throw ShapeError("pyramid has " + std::to_string(pyramid.scales()) + " scales, expected " +
                     std::to_string(geometry_.size()));
  }
  std::vector<Tensor> per_scale;
  for (std::size_t i = 0; i < geometry_.size(); ++i) {
    const auto& g = geometry_[i];
    if (pyramid.maps[i].dims() != g.map_shape()) {
      throw ShapeError("scale " + std::to_string(i) + " map is " +
                       shape_string(pyramid.maps[i].dims()) + ", expected " +
                       shape_string(g.map_shape()));
    }
    per_scale.push_back(heads_[i](patchify(pyramid.maps[i], g.patch)));
  }
  return {concat_last(per_scale), pos_};
}

void PatchEmbedding::collect(ParameterList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    heads_[i].collect(out, prefix + ".head" + std::to_string(i));
  }
}

DADF_NAMESPACE_END
