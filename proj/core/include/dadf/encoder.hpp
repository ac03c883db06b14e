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
#include <cstdint>
#include <span>
#include <vector>

#include "dadf/tensor.hpp"

DADF_NAMESPACE_BEGIN

/// Frozen prior-feature extractor configuration. Three stages at strides
/// 4, 8 and 16 of the input.
struct EncoderConfig {
  std::size_t in_size = 64;
  std::array<std::size_t, 3> stage_channels = {16, 32, 64};
  std::uint64_t seed = 0;

  static constexpr std::array<std::size_t, 3> kStageStrides = {4, 8, 16};
  static constexpr std::size_t kStages = 3;

  void validate() const;
};

/// One feature map per scale, each H_i x W_i x C_i.
struct FeaturePyramid {
  std::vector<Tensor> maps;

  std::size_t scales() const { return maps.size(); }
};

/// Random-weight convolution stack, generated once from the seed and never
/// trained: 3x3/stride-2 conv x2 to reach stage 1, then one 3x3/stride-2
/// conv per further stage, each followed by LeakyReLU(0.2).
class PriorEncoder {
 public:
  explicit PriorEncoder(const EncoderConfig& config);

  /// `image` is in_size x in_size x 3, already normalized.
  FeaturePyramid extract(const Tensor& image) const;

  const EncoderConfig& config() const { return config_; }
  /// Output shape of stage i.
  Shape stage_shape(std::size_t stage) const;

 private:
  struct Conv {
    std::size_t in_channels;
    std::size_t out_channels;
    std::vector<Real> weight;  // [3][3][in][out]
    std::vector<Real> bias;    // [out]
  };

  EncoderConfig config_;
  std::vector<Conv> convs_;
};

/// Per-channel standardization of raw [0,1] images, fit on the training set.
struct ImageNormalizer {
  std::array<Real, 3> mean = {0, 0, 0};
  std::array<Real, 3> stddev = {1, 1, 1};

  static ImageNormalizer fit(std::span<const Tensor> images);
  Tensor apply(const Tensor& image) const;
};

DADF_NAMESPACE_END
