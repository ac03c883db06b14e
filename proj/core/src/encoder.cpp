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

#include "dadf/encoder.hpp"

#include <cmath>
#include <string>

#include "dadf/random.hpp"

DADF_NAMESPACE_BEGIN

namespace {

constexpr Real kEncoderSlope = Real(0.2);

// 3x3 conv, stride 2, zero padding 1, HWC layout, followed by LeakyReLU.
std::vector<Real> strided_conv(const std::vector<Real>& in, std::size_t h, std::size_t w,
                               std::size_t cin, std::size_t cout, const std::vector<Real>& weight,
                               const std::vector<Real>& bias) {
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<Real> out(oh * ow * cout);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      Real* o = out.data() + (oy * ow + ox) * cout;
      for (std::size_t c = 0; c < cout; ++c) o[c] = bias[c];
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(2 * oy + ky) - 1;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(2 * ox + kx) - 1;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const Real* src = in.data() + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
          const Real* k = weight.data() + (ky * 3 + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const Real v = src[ci];
            const Real* krow = k + ci * cout;
            for (std::size_t c = 0; c < cout; ++c) o[c] += v * krow[c];
          }
        }
      }
      for (std::size_t c = 0; c < cout; ++c) o[c] = o[c] >= 0 ? o[c] : kEncoderSlope * o[c];
    }
  }
  return out;
}

}  // namespace

void EncoderConfig::validate() const {
  if (in_size == 0 || in_size % 16 != 0) {
    throw ContractError("encoder in_size must be a positive multiple of 16, got " +
                        std::to_string(in_size));
  }
  for (std::size_t c : stage_channels) {
    if (c == 0) throw ContractError("encoder stage channels must be positive");
  }
}

PriorEncoder::PriorEncoder(const EncoderConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, 0xE5C0DE));
  const auto& ch = config_.stage_channels;
  const std::size_t plan[4][2] = {{3, ch[0]}, {ch[0], ch[0]}, {ch[0], ch[1]}, {ch[1], ch[2]}};
  for (const auto& [cin, cout] : plan) {
    Conv conv{cin, cout, std::vector<Real>(9 * cin * cout), std::vector<Real>(cout)};
    // Kaiming-normal for the leaky activation.
    const Real std = std::sqrt(Real(2) / ((Real(1) + kEncoderSlope * kEncoderSlope) *
                                          static_cast<Real>(9 * cin)));
    for (Real& v : conv.weight) v = rng.normal(0, std);
    for (Real& v : conv.bias) v = rng.normal(0, Real(0.1));
    convs_.push_back(std::move(conv));
  }
}

Shape PriorEncoder::stage_shape(std::size_t stage) const {
  const std::size_t side = config_.in_size / EncoderConfig::kStageStrides.at(stage);
  return {side, side, config_.stage_channels.at(stage)};
}

FeaturePyramid PriorEncoder::extract(const Tensor& image) const {
  const std::size_t n = config_.in_size;
  if (image.dims() != Shape{n, n, 3}) {
    throw ShapeError("encoder expects a " + shape_string({n, n, 3}) + " image, got " +
                     shape_string(image.dims()));
  }
  std::vector<Real> x(image.data().begin(), image.data().end());
  std::size_t side = n;
  FeaturePyramid pyr;
  for (std::size_t k = 0; k < convs_.size(); ++k) {
    const Conv& conv = convs_[k];
    x = strided_conv(x, side, side, conv.in_channels, conv.out_channels, conv.weight, conv.bias);
    side /= 2;
    if (k >= 1) pyr.maps.push_back(Tensor::from({side, side, conv.out_channels}, x));
  }
  return pyr;
}

ImageNormalizer ImageNormalizer::fit(std::span<const Tensor> images) {
  if (images.empty()) throw ContractError("cannot fit image normalization on an empty set");
  std::array<double, 3> s{}, s2{};
  double count = 0;
  for (const Tensor& img : images) {
    const auto v = img.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      s[i % 3] += v[i];
      s2[i % 3] += static_cast<double>(v[i]) * v[i];
    }
    count += static_cast<double>(v.size() / 3);
  }
  ImageNormalizer norm;
  for (std::size_t c = 0; c < 3; ++c) {
    const double mu = s[c] / count;
    const double var = std::max(s2[c] / count - mu * mu, 1e-12);
    norm.mean[c] = static_cast<Real>(mu);
    norm.stddev[c] = static_cast<Real>(std::sqrt(var));
  }
  return norm;
}

Tensor ImageNormalizer::apply(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ShapeError("image must be H x W x 3, got " + shape_string(image.dims()));
  }
  std::vector<Real> out(image.data().begin(), image.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean[i % 3]) / stddev[i % 3];
  return Tensor::from(image.dims(), std::move(out));
}

DADF_NAMESPACE_END
