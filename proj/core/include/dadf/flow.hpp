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
#include <string>
#include <vector>

#include "dadf/encoder.hpp"
#include "dadf/layers.hpp"

DADF_NAMESPACE_BEGIN

/// Which features feed the flow: prior only, prior + self reconstruction,
/// prior + memory reconstruction, or all three (the default).
enum class FlowVariant { kP, kPS, kPM, kD };

std::size_t variant_multiplicity(FlowVariant variant);
std::string to_string(FlowVariant variant);
FlowVariant parse_flow_variant(const std::string& text);

/// Channel concatenation of one scale in the fixed order P, S, M.
Tensor concat_joint(const Tensor& prior, const Tensor& self_rec, const Tensor& memory_rec,
                    FlowVariant variant);
std::vector<Tensor> concat_joint(const FeaturePyramid& prior, const FeaturePyramid& self_rec,
                                 const FeaturePyramid& memory_rec, FlowVariant variant);

struct FlowConfig {
  std::size_t n_blocks = 8;
  Real clamp = Real(2);
  FlowVariant variant = FlowVariant::kD;
};

/// 3x3 depthwise-separable conv -> LeakyReLU -> 1x1 conv, mapping the
/// conditioning half (ca channels) to the transformed half (cb channels).
struct CouplingSubnet {
  Tensor depthwise;       // [3, 3, ca]
  Tensor depthwise_bias;  // [ca]
  Linear pointwise;       // ca -> ca
  Linear output;          // ca -> cb, zero at init

  static CouplingSubnet init(std::size_t ca, std::size_t cb, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(ParameterList& out, const std::string& prefix) const;
};

struct CouplingOutput {
  Tensor y;
  Tensor log_scale;  // clamped s-hat, [H, W, cb]
};

/// Affine coupling: y_a = x_a, y_b = x_b * exp(s_hat(x_a)) + t(x_a) with
/// s_hat = clamp * tanh(s / clamp).
class CouplingLayer {
 public:
  CouplingLayer(std::size_t channels, bool condition_on_upper, Real clamp, Rng& rng);

  CouplingOutput forward(const Tensor& x) const;
  Tensor inverse(const Tensor& y) const;

  std::size_t channels() const { return channels_; }
  CouplingSubnet& scale_net() { return scale_net_; }
  CouplingSubnet& shift_net() { return shift_net_; }
  void collect(ParameterList& out, const std::string& prefix) const;

 private:
  std::size_t a_begin() const;
  std::size_t b_begin() const;
  Tensor clamped_scale(const Tensor& xa) const;
  Tensor assemble(const Tensor& ya, const Tensor& yb) const;

  std::size_t channels_;
  std::size_t ca_;
  std::size_t cb_;
  bool condition_on_upper_;
  Real clamp_;
  CouplingSubnet scale_net_;
  CouplingSubnet shift_net_;
};

struct FlowOutput {
  Tensor z;             // same shape as the input
  Tensor logdet;        // scalar, exact log|det dz/du|
  Tensor local_logdet;  // [H, W]; sums to logdet
};

/// Per-scale flow: fixed per-channel standardization, then n_blocks
/// couplings with alternating split and a seeded channel permutation
/// between consecutive couplings. Forward maps data -> latent.
class FlowStack {
 public:
  FlowStack(std::size_t channels, const FlowConfig& config, std::uint64_t seed);

  FlowOutput forward(const Tensor& u) const;
  Tensor inverse(const Tensor& z) const;

  /// Fixes the standardization layer from training features [H, W, C].
  void fit_standardization(std::span<const Tensor> features);
  void set_standardization(Tensor mean, Tensor inv_std);
  const Tensor& standardize_mean() const { return mean_; }
  const Tensor& standardize_inv_std() const { return inv_std_; }

  /// Appends a fixed permutation after the last coupling (log-det 0).
  void append_permutation(std::vector<std::size_t> perm);

  std::size_t channels() const { return channels_; }
  std::vector<CouplingLayer>& layers() { return layers_; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  void collect(ParameterList& out, const std::string& prefix) const;

 private:
  std::size_t channels_;
  std::vector<CouplingLayer> layers_;
  std::vector<std::vector<std::size_t>> permutations_;  // before layer l (l >= 1)
  std::vector<std::vector<std::size_t>> tail_permutations_;
  Tensor mean_;
  Tensor inv_std_;
};

/// log N(z; 0, I) + logdet.
Tensor log_likelihood(const Tensor& z, const Tensor& logdet);

struct LocationStats {
  Tensor z;                        // latent, H x W x C
  std::vector<Real> z_norm_sq;     // H*W, row-major
  std::vector<Real> local_logdet;  // H*W
  std::size_t height = 0;
  std::size_t width = 0;
};

LocationStats per_location_stats(const Tensor& u, const FlowStack& stack);

DADF_NAMESPACE_END
