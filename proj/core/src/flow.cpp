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

#include "dadf/flow.hpp"

#include <cmath>
#include <numbers>

#include "dadf/ops.hpp"

DADF_NAMESPACE_BEGIN

std::size_t variant_multiplicity(FlowVariant variant) {
  switch (variant) {
    case FlowVariant::kP: return 1;
    case FlowVariant::kPS:
    case FlowVariant::kPM: return 2;
    case FlowVariant::kD: return 3;
  }
  return 0;
}

std::string to_string(FlowVariant variant) {
  switch (variant) {
    case FlowVariant::kP: return "P";
    case FlowVariant::kPS: return "P-S";
    case FlowVariant::kPM: return "P-M";
    case FlowVariant::kD: return "D";
  }
  return "?";
}

FlowVariant parse_flow_variant(const std::string& text) {
  if (text == "P") return FlowVariant::kP;
  if (text == "P-S") return FlowVariant::kPS;
  if (text == "P-M") return FlowVariant::kPM;
  if (text == "D") return FlowVariant::kD;
  throw ContractError("unknown flow variant '" + text + "' (expected P, P-S, P-M or D)");
}

Tensor concat_joint(const Tensor& prior, const Tensor& self_rec, const Tensor& memory_rec,
                    FlowVariant variant) {
  if (prior.dims() != self_rec.dims() || prior.dims() != memory_rec.dims()) {
    throw ShapeError("concat_joint: prior " + shape_string(prior.dims()) + ", self " +
                     shape_string(self_rec.dims()) + ", memory " + shape_string(memory_rec.dims()));
  }
  switch (variant) {
    case FlowVariant::kP: return prior;
    case FlowVariant::kPS: {
      const Tensor parts[] = {prior, self_rec};
      return concat_last(parts);
    }
    case FlowVariant::kPM: {
      const Tensor parts[] = {prior, memory_rec};
      return concat_last(parts);
    }
    case FlowVariant::kD: {
      const Tensor parts[] = {prior, self_rec, memory_rec};
      return concat_last(parts);
    }
  }
  throw ContractError("invalid flow variant");
}

std::vector<Tensor> concat_joint(const FeaturePyramid& prior, const FeaturePyramid& self_rec,
                                 const FeaturePyramid& memory_rec, FlowVariant variant) {
  if (prior.scales() != self_rec.scales() || prior.scales() != memory_rec.scales()) {
    throw ShapeError("concat_joint: pyramids have different scale counts");
  }
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < prior.scales(); ++i) {
    out.push_back(concat_joint(prior.maps[i], self_rec.maps[i], memory_rec.maps[i], variant));
  }
  return out;
}

CouplingSubnet CouplingSubnet::init(std::size_t ca, std::size_t cb, Rng& rng) {
  return {parameter(rng.normal_tensor({3, 3, ca}, std::sqrt(Real(2) / Real(9)))),
          parameter(Tensor::zeros({ca})), Linear::xavier(ca, ca, rng), Linear::zeros(ca, cb)};
}

Tensor CouplingSubnet::operator()(const Tensor& x) const {
  const Tensor dw = add_bias(conv2d(x, depthwise, ConvMode::kDepthwise3x3), depthwise_bias);
  const Tensor hidden =
      leaky_relu(add_bias(conv2d(dw, pointwise.weight, ConvMode::kPointwise1x1), pointwise.bias));
  return add_bias(conv2d(hidden, output.weight, ConvMode::kPointwise1x1), output.bias);
}

void CouplingSubnet::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".depthwise", depthwise});
  out.push_back({prefix + ".depthwise_bias", depthwise_bias});
  pointwise.collect(out, prefix + ".pointwise");
  output.collect(out, prefix + ".output");
}

CouplingLayer::CouplingLayer(std::size_t channels, bool condition_on_upper, Real clamp, Rng& rng)
    : channels_(channels),
      ca_(channels / 2),
      cb_(channels - channels / 2),
      condition_on_upper_(condition_on_upper),
      clamp_(clamp),
      scale_net_(CouplingSubnet::init(channels / 2, channels - channels / 2, rng)),
      shift_net_(CouplingSubnet::init(channels / 2, channels - channels / 2, rng)) {
  if (channels < 2) throw ContractError("coupling layer needs at least 2 channels");
  if (!(clamp > 0)) throw ContractError("coupling clamp must be positive");
}

std::size_t CouplingLayer::a_begin() const { return condition_on_upper_ ? cb_ : 0; }
std::size_t CouplingLayer::b_begin() const { return condition_on_upper_ ? 0 : ca_; }

Tensor CouplingLayer::clamped_scale(const Tensor& xa) const {
  return scale(tanh(scale(scale_net_(xa), Real(1) / clamp_)), clamp_);
}

Tensor CouplingLayer::assemble(const Tensor& ya, const Tensor& yb) const {
  if (condition_on_upper_) {
    const Tensor parts[] = {yb, ya};
    return concat_last(parts);
  }
  const Tensor parts[] = {ya, yb};
  return concat_last(parts);
}

CouplingOutput CouplingLayer::forward(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(2) != channels_) {
    throw ShapeError("coupling layer expects H x W x " + std::to_string(channels_) + ", got " +
                     shape_string(x.dims()));
  }
  const Tensor xa = slice_last(x, a_begin(), ca_);
  const Tensor xb = slice_last(x, b_begin(), cb_);
  const Tensor s_hat = clamped_scale(xa);
  const Tensor yb = add(mul(xb, exp(s_hat)), shift_net_(xa));
  return {assemble(xa, yb), s_hat};
}

Tensor CouplingLayer::inverse(const Tensor& y) const {
  if (y.rank() != 3 || y.dim(2) != channels_) {
    throw ShapeError("coupling inverse expects H x W x " + std::to_string(channels_) + ", got " +
                     shape_string(y.dims()));
  }
  const Tensor ya = slice_last(y, a_begin(), ca_);
  const Tensor yb = slice_last(y, b_begin(), cb_);
  const Tensor xb = mul(sub(yb, shift_net_(ya)), exp(scale(clamped_scale(ya), Real(-1))));
  return assemble(ya, xb);
}

void CouplingLayer::collect(ParameterList& out, const std::string& prefix) const {
  scale_net_.collect(out, prefix + ".s");
  shift_net_.collect(out, prefix + ".t");
}

FlowStack::FlowStack(std::size_t channels, const FlowConfig& config, std::uint64_t seed)
    : channels_(channels),
      mean_(Tensor::zeros({channels})),
      inv_std_(Tensor::full({channels}, Real(1))) {
  if (config.n_blocks == 0) throw ContractError("flow needs at least one coupling block");
  Rng rng(seed);
  for (std::size_t l = 0; l < config.n_blocks; ++l) {
    if (l > 0) permutations_.push_back(rng.permutation(channels));
    layers_.emplace_back(channels, l % 2 == 1, config.clamp, rng);
  }
}

void FlowStack::fit_standardization(std::span<const Tensor> features) {
  if (features.empty()) throw ContractError("cannot fit flow standardization on an empty set");
  std::vector<double> s(channels_, 0.0), s2(channels_, 0.0);
  double count = 0;
  for (const Tensor& f : features) {
    if (f.rank() != 3 || f.dim(2) != channels_) {
      throw ShapeError("standardization feature " + shape_string(f.dims()) + " has wrong channels");
    }
    const auto v = f.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      s[i % channels_] += v[i];
      s2[i % channels_] += static_cast<double>(v[i]) * v[i];
    }
    count += static_cast<double>(v.size() / channels_);
  }
  std::vector<Real> mean(channels_), inv_std(channels_);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double mu = s[c] / count;
    const double var = std::max(s2[c] / count - mu * mu, 0.0);
    mean[c] = static_cast<Real>(mu);
    inv_std[c] = static_cast<Real>(1.0 / std::sqrt(var + 1e-6));
  }
  mean_ = Tensor::from({channels_}, std::move(mean));
  inv_std_ = Tensor::from({channels_}, std::move(inv_std));
}

void FlowStack::set_standardization(Tensor mean, Tensor inv_std) {
  if (mean.dims() != Shape{channels_} || inv_std.dims() != Shape{channels_}) {
    throw ShapeError("standardization tensors must be [" + std::to_string(channels_) + "]");
  }
  for (Real v : inv_std.data()) {
    if (!(v > 0)) throw ContractError("standardization inverse std must be positive");
  }
  mean_ = mean.detach();
  inv_std_ = inv_std.detach();
}

void FlowStack::append_permutation(std::vector<std::size_t> perm) {
  if (perm.size() != channels_) throw ShapeError("permutation length mismatch");
  tail_permutations_.push_back(std::move(perm));
}

FlowOutput FlowStack::forward(const Tensor& u) const {
  if (u.rank() != 3 || u.dim(2) != channels_) {
    throw ShapeError("flow expects H x W x " + std::to_string(channels_) + ", got " +
                     shape_string(u.dims()));
  }
  const std::size_t h = u.dim(0), w = u.dim(1);
  Real std_logdet = 0;
  for (Real v : inv_std_.data()) std_logdet += std::log(v);

  Tensor x = mul_lastaxis(add_bias(u, scale(mean_, Real(-1))), inv_std_);
  Tensor logdet = Tensor::scalar(std_logdet * static_cast<Real>(h * w));
  Tensor local = Tensor::full({h, w}, std_logdet);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0) x = permute_last(x, permutations_[l - 1]);
    CouplingOutput out = layers_[l].forward(x);
    check_finite(out.y, "flow coupling layer " + std::to_string(l));
    logdet = add(logdet, sum(out.log_scale));
    local = add(local, sum_last(out.log_scale));
    x = std::move(out.y);
  }
  for (const auto& perm : tail_permutations_) x = permute_last(x, perm);
  return {x, logdet, local};
}

Tensor FlowStack::inverse(const Tensor& z) const {
  if (z.rank() != 3 || z.dim(2) != channels_) {
    throw ShapeError("flow inverse expects H x W x " + std::to_string(channels_) + ", got " +
                     shape_string(z.dims()));
  }
  auto invert = [](const std::vector<std::size_t>& perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t j = 0; j < perm.size(); ++j) inv[perm[j]] = j;
    return inv;
  };
  Tensor x = z;
  for (auto it = tail_permutations_.rbegin(); it != tail_permutations_.rend(); ++it) {
    x = permute_last(x, invert(*it));
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    x = layers_[l].inverse(x);
    if (l > 0) x = permute_last(x, invert(permutations_[l - 1]));
  }
  std::vector<Real> std_dev(channels_);
  for (std::size_t c = 0; c < channels_; ++c) std_dev[c] = Real(1) / inv_std_.data()[c];
  return add_bias(mul_lastaxis(x, Tensor::from({channels_}, std::move(std_dev))), mean_);
}

void FlowStack::collect(ParameterList& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].collect(out, prefix + ".coupling" + std::to_string(l));
  }
}

Tensor log_likelihood(const Tensor& z, const Tensor& logdet) {
  const Real half_log_2pi = Real(0.5) * std::log(Real(2) * std::numbers::pi_v<Real>);
  const Real constant = -static_cast<Real>(z.numel()) * half_log_2pi;
  return add(add_scalar(scale(sum_squares(z), Real(-0.5)), constant), logdet);
}

LocationStats per_location_stats(const Tensor& u, const FlowStack& stack) {
  NoGradGuard guard;
  const FlowOutput out = stack.forward(u);
  LocationStats stats;
  stats.height = u.dim(0);
  stats.width = u.dim(1);
  const std::size_t c = u.dim(2);
  const auto z = out.z.data();
  stats.z_norm_sq.assign(stats.height * stats.width, Real(0));
  for (std::size_t p = 0; p < stats.z_norm_sq.size(); ++p) {
    for (std::size_t k = 0; k < c; ++k) stats.z_norm_sq[p] += z[p * c + k] * z[p * c + k];
  }
  stats.local_logdet.assign(out.local_logdet.data().begin(), out.local_logdet.data().end());
  stats.z = out.z;
  return stats;
}

DADF_NAMESPACE_END
