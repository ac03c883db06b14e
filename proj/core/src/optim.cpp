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

#include "dadf/optim.hpp"

#include <cmath>

DADF_NAMESPACE_BEGIN

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Tensor& p : params_) {
    if (!p.requires_grad()) throw ContractError("AdamW: parameter does not require grad");
    first_moment_.emplace_back(p.numel(), Real(0));
    second_moment_.emplace_back(p.numel(), Real(0));
  }
}

void AdamW::step() {
  ++step_;
  // Bias corrections evaluated in double so f32 builds do not drift.
  const double c1 = 1.0 - std::pow(static_cast<double>(options_.beta1), static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(static_cast<double>(options_.beta2), static_cast<double>(step_));
  const Real decay = Real(1) - options_.lr * options_.weight_decay;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    const std::vector<Real> g = p.grad();
    auto w = p.mutable_data();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (Real(1) - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (Real(1) - options_.beta2) * g[i] * g[i];
      const Real m_hat = static_cast<Real>(m[i] / c1);
      const Real v_hat = static_cast<Real>(v[i] / c2);
      w[i] = w[i] * decay - options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

void AdamW::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

DADF_NAMESPACE_END
