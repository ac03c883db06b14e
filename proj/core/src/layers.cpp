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

#include "dadf/layers.hpp"

#include <cmath>

#include "dadf/ops.hpp"

DADF_NAMESPACE_BEGIN

std::vector<Tensor> tensors_of(const ParameterList& list) {
  std::vector<Tensor> out;
  out.reserve(list.size());
  for (const auto& p : list) out.push_back(p.tensor);
  return out;
}

Tensor parameter(Tensor values) {
  values.set_requires_grad(true);
  return values;
}

Linear Linear::xavier(std::size_t in, std::size_t out, Rng& rng) {
  const Real bound = std::sqrt(Real(6) / static_cast<Real>(in + out));
  return {parameter(rng.uniform_tensor({in, out}, -bound, bound)), parameter(Tensor::zeros({out}))};
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return {parameter(Tensor::zeros({in, out})), parameter(Tensor::zeros({out}))};
}

Tensor Linear::operator()(const Tensor& x) const { return add_bias(matmul(x, weight), bias); }

void Linear::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNormParams LayerNormParams::identity(std::size_t dim) {
  return {parameter(Tensor::full({dim}, Real(1))), parameter(Tensor::zeros({dim}))};
}

Tensor LayerNormParams::operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }

void LayerNormParams::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

DADF_NAMESPACE_END
