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

#include "dadf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dadf/random.hpp"

DADF_NAMESPACE_BEGIN

GradcheckResult gradcheck(const std::function<Tensor()>& loss_fn, std::span<Tensor> inputs,
                          const GradcheckOptions& options) {
  for (Tensor& t : inputs) t.zero_grad();
  backward(loss_fn());

  GradcheckResult result;
  Rng rng(options.seed);
  const auto h = static_cast<Real>(options.step);
  struct Norms {
    double diff_sq = 0, a_sq = 0, n_sq = 0;
  };
  std::vector<Norms> norms(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& t = inputs[k];
    const std::vector<Real> analytic = t.grad();
    std::vector<std::size_t> elems(t.numel());
    std::iota(elems.begin(), elems.end(), std::size_t{0});
    if (options.max_elements_per_tensor != 0 && elems.size() > options.max_elements_per_tensor) {
      const auto perm = rng.permutation(elems.size());
      elems.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(options.max_elements_per_tensor));
    }
    for (std::size_t i : elems) {
      auto data = t.mutable_data();
      const Real saved = data[i];
      double plus = 0, minus = 0;
      {
        NoGradGuard guard;
        data[i] = saved + h;
        plus = static_cast<double>(loss_fn().item());
        data[i] = saved - h;
        minus = static_cast<double>(loss_fn().item());
      }
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = static_cast<double>(analytic[i]);
      norms[k].diff_sq += (a - numeric) * (a - numeric);
      norms[k].a_sq += a * a;
      norms[k].n_sq += numeric * numeric;
    }
    result.elements_checked += elems.size();
  }
  double scale = 0;
  for (const Norms& n : norms) scale = std::max(scale, std::sqrt(std::max(n.a_sq, n.n_sq)));
  for (std::size_t k = 0; k < norms.size(); ++k) {
    const double denom =
        std::max({std::sqrt(std::max(norms[k].a_sq, norms[k].n_sq)), options.zero_floor * scale, 1e-12});
    const double rel = std::sqrt(norms[k].diff_sq) / denom;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_tensor = k;
    }
  }
  for (Tensor& t : inputs) t.zero_grad();
  return result;
}

DADF_NAMESPACE_END
