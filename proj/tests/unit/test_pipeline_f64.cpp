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

#include "doctest.h"
#include "dadf/gradcheck.hpp"
#include "dadf/losses.hpp"
#include "dadf/ops.hpp"

using namespace dadf;

TEST_CASE("loss_self gradient") {
  Rng rng(1);
  const FeaturePyramid prior{{rng.normal_tensor({3, 3, 2}, 1), rng.normal_tensor({2, 2, 3}, 1)}};
  FeaturePyramid rec{{rng.normal_tensor({3, 3, 2}, 1), rng.normal_tensor({2, 2, 3}, 1)}};
  for (Tensor& t : rec.maps) t.set_requires_grad(true);
  std::vector<Tensor> inputs = rec.maps;
  CHECK(gradcheck([&] { return loss_self(prior, rec); }, inputs).max_rel_error < 1e-6);
}

TEST_CASE("loss_flow gradient on a 2-dim toy flow") {
  Rng rng(2);
  FlowConfig config;
  config.n_blocks = 4;
  std::vector<FlowStack> stacks{FlowStack(2, config, 3)};
  ParameterList params;
  stacks[0].collect(params, "flow");
  for (const NamedTensor& p : params) {
    Tensor t = p.tensor;
    for (Real& v : t.mutable_data()) v += rng.normal(0, Real(0.3));
  }
  std::vector<std::vector<Tensor>> batch;
  for (int k = 0; k < 4; ++k) batch.push_back({rng.normal_tensor({2, 2, 2}, 1)});
  std::vector<Tensor> inputs = tensors_of(params);
  CHECK(gradcheck([&] { return loss_flow(batch, stacks); }, inputs).max_rel_error < 1e-4);
}
