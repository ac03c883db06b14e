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
#include <functional>
#include <span>
#include <string>

#include "dadf/tensor.hpp"

DADF_NAMESPACE_BEGIN

struct GradcheckOptions {
  double step = 1e-6;
  /// 0 checks every element; otherwise a seeded random subset per tensor.
  std::size_t max_elements_per_tensor = 0;
  std::uint64_t seed = 0;
  /// Denominator floor as a fraction of the largest per-tensor gradient
  /// norm, so a tensor whose exact gradient is zero (e.g. a key bias under
  /// softmax shift invariance) is judged against the overall gradient scale
  /// rather than against its own rounding noise.
  double zero_floor = 1e-3;
};

struct GradcheckResult {
  /// max over tensors of ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2, floor)
  double max_rel_error = 0;
  std::size_t worst_tensor = 0;
  std::size_t elements_checked = 0;
};

/// Compares reverse-mode grads of `loss_fn` w.r.t. `inputs` (leaves with
/// requires_grad) against central finite differences. `loss_fn` must rebuild
/// the graph from the current input values on every call.
GradcheckResult gradcheck(const std::function<Tensor()>& loss_fn, std::span<Tensor> inputs,
                          const GradcheckOptions& options = {});

DADF_NAMESPACE_END
