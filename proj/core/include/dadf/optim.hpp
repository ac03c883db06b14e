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

#include "dadf/tensor.hpp"

DADF_NAMESPACE_BEGIN

struct AdamWOptions {
  Real lr = Real(1e-4);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
  Real weight_decay = Real(0.01);
};

/// AdamW with bias correction. Weight decay shrinks the parameter directly
/// and never enters the moment estimates.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWOptions options);

  /// Applies one update from the grads currently stored on the parameters.
  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  const std::vector<Tensor>& params() const { return params_; }
  const AdamWOptions& options() const { return options_; }

 private:
  std::vector<Tensor> params_;
  AdamWOptions options_;
  std::vector<std::vector<Real>> first_moment_;
  std::vector<std::vector<Real>> second_moment_;
  std::int64_t step_ = 0;
};

DADF_NAMESPACE_END
