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

#include <span>

#include "dadf/flow.hpp"
#include "dadf_verify/verify.hpp"

// Suites that exercise the library at one precision. This file is compiled
// once per flavour; the inline namespace keeps the two sets of symbols apart.
DADF_NAMESPACE_BEGIN
namespace checks {

/// Max |u - inverse(forward(u))| over `inputs`.
double roundtrip_error(const FlowStack& stack, std::span<const Tensor> inputs);

::dadf::verify::Report flow_roundtrip();

#if defined(DADF_REAL_F64)
::dadf::verify::Report logdet();
::dadf::verify::Report density();
::dadf::verify::Report gradcheck_modules();
#endif

}  // namespace checks
DADF_NAMESPACE_END
