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

#include <string>
#include <vector>

// Invariant suites shared by `dadf selftest`, the unit tests and the
// acceptance binary. Every check carries its own pinned tolerance.
namespace dadf::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

using Report = std::vector<CheckResult>;

/// Forward/inverse round trip of every default-geometry flow stack at init,
/// with randomized weights and after a short fit, in f32 and f64.
Report flow_roundtrip_suite();
/// Analytic coupling log-det against a finite-difference Jacobian.
Report logdet_suite();
/// A trained 2-dim toy flow integrates to one.
Report density_suite();
/// Finite-difference gradcheck of every learnable module and loss in f64.
Report gradcheck_suite();
/// Metrics against brute-force oracles, plus monotone invariance.
Report metric_oracle_suite();

/// Union of all suites above.
Report selftest();

bool all_pass(const Report& report);
/// One "PASS|FAIL <name>  <detail>" line per check.
std::string format(const Report& report);

}  // namespace dadf::verify
