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
#include "dadf_verify/verify.hpp"

using namespace dadf;

// The invariant suites are also what `dadf selftest` runs; here every
// check becomes its own assertion.
namespace {

void require_all(const verify::Report& report) {
  REQUIRE_FALSE(report.empty());
  for (const auto& c : report) {
    INFO(c.name << "  " << c.detail);
    CHECK(c.pass);
  }
}

}  // namespace

TEST_CASE("flow round trip in both precisions") { require_all(verify::flow_roundtrip_suite()); }
TEST_CASE("log-det against the numeric Jacobian") { require_all(verify::logdet_suite()); }
TEST_CASE("density integrates to one") { require_all(verify::density_suite()); }
TEST_CASE("module and loss gradients, including a full network step") {
  require_all(verify::gradcheck_suite());
}
TEST_CASE("metrics against brute-force oracles") { require_all(verify::metric_oracle_suite()); }
