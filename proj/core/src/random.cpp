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

#include "dadf/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

DADF_NAMESPACE_BEGIN

// Draws are built from raw 64-bit outputs rather than <random>
// distributions, whose algorithms are implementation-defined.
static double unit_double(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

Real Rng::normal(Real mean, Real stddev) {
  // Box-Muller on (0, 1].
  const double u1 = 1.0 - unit_double(engine_);
  const double u2 = unit_double(engine_);
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  return mean + stddev * static_cast<Real>(z);
}

Real Rng::uniform(Real lo, Real hi) {
  return lo + (hi - lo) * static_cast<Real>(unit_double(engine_));
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(engine_() % span);
}

Tensor Rng::normal_tensor(Shape dims, Real stddev) {
  std::vector<Real> values(shape_numel(dims));
  for (Real& v : values) v = normal(0, stddev);
  return Tensor::from(std::move(dims), std::move(values));
}

Tensor Rng::uniform_tensor(Shape dims, Real lo, Real hi) {
  std::vector<Real> values(shape_numel(dims));
  for (Real& v : values) v = uniform(lo, hi);
  return Tensor::from(std::move(dims), std::move(values));
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Fisher-Yates with our own index draws.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(engine_() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

DADF_NAMESPACE_END
