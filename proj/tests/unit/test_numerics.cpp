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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dadf/errors.hpp"
#include "dadf/gradcheck.hpp"
#include "dadf/ops.hpp"
#include "dadf/optim.hpp"
#include "dadf/random.hpp"

using namespace dadf;

namespace {

Tensor leaf(Shape dims, Rng& rng, Real stddev = 1) {
  Tensor t = rng.normal_tensor(std::move(dims), stddev);
  t.set_requires_grad(true);
  return t;
}

// Sum of the output against fixed random weights, so every output element
// carries a distinct cotangent.
Tensor project(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(y, rng.normal_tensor(y.dims(), 1)));
}

}  // namespace

TEST_CASE("tensor shape invariants") {
  const Tensor t = Tensor::zeros({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(shape_numel({2, 3, 4}) == 24);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  Tensor x = Tensor::from({3}, {1, 2, 3}).set_requires_grad(true);
  backward(sum(x));
  CHECK(x.grad().size() == x.numel());
}

TEST_CASE("non-finite values are an error state") {
  const Tensor bad = Tensor::from({2}, {1, std::nan("")});
  CHECK_THROWS_AS(check_finite(bad, "probe"), NumericError);
}

TEST_CASE("tape lists inputs before consumers") {
  Tensor a = Tensor::from({2}, {1, 2}).set_requires_grad(true);
  const Tensor b = mul(a, a);
  const Tensor c = sum(add(b, a));
  const Tape tape = Tape::record(c);
  const auto& nodes = tape.nodes();
  CHECK(nodes.back() == c.node().get());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& in : nodes[i]->inputs) {
      const auto pos = std::find(nodes.begin(), nodes.end(), in.get()) - nodes.begin();
      CHECK(static_cast<std::size_t>(pos) < i);
    }
  }
}

TEST_CASE("matmul") {
  const Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor p = matmul(eye, m);
  CHECK(std::vector<Real>(p.data().begin(), p.data().end()) == std::vector<Real>{1, 2, 3, 4});
  CHECK(matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4})).item() == 11);
  CHECK_THROWS_AS(matmul(m, Tensor::zeros({3, 1})), ShapeError);

  Rng rng(1);
  Tensor a = leaf({5, 4}, rng), b = leaf({4, 3}, rng);
  std::vector<Tensor> in{a, b};
  const auto r = gradcheck([&] { return project(matmul(a, b), 2); }, in);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("softmax_rows") {
  const Tensor u = softmax_rows(Tensor::zeros({1, 3}));
  for (Real v : u.data()) CHECK(v == doctest::Approx(1.0 / 3));
  const Tensor big = softmax_rows(Tensor::from({1, 2}, {1000, 0}));
  CHECK(big.data()[0] == doctest::Approx(1).epsilon(1e-6));
  CHECK(big.data()[1] < 1e-6);

  Rng rng(3);
  Tensor x = leaf({3, 4}, rng);
  const Tensor s = softmax_rows(x);
  for (std::size_t r = 0; r < 3; ++r) {
    Real total = 0;
    for (std::size_t c = 0; c < 4; ++c) total += s.at({r, c});
    CHECK(std::abs(total - 1) < 1e-6);
  }
  std::vector<Tensor> in{x};
  CHECK(gradcheck([&] { return project(softmax_rows(x), 4); }, in).max_rel_error < 1e-6);
}

TEST_CASE("layer_norm") {
  const Tensor one = Tensor::full({2}, 1), zero = Tensor::zeros({2});
  const Tensor flat = layer_norm(Tensor::full({1, 2}, 5), one, zero);
  for (Real v : flat.data()) CHECK(v == 0);
  const Tensor two = layer_norm(Tensor::from({1, 2}, {1, 3}), one, zero, Real(1e-12));
  CHECK(two.data()[0] == doctest::Approx(-1));
  CHECK(two.data()[1] == doctest::Approx(1));

  Rng rng(5);
  Tensor x = leaf({3, 6}, rng), g = leaf({6}, rng), b = leaf({6}, rng);
  std::vector<Tensor> in{x, g, b};
  CHECK(gradcheck([&] { return project(layer_norm(x, g, b), 6); }, in).max_rel_error < 1e-5);
}

TEST_CASE("conv2d") {
  Rng rng(7);
  const Tensor x = rng.normal_tensor({5, 5, 2}, 1);
  Tensor delta = Tensor::zeros({3, 3, 2});
  delta.mutable_data()[(1 * 3 + 1) * 2 + 0] = 1;
  delta.mutable_data()[(1 * 3 + 1) * 2 + 1] = 1;
  const Tensor same = conv2d(x, delta, ConvMode::kDepthwise3x3);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(same.data()[i] == x.data()[i]);

  const Tensor single = rng.normal_tensor({4, 4, 1}, 1);
  const Tensor doubled = conv2d(single, Tensor::from({1, 1}, {2}), ConvMode::kPointwise1x1);
  for (std::size_t i = 0; i < single.numel(); ++i) CHECK(doubled.data()[i] == 2 * single.data()[i]);

  Tensor in = leaf({6, 6, 4}, rng), dk = leaf({3, 3, 4}, rng), pk = leaf({4, 3}, rng);
  std::vector<Tensor> dw{in, dk}, pw{in, pk};
  CHECK(gradcheck([&] { return project(conv2d(in, dk, ConvMode::kDepthwise3x3), 8); }, dw)
            .max_rel_error < 1e-5);
  CHECK(gradcheck([&] { return project(conv2d(in, pk, ConvMode::kPointwise1x1), 9); }, pw)
            .max_rel_error < 1e-5);
}

TEST_CASE("leaky_relu") {
  CHECK(leaky_relu(Tensor::scalar(0)).item() == 0);
  CHECK(leaky_relu(Tensor::scalar(-2), Real(0.1)).item() == doctest::Approx(-0.2));
  // Inputs bounded away from the kink.
  Tensor x = Tensor::from({6}, {-2, -1.5, -0.5, 0.5, 1.2, 3}).set_requires_grad(true);
  std::vector<Tensor> in{x};
  CHECK(gradcheck([&] { return project(leaky_relu(x, Real(0.1)), 10); }, in).max_rel_error < 1e-7);
}

TEST_CASE("backward") {
  Tensor x = Tensor::from({3}, {1, -2, 4}).set_requires_grad(true);
  backward(sum(x));
  for (Real g : x.grad()) CHECK(g == 1);
  x.zero_grad();
  backward(sum_squares(x));
  const auto g = x.grad();
  for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == 2 * x.data()[i]);
  CHECK_THROWS_AS(backward(x), ContractError);
}

TEST_CASE("adamw") {
  SUBCASE("zero grad, zero decay leaves params unchanged") {
    Tensor p = Tensor::from({2}, {1, -1}).set_requires_grad(true);
    AdamW opt({p}, {Real(0.1), Real(0.9), Real(0.999), Real(1e-8), Real(0)});
    opt.step();
    CHECK(p.data()[0] == 1);
    CHECK(p.data()[1] == -1);
  }
  SUBCASE("first step moves by lr after bias correction") {
    Tensor p = Tensor::from({1}, {0.5}).set_requires_grad(true);
    AdamW opt({p}, {Real(0.1), Real(0.9), Real(0.999), Real(1e-8), Real(0)});
    backward(sum(p));
    opt.step();
    CHECK(std::abs(p.data()[0] - (0.5 - 0.1)) < 1e-6);
  }
  SUBCASE("decay alone scales the parameter") {
    Tensor p = Tensor::from({1}, {2}).set_requires_grad(true);
    AdamW opt({p}, {Real(0.1), Real(0.9), Real(0.999), Real(1e-8), Real(0.01)});
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(2 * (1 - 0.1 * 0.01)));
  }
}

TEST_CASE("rng is reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}
