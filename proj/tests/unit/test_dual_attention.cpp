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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dadf/dual_attention.hpp"
#include "dadf/encoder.hpp"
#include "dadf/ops.hpp"
#include "dadf/patch_embed.hpp"

using namespace dadf;

namespace {

DualAttnConfig small_config(std::size_t depth = 2) {
  DualAttnConfig c;
  c.depth = depth;
  c.heads = 2;
  c.token_dim = 8;
  c.mlp_ratio = 2;
  return c;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a.data()[i] - b.data()[i])));
  }
  return worst;
}

void zero(Tensor& t) {
  auto d = t.mutable_data();
  std::fill(d.begin(), d.end(), Real(0));
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor out = Tensor::zeros(x.dims());
  const std::size_t cols = x.dim(1);
  for (std::size_t r = 0; r < perm.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.mutable_data()[r * cols + c] = x.at({perm[r], c});
  }
  return out;
}

}  // namespace

TEST_CASE("attention weights are row-stochastic") {
  Rng rng(1);
  const SelfBlock block = SelfBlock::init(small_config(), rng);
  std::vector<Tensor> record;
  AttentionProbe probe;
  probe.record = &record;
  block(rng.normal_tensor({5, 8}, 1), 2, &probe);
  REQUIRE(record.size() == 2);
  for (const Tensor& w : record) {
    for (std::size_t r = 0; r < w.dim(0); ++r) {
      Real total = 0;
      for (std::size_t c = 0; c < w.dim(1); ++c) total += w.at({r, c});
      CHECK(std::abs(total - 1) < 1e-6);
    }
  }
}

TEST_CASE("self block is permutation equivariant") {
  Rng rng(2);
  const SelfBlock block = SelfBlock::init(small_config(), rng);
  const Tensor x = rng.normal_tensor({4, 8}, 1);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  const Tensor a = permute_rows(block(x, 2), perm);
  const Tensor b = block(permute_rows(x, perm), 2);
  CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("zero output projections make the self block an identity") {
  Rng rng(3);
  SelfBlock block = SelfBlock::init(small_config(), rng);
  zero(block.attn.output.weight);
  zero(block.mlp.fc2.weight);
  const Tensor x = rng.normal_tensor({4, 8}, 1);
  CHECK(max_abs_diff(block(x, 2), x) == 0);
}

TEST_CASE("memorial block mixes memory values convexly") {
  Rng rng(4);
  MemorialBlock block = MemorialBlock::init(small_config(), rng);
  for (Linear* l : {&block.attn.value, &block.attn.output}) {
    zero(l->weight);
    for (std::size_t i = 0; i < 8; ++i) l->weight.mutable_data()[i * 8 + i] = 1;
  }
  zero(block.mlp.fc2.weight);
  const Tensor q = rng.normal_tensor({4, 8}, 1), g = rng.normal_tensor({4, 8}, 1);
  const Tensor out = block(q, g, 2);
  const Tensor normed = block.norm_memory(g);
  for (std::size_t c = 0; c < 8; ++c) {
    Real lo = normed.at({0, c}), hi = lo;
    for (std::size_t r = 1; r < 4; ++r) {
      lo = std::min(lo, normed.at({r, c}));
      hi = std::max(hi, normed.at({r, c}));
    }
    for (std::size_t r = 0; r < 4; ++r) {
      const Real mixed = out.at({r, c}) - g.at({r, c});
      CHECK(mixed >= lo - 1e-12);
      CHECK(mixed <= hi + 1e-12);
    }
  }
}

TEST_CASE("memorial block ignores a uniform shift of its queries") {
  Rng rng(5);
  const MemorialBlock block = MemorialBlock::init(small_config(), rng);
  const Tensor q = rng.normal_tensor({4, 8}, 1), g = rng.normal_tensor({4, 8}, 1);
  CHECK(max_abs_diff(block(q, g, 2), block(add_scalar(q, Real(3.5)), g, 2)) < 1e-5);
}

TEST_CASE("queries reach the memorial output only through the logits") {
  Rng rng(6);
  const MemorialBlock block = MemorialBlock::init(small_config(), rng);
  const Tensor g = rng.normal_tensor({4, 8}, 1);
  auto query_grad_norm = [&](AttentionProbe::Weights weights) {
    Tensor q = rng.normal_tensor({4, 8}, 1).set_requires_grad(true);
    AttentionProbe probe;
    probe.weights = weights;
    backward(sum_squares(block(q, g, 2, &probe)));
    double n = 0;
    for (Real v : q.grad()) n += static_cast<double>(v) * v;
    return n;
  };
  CHECK(query_grad_norm(AttentionProbe::Weights::kLearned) > 0);
  CHECK(query_grad_norm(AttentionProbe::Weights::kDetached) == 0);
  CHECK(query_grad_norm(AttentionProbe::Weights::kUniform) == 0);
}

TEST_CASE("transformer streams") {
  Rng rng(7);
  const DualAttentionTransformer t(small_config(), 4, rng);
  const TokenSequence a{rng.normal_tensor({4, 8}, 1), position_encoding(4, 8)};
  const TokenSequence b{rng.normal_tensor({4, 8}, 1), position_encoding(4, 8)};

  SUBCASE("with uniform attention the memory stream ignores the input") {
    AttentionProbe probe;
    probe.weights = AttentionProbe::Weights::kUniform;
    CHECK(max_abs_diff(t(a, &probe).memory_tokens, t(b, &probe).memory_tokens) == 0);
    CHECK(max_abs_diff(t(a).memory_tokens, t(b).memory_tokens) > 0);
  }
  SUBCASE("deterministic") {
    Rng again(7);
    const DualAttentionTransformer u(small_config(), 4, again);
    CHECK(max_abs_diff(t(a).self_tokens, u(a).self_tokens) == 0);
    CHECK(max_abs_diff(t(a).memory_tokens, u(a).memory_tokens) == 0);
  }
  SUBCASE("depth zero passes the inputs through") {
    DualAttentionTransformer empty(small_config(0), 4, rng);
    const DualStreams s = empty(a);
    CHECK(max_abs_diff(s.self_tokens, add(a.tokens, a.pos)) == 0);
    CHECK(max_abs_diff(s.memory_tokens, add(empty.memory()[0], a.pos)) == 0);
  }
}

TEST_CASE("output heads") {
  SUBCASE("default shapes match the prior pyramid") {
    Rng rng(8);
    const auto geometry = pyramid_geometry(EncoderConfig{}, PatchEmbedConfig{});
    const OutputHeads heads(geometry, 96, rng);
    const FeaturePyramid p = heads(Tensor::zeros({16, 96}));
    CHECK(p.maps[0].dims() == Shape{16, 16, 16});
    CHECK(p.maps[1].dims() == Shape{8, 8, 32});
    CHECK(p.maps[2].dims() == Shape{4, 4, 64});
  }
  SUBCASE("zero tokens give bias-only maps") {
    Rng rng(9);
    OutputHeads heads({{4, 4, 2, 2}, {2, 2, 3, 1}}, 16, rng);
    for (std::size_t k = 0; k < heads.heads()[1].bias.numel(); ++k) {
      heads.heads()[1].bias.mutable_data()[k] = Real(0.1) * static_cast<Real>(k + 1);
    }
    const FeaturePyramid p = heads(Tensor::zeros({4, 16}));
    for (Real v : p.maps[0].data()) CHECK(v == 0);
    for (std::size_t y = 0; y < 2; ++y) {
      for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          CHECK(p.maps[1].at({y, x, c}) == doctest::Approx(0.1 * static_cast<double>(c + 1)));
        }
      }
    }
  }
  SUBCASE("heads set to the embedding pseudo-inverse reconstruct the pyramid") {
    Rng rng(10);
    const std::vector<ScaleGeometry> geometry{{4, 4, 2, 2}, {2, 2, 3, 1}};
    PatchEmbedding embed(geometry, 16, rng);
    OutputHeads heads(geometry, 16, rng);
    for (std::size_t i = 0; i < 2; ++i) {
      Linear& e = embed.heads()[i];
      Linear& h = heads.heads()[i];
      const auto in = static_cast<Eigen::Index>(e.in_features());
      const auto out = static_cast<Eigen::Index>(e.out_features());
      for (std::size_t k = 0; k < e.bias.numel(); ++k) e.bias.mutable_data()[k] = rng.normal();
      const Eigen::MatrixXd w = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(
          e.weight.data().data(), in, out);
      const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(e.bias.data().data(), out);
      // Least squares: x W + b = t  ->  x = (t - b) pinv(W).
      const Eigen::MatrixXd pinv = w.completeOrthogonalDecomposition().pseudoInverse();
      const Eigen::VectorXd c = -(b.transpose() * pinv).transpose();
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index col = 0; col < in; ++col) {
          h.weight.mutable_data()[static_cast<std::size_t>(r * in + col)] = pinv(r, col);
        }
      }
      for (Eigen::Index col = 0; col < in; ++col) h.bias.mutable_data()[static_cast<std::size_t>(col)] = c(col);
    }
    const FeaturePyramid x{{rng.normal_tensor({4, 4, 2}, 1), rng.normal_tensor({2, 2, 3}, 1)}};
    const FeaturePyramid back = heads(embed(x).tokens);
    CHECK(max_abs_diff(back.maps[0], x.maps[0]) < 1e-4);
    CHECK(max_abs_diff(back.maps[1], x.maps[1]) < 1e-4);
  }
}
