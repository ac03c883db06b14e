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

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dadf/tensor.hpp"

DADF_NAMESPACE_BEGIN

// Differentiable primitives. Shapes never broadcast except where an op says
// so (last-axis affine, scalar factors); any other mismatch is a ShapeError.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);
Tensor add_scalar(const Tensor& a, Real offset);

/// x + b with b broadcast along the last axis of x.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// x * g with g broadcast along the last axis of x.
Tensor mul_lastaxis(const Tensor& x, const Tensor& gain);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_squares(const Tensor& x);
/// Sum over the last axis; drops that axis (rank-1 input gives shape [1]).
Tensor sum_last(const Tensor& x);

Tensor exp(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor gelu(const Tensor& x);
/// y = x for x >= 0, slope * x otherwise; derivative at 0 is 1.
Tensor leaky_relu(const Tensor& x, Real slope = Real(0.01));

/// Row-wise softmax of a 2-D tensor with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);

/// Normalizes over the last axis, then applies gain and bias (both [d]).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Real eps = Real(1e-5));

enum class ConvMode { kDepthwise3x3, kPointwise1x1 };

/// Convolution on an H x W x C tensor with "same" zero padding.
///   kDepthwise3x3: kernel [3, 3, C], output channels = C.
///   kPointwise1x1: kernel [Cin, Cout].
Tensor conv2d(const Tensor& x, const Tensor& kernel, ConvMode mode);

using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;

/// out[i] = x[index[i]] viewed with `dims`. Covers transposes, slices,
/// permutations and patch (un)folding; the backward scatters-adds.
Tensor gather(const Tensor& x, Shape dims, IndexMap index);
Tensor reshape(const Tensor& x, Shape dims);
Tensor concat_last(std::span<const Tensor> parts);
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t count);
/// Reorders the last axis: out[..., j] = x[..., perm[j]].
Tensor permute_last(const Tensor& x, std::span<const std::size_t> perm);

DADF_NAMESPACE_END
