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

#include "dadf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Core>

DADF_NAMESPACE_BEGIN

namespace {

using detail::Node;
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

// Grad buffer of input `i`, or nullptr when that input is not tracked.
Real* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  if (!in.requires_grad) return nullptr;
  in.ensure_grad();
  return in.grad.data();
}

const std::vector<Real>& input_value(const Node& self, std::size_t i) {
  return self.inputs[i]->value;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.dims()) + " vs " +
                     shape_string(b.dims()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.dims()));
  }
}

// Elementwise unary op with derivative expressed through (x, y).
template <typename F, typename D>
Tensor unary(const Tensor& x, const char* name, F f, D df) {
  const auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(x.dims(), std::move(out), name, {x}, [df](Node& self) {
    Real* gx = input_grad(self, 0);
    if (!gx) return;
    const auto& xv = input_value(self, 0);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dims disagree " + shape_string(a.dims()) + " x " +
                     shape_string(b.dims()));
  }
  std::vector<Real> out(m * n);
  RowMatrixMap(out.data(), m, n).noalias() = ConstRowMatrixMap(a.data().data(), m, k) *
                                             ConstRowMatrixMap(b.data().data(), k, n);
  return make_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    const ConstRowMatrixMap gc(self.grad.data(), m, n);
    if (Real* ga = input_grad(self, 0)) {
      RowMatrixMap(ga, m, k).noalias() += gc * ConstRowMatrixMap(input_value(self, 1).data(), k, n).transpose();
    }
    if (Real* gb = input_grad(self, 1)) {
      RowMatrixMap(gb, k, n).noalias() += ConstRowMatrixMap(input_value(self, 0).data(), m, k).transpose() * gc;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  auto index = std::make_shared<std::vector<std::size_t>>(r * c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < r; ++j) (*index)[i * r + j] = j * c + i;
  }
  return gather(a, {c, r}, std::move(index));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.data(), bv = b.data();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.dims(), std::move(out), "add", {a, b}, [](Node& self) {
    for (std::size_t s = 0; s < 2; ++s) {
      if (Real* g = input_grad(self, s)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.data(), bv = b.data();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.dims(), std::move(out), "sub", {a, b}, [](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (Real* g = input_grad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.data(), bv = b.data();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.dims(), std::move(out), "mul", {a, b}, [](Node& self) {
    const auto& av = input_value(self, 0);
    const auto& bv = input_value(self, 1);
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (Real* g = input_grad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, Real factor) {
  return unary(
      a, "scale", [factor](Real x) { return factor * x; },
      [factor](Real, Real) { return factor; });
}

Tensor add_scalar(const Tensor& a, Real offset) {
  return unary(
      a, "add_scalar", [offset](Real x) { return x + offset; }, [](Real, Real) { return Real(1); });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank(bias, 1, "add_bias");
  const std::size_t d = bias.dim(0);
  if (x.dims().back() != d) {
    throw ShapeError("add_bias: last axis of " + shape_string(x.dims()) + " vs bias " +
                     shape_string(bias.dims()));
  }
  const auto xv = x.data(), bv = bias.data();
  std::vector<Real> out(xv.size());
  for (std::size_t r = 0; r < out.size(); r += d) {
    for (std::size_t c = 0; c < d; ++c) out[r + c] = xv[r + c] + bv[c];
  }
  return make_result(x.dims(), std::move(out), "add_bias", {x, bias}, [d](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (Real* g = input_grad(self, 1)) {
      for (std::size_t r = 0; r < self.grad.size(); r += d) {
        for (std::size_t c = 0; c < d; ++c) g[c] += self.grad[r + c];
      }
    }
  });
}

Tensor mul_lastaxis(const Tensor& x, const Tensor& gain) {
  require_rank(gain, 1, "mul_lastaxis");
  const std::size_t d = gain.dim(0);
  if (x.dims().back() != d) {
    throw ShapeError("mul_lastaxis: last axis of " + shape_string(x.dims()) + " vs gain " +
                     shape_string(gain.dims()));
  }
  const auto xv = x.data(), gv = gain.data();
  std::vector<Real> out(xv.size());
  for (std::size_t r = 0; r < out.size(); r += d) {
    for (std::size_t c = 0; c < d; ++c) out[r + c] = xv[r + c] * gv[c];
  }
  return make_result(x.dims(), std::move(out), "mul_lastaxis", {x, gain}, [d](Node& self) {
    const auto& xv = input_value(self, 0);
    const auto& gv = input_value(self, 1);
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t r = 0; r < self.grad.size(); r += d) {
        for (std::size_t c = 0; c < d; ++c) g[r + c] += self.grad[r + c] * gv[c];
      }
    }
    if (Real* g = input_grad(self, 1)) {
      for (std::size_t r = 0; r < self.grad.size(); r += d) {
        for (std::size_t c = 0; c < d; ++c) g[c] += self.grad[r + c] * xv[r + c];
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const auto xv = x.data();
  Real acc = 0;
  for (Real v : xv) acc += v;
  return make_result({1}, {acc}, "sum", {x}, [](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      const Real up = self.grad[0];
      const std::size_t n = input_value(self, 0).size();
      for (std::size_t i = 0; i < n; ++i) g[i] += up;
    }
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), Real(1) / static_cast<Real>(x.numel())); }

Tensor sum_squares(const Tensor& x) {
  const auto xv = x.data();
  Real acc = 0;
  for (Real v : xv) acc += v * v;
  return make_result({1}, {acc}, "sum_squares", {x}, [](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      const Real up = Real(2) * self.grad[0];
      const auto& xv = input_value(self, 0);
      for (std::size_t i = 0; i < xv.size(); ++i) g[i] += up * xv[i];
    }
  });
}

Tensor sum_last(const Tensor& x) {
  const std::size_t d = x.dims().back();
  Shape out_dims(x.dims().begin(), x.dims().end() - 1);
  if (out_dims.empty()) out_dims = {1};
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data();
  std::vector<Real> out(rows, Real(0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r] += xv[r * d + c];
  }
  return make_result(std::move(out_dims), std::move(out), "sum_last", {x}, [d](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t r = 0; r < self.grad.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) g[r * d + c] += self.grad[r];
      }
    }
  });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, "exp", [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, "tanh", [](Real v) { return std::tanh(v); }, [](Real, Real y) { return Real(1) - y * y; });
}

Tensor gelu(const Tensor& x) {
  constexpr Real kInvSqrt2 = Real(0.70710678118654752440);
  constexpr Real kInvSqrt2Pi = Real(0.39894228040143267794);
  return unary(
      x, "gelu", [](Real v) { return Real(0.5) * v * (Real(1) + std::erf(v * kInvSqrt2)); },
      [](Real v, Real) {
        const Real cdf = Real(0.5) * (Real(1) + std::erf(v * kInvSqrt2));
        return cdf + v * kInvSqrt2Pi * std::exp(Real(-0.5) * v * v);
      });
}

Tensor leaky_relu(const Tensor& x, Real slope) {
  return unary(
      x, "leaky_relu", [slope](Real v) { return v >= 0 ? v : slope * v; },
      [slope](Real v, Real) { return v >= 0 ? Real(1) : slope; });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t r = x.dim(0), c = x.dim(1);
  const auto xv = x.data();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < r; ++i) {
    const Real* in = xv.data() + i * c;
    Real* o = out.data() + i * c;
    const Real mx = *std::max_element(in, in + c);
    Real z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < c; ++j) o[j] /= z;
  }
  return make_result(x.dims(), std::move(out), "softmax_rows", {x}, [r, c](Node& self) {
    Real* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < r; ++i) {
      const Real* y = self.value.data() + i * c;
      const Real* gy = self.grad.data() + i * c;
      Real dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  require_rank(gain, 1, "layer_norm");
  require_same_shape(gain, bias, "layer_norm");
  const std::size_t d = gain.dim(0);
  if (x.dims().back() != d) {
    throw ShapeError("layer_norm: last axis of " + shape_string(x.dims()) + " vs " +
                     shape_string(gain.dims()));
  }
  if (!(eps > 0)) throw ContractError("layer_norm: eps must be positive");
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data(), gv = gain.data(), bv = bias.data();
  std::vector<Real> out(xv.size());
  auto xhat = std::make_shared<std::vector<Real>>(xv.size());
  auto inv_std = std::make_shared<std::vector<Real>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xv.data() + r * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<Real>(d);
    const Real is = Real(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (in[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_result(
      x.dims(), std::move(out), "layer_norm", {x, gain, bias},
      [d, rows, xhat, inv_std](Node& self) {
        const auto& gv = input_value(self, 1);
        Real* gx = input_grad(self, 0);
        Real* gg = input_grad(self, 1);
        Real* gb = input_grad(self, 2);
        std::vector<Real> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const Real* gy = self.grad.data() + r * d;
          const Real* h = xhat->data() + r * d;
          Real mean_dh = 0, mean_dh_h = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = gy[j] * gv[j];
            mean_dh += dh[j];
            mean_dh_h += dh[j] * h[j];
            if (gg) gg[j] += gy[j] * h[j];
            if (gb) gb[j] += gy[j];
          }
          if (!gx) continue;
          mean_dh /= static_cast<Real>(d);
          mean_dh_h /= static_cast<Real>(d);
          const Real is = (*inv_std)[r];
          for (std::size_t j = 0; j < d; ++j) {
            gx[r * d + j] += is * (dh[j] - mean_dh - h[j] * mean_dh_h);
          }
        }
      });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, ConvMode mode) {
  require_rank(x, 3, "conv2d");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (mode == ConvMode::kPointwise1x1) {
    require_rank(kernel, 2, "conv2d(pointwise)");
    if (kernel.dim(0) != c) {
      throw ShapeError("conv2d(pointwise): input channels " + std::to_string(c) + " vs kernel " +
                       shape_string(kernel.dims()));
    }
    return reshape(matmul(reshape(x, {h * w, c}), kernel), {h, w, kernel.dim(1)});
  }
  if (kernel.dims() != Shape{3, 3, c}) {
    throw ShapeError("conv2d(depthwise): kernel " + shape_string(kernel.dims()) +
                     " does not match input channels " + std::to_string(c));
  }
  const auto xv = x.data(), kv = kernel.data();
  std::vector<Real> out(xv.size(), Real(0));
  const auto ih = static_cast<std::ptrdiff_t>(h), iw = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t y = 0; y < ih; ++y) {
    for (std::ptrdiff_t xx = 0; xx < iw; ++xx) {
      Real* o = out.data() + (y * iw + xx) * c;
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        const std::ptrdiff_t sy = y + dy;
        if (sy < 0 || sy >= ih) continue;
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          const std::ptrdiff_t sx = xx + dx;
          if (sx < 0 || sx >= iw) continue;
          const Real* in = xv.data() + (sy * iw + sx) * c;
          const Real* k = kv.data() + ((dy + 1) * 3 + (dx + 1)) * c;
          for (std::size_t ch = 0; ch < c; ++ch) o[ch] += in[ch] * k[ch];
        }
      }
    }
  }
  return make_result(x.dims(), std::move(out), "conv2d_depthwise", {x, kernel},
                     [ih, iw, c](Node& self) {
                       Real* gx = input_grad(self, 0);
                       Real* gk = input_grad(self, 1);
                       const auto& xv = input_value(self, 0);
                       const auto& kv = input_value(self, 1);
                       for (std::ptrdiff_t y = 0; y < ih; ++y) {
                         for (std::ptrdiff_t xx = 0; xx < iw; ++xx) {
                           const Real* go = self.grad.data() + (y * iw + xx) * c;
                           for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                             const std::ptrdiff_t sy = y + dy;
                             if (sy < 0 || sy >= ih) continue;
                             for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                               const std::ptrdiff_t sx = xx + dx;
                               if (sx < 0 || sx >= iw) continue;
                               const std::size_t in_off = (sy * iw + sx) * c;
                               const std::size_t k_off = ((dy + 1) * 3 + (dx + 1)) * c;
                               if (gx) {
                                 for (std::size_t ch = 0; ch < c; ++ch) gx[in_off + ch] += go[ch] * kv[k_off + ch];
                               }
                               if (gk) {
                                 for (std::size_t ch = 0; ch < c; ++ch) gk[k_off + ch] += go[ch] * xv[in_off + ch];
                               }
                             }
                           }
                         }
                       }
                     });
}

Tensor gather(const Tensor& x, Shape dims, IndexMap index) {
  if (!index || index->size() != shape_numel(dims)) {
    throw ShapeError("gather: index size does not match " + shape_string(dims));
  }
  const auto xv = x.data();
  std::vector<Real> out(index->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t src = (*index)[i];
    if (src >= xv.size()) throw ShapeError("gather: index out of range");
    out[i] = xv[src];
  }
  return make_result(std::move(dims), std::move(out), "gather", {x}, [index](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t i = 0; i < index->size(); ++i) g[(*index)[i]] += self.grad[i];
    }
  });
}

Tensor reshape(const Tensor& x, Shape dims) {
  if (shape_numel(dims) != x.numel()) {
    throw ShapeError("reshape: " + shape_string(x.dims()) + " to " + shape_string(dims));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  return make_result(std::move(dims), std::move(out), "reshape", {x}, [](Node& self) {
    if (Real* g = input_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor concat_last(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  const Shape& first = parts[0].dims();
  const Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    const Shape& d = p.dims();
    if (d.size() != first.size() || !std::equal(lead.begin(), lead.end(), d.begin())) {
      throw ShapeError("concat_last: leading dims differ " + shape_string(first) + " vs " +
                       shape_string(d));
    }
    widths.push_back(d.back());
    total += d.back();
  }
  const std::size_t rows = shape_numel(lead);
  std::vector<Real> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  Shape dims = lead;
  dims.push_back(total);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result(std::move(dims), std::move(out), "concat_last", std::move(inputs),
                     [widths, rows, total](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (Real* g = input_grad(self, k)) {
                           for (std::size_t r = 0; r < rows; ++r) {
                             const Real* src = self.grad.data() + r * total + offset;
                             for (std::size_t j = 0; j < widths[k]; ++j) g[r * widths[k] + j] += src[j];
                           }
                         }
                         offset += widths[k];
                       }
                     });
}

Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t d = x.dims().back();
  if (count == 0 || begin + count > d) {
    throw ShapeError("slice_last: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") outside " + shape_string(x.dims()));
  }
  const std::size_t rows = x.numel() / d;
  auto index = std::make_shared<std::vector<std::size_t>>(rows * count);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < count; ++j) (*index)[r * count + j] = r * d + begin + j;
  }
  Shape dims = x.dims();
  dims.back() = count;
  return gather(x, std::move(dims), std::move(index));
}

Tensor permute_last(const Tensor& x, std::span<const std::size_t> perm) {
  const std::size_t d = x.dims().back();
  if (perm.size() != d) throw ShapeError("permute_last: permutation length mismatch");
  const std::size_t rows = x.numel() / d;
  auto index = std::make_shared<std::vector<std::size_t>>(rows * d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) (*index)[r * d + j] = r * d + perm[j];
  }
  return gather(x, x.dims(), std::move(index));
}

DADF_NAMESPACE_END
