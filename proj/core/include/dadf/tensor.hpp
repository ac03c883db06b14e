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
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dadf/errors.hpp"
#include "dadf/real.hpp"

DADF_NAMESPACE_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& dims);
std::string shape_string(const Shape& dims);

namespace detail {

// One vertex of the define-by-run graph. A node that was produced by an op
// keeps its inputs alive and knows how to push its own grad into theirs.
struct Node {
  Shape dims;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until a backward pass touches the node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
  }
};

}  // namespace detail

/// Dense row-major n-dimensional array with optional gradient tracking.
///
/// Copies are shallow: two Tensor handles may refer to the same node. Values
/// produced by ops are never mutated afterwards; only leaves (parameters and
/// inputs) expose mutable storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape dims);
  static Tensor full(Shape dims, Real value);
  static Tensor from(Shape dims, std::vector<Real> values);
  static Tensor scalar(Real value);

  bool defined() const { return node_ != nullptr; }
  const Shape& dims() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return dims().size(); }
  std::size_t numel() const { return data().size(); }

  std::span<const Real> data() const;
  /// Mutable view; only legal on leaves.
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  /// Accumulated gradient (zeros if no backward pass has reached this leaf).
  std::vector<Real> grad() const;
  void zero_grad();

  /// New leaf sharing no graph history; values are copied.
  Tensor detach() const;
  /// Deep copy of values into a fresh leaf with the same requires_grad flag.
  Tensor clone() const;

  const char* op_name() const;

  // Graph plumbing for op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Topologically ordered list of the graph nodes that lead to a root, i.e.
/// the record of primitive ops replayed in reverse by backward().
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<detail::Node*>& nodes() const { return nodes_; }

 private:
  std::vector<detail::Node*> nodes_;  // inputs before consumers
};

/// Reverse-mode pass from a scalar loss. Leaf grads accumulate across calls
/// until zero_grad(); intermediate grads are recomputed each call.
void backward(const Tensor& loss);

/// Builds an op result. When grad mode is off or no input requires grad the
/// result is a plain leaf and `backward_fn` is dropped.
Tensor make_result(Shape dims, std::vector<Real> value, const char* op,
                   std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward_fn);

/// Throws NumericError naming `where` if any element is NaN or Inf.
void check_finite(const Tensor& t, const std::string& where);

DADF_NAMESPACE_END
