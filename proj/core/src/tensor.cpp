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

#include "dadf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

DADF_NAMESPACE_BEGIN

namespace {
thread_local bool g_grad_mode = true;
}

std::size_t shape_numel(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

std::string shape_string(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  os << ']';
  return os.str();
}

static std::shared_ptr<detail::Node> new_leaf(Shape dims, std::vector<Real> values) {
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("tensor dims must be positive, got " + shape_string(dims));
  }
  if (shape_numel(dims) != values.size()) {
    throw ShapeError("element count " + std::to_string(values.size()) +
                     " does not match dims " + shape_string(dims));
  }
  auto node = std::make_shared<detail::Node>();
  node->dims = std::move(dims);
  node->value = std::move(values);
  return node;
}

Tensor Tensor::zeros(Shape dims) { return full(std::move(dims), Real(0)); }

Tensor Tensor::full(Shape dims, Real value) {
  const std::size_t n = shape_numel(dims);
  return Tensor(new_leaf(std::move(dims), std::vector<Real>(n, value)));
}

Tensor Tensor::from(Shape dims, std::vector<Real> values) {
  return Tensor(new_leaf(std::move(dims), std::move(values)));
}

Tensor Tensor::scalar(Real value) { return from({1}, {value}); }

const Shape& Tensor::dims() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->dims;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& d = dims();
  if (axis >= d.size()) throw ShapeError("axis out of range for " + shape_string(d));
  return d[axis];
}

std::span<const Real> Tensor::data() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->value;
}

std::span<Real> Tensor::mutable_data() {
  if (!node_) throw ContractError("use of undefined tensor");
  if (!node_->is_leaf()) throw ContractError("mutable access to non-leaf tensor");
  return node_->value;
}

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor " + shape_string(dims()));
  return node_->value[0];
}

Real Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& d = dims();
  if (index.size() != d.size()) throw ShapeError("index rank mismatch for " + shape_string(d));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= d[axis]) throw ShapeError("index out of range for " + shape_string(d));
    flat = flat * d[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!node_) throw ContractError("use of undefined tensor");
  if (!node_->is_leaf()) throw ContractError("requires_grad can only be set on leaves");
  node_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::vector<Real> Tensor::grad() const {
  if (!node_) throw ContractError("use of undefined tensor");
  if (node_->grad.empty()) return std::vector<Real>(node_->value.size(), Real(0));
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return Tensor::from(dims(), node_->value); }

Tensor Tensor::clone() const {
  Tensor out = detach();
  out.node_->requires_grad = node_->is_leaf() && node_->requires_grad;
  return out;
}

const char* Tensor::op_name() const { return node_ ? node_->op : "undefined"; }

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

bool grad_mode_enabled() { return g_grad_mode; }

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.defined() || !root.requires_grad()) return tape;
  // Iterative post-order DFS; emits every node after all of its inputs.
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      tape.nodes_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() requires a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.dims()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;
  const Tape tape = Tape::record(loss);
  for (detail::Node* node : tape.nodes()) {
    if (!node->is_leaf()) node->grad.assign(node->value.size(), Real(0));
  }
  detail::Node* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += Real(1);
  const auto& nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward(**it);
  }
}

Tensor make_result(Shape dims, std::vector<Real> value, const char* op,
                   std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->dims = std::move(dims);
  node->value = std::move(value);
  node->op = op;
  bool track = false;
  if (g_grad_mode) {
    for (const Tensor& t : inputs) track = track || t.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

void check_finite(const Tensor& t, const std::string& where) {
  for (Real v : t.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in " + where);
  }
}

DADF_NAMESPACE_END
