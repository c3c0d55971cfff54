// Copyright 2026 The plume Authors
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

#include "plume/tensor.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "plume/error.hpp"

namespace plume {

namespace {

thread_local bool g_grad_enabled = true;

WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return handler;
}

void round_to_float(std::vector<double>& values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

std::span<double> detail::TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<detail::TensorImpl>()) {
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : impl_(std::make_shared<detail::TensorImpl>()) {
  require(values.size() == shape_numel(shape), ErrorCode::kShapeMismatch,
          "data length " + std::to_string(values.size()) + " does not match shape " + shape_to_string(shape));
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, std::vector<double>{value}); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  require(axis < impl_->shape.size(), ErrorCode::kShapeMismatch, "axis out of range");
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }
std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  require(numel() == 1, ErrorCode::kNotScalar, "item() on tensor of shape " + shape_to_string(shape()));
  return impl_->data[0];
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }
void Tensor::zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return impl_->node == nullptr; }

Dtype Tensor::dtype() const { return impl_->dtype; }

Tensor& Tensor::set_dtype(Dtype dtype) {
  impl_->dtype = dtype;
  if (dtype == Dtype::kFloat32) round_to_float(impl_->data);
  return *this;
}

Tensor Tensor::detach() const {
  Tensor out(impl_->shape, impl_->data);
  out.impl_->dtype = impl_->dtype;
  return out;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

WarningHandler set_warning_handler(WarningHandler handler) {
  WarningHandler previous = std::move(warning_handler());
  warning_handler() = std::move(handler);
  return previous;
}

void warn(std::string_view message) {
  if (warning_handler()) warning_handler()(message);
}

Tensor detail::make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                           std::string op, std::function<void(const TensorImpl& out)> backward_fn) {
  Tensor out(std::move(shape), std::move(values));
  bool any_f32 = false;
  bool needs_grad = false;
  for (const Tensor& t : inputs) {
    any_f32 = any_f32 || t.dtype() == Dtype::kFloat32;
    needs_grad = needs_grad || t.requires_grad();
  }
  if (any_f32) out.set_dtype(Dtype::kFloat32);
  if (needs_grad && g_grad_enabled) {
    auto node = std::make_shared<Node>();
    node->op = std::move(op);
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.impl());
    node->backward = std::move(backward_fn);
    out.impl()->requires_grad = true;
    out.impl()->node = std::move(node);
  }
  return out;
}

void backward(const Tensor& loss) {
  require(loss.defined() && loss.numel() == 1, ErrorCode::kNotScalar,
          "backward() needs a scalar loss, got shape " + (loss.defined() ? shape_to_string(loss.shape()) : "[]"));
  auto* root = loss.impl().get();
  if (root->backward_done) fail(ErrorCode::kDoubleBackward, "graph already released by a previous backward()");
  if (!root->requires_grad || root->node == nullptr) {
    warn("DisconnectedGraph: loss is not connected to any trainable tensor");
    return;
  }

  // Iterative post-order DFS; `order` ends up with every producer before its consumers.
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (impl->node && next < impl->node->inputs.size()) {
      detail::TensorImpl* child = impl->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(impl);
    stack.pop_back();
  }

  root->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* impl = *it;
    if (impl->node == nullptr) {
      impl->grad_buffer();  // reachable trainable leaf: always ends with a gradient
      continue;
    }
    if (!impl->grad.empty()) impl->node->backward(*impl);
  }
  for (detail::TensorImpl* impl : order) {
    if (impl->node != nullptr) {
      impl->node.reset();
      if (impl != root) {
        impl->grad.clear();
        impl->grad.shrink_to_fit();
      }
    }
  }
  root->backward_done = true;
}

}  // namespace plume
