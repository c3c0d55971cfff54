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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plume {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Storage precision. kFloat32 tensors keep values rounded to binary32 after
// every producing op; arithmetic always accumulates in 64-bit.
enum class Dtype { kFloat64, kFloat32 };

namespace detail {

struct TensorImpl;

struct Node {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // Reads out.grad (and out.data if needed) and accumulates into inputs.
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  bool backward_done = false;
  Dtype dtype = Dtype::kFloat64;
  std::shared_ptr<Node> node;

  // Gradient buffer, zero-initialised on first use.
  std::span<double> grad_buffer();
};

}  // namespace detail

// Reference-counted handle to an n-dimensional row-major array that records
// the operation that produced it. Copies share storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value = true);
  bool is_leaf() const;

  Dtype dtype() const;
  Tensor& set_dtype(Dtype dtype);

  // New leaf with copied values and no history.
  Tensor detach() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Reverse-mode accumulation from a scalar loss. Releases the recorded graph;
// a second call on the same loss throws kDoubleBackward.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

using WarningHandler = std::function<void(std::string_view)>;
// Returns the previous handler. The default writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

namespace detail {

// Builds an op result. A node is attached only when grad mode is on and some
// input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                   std::string op, std::function<void(const TensorImpl& out)> backward_fn);

}  // namespace detail

}  // namespace plume
