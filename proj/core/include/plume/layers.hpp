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

#include <random>
#include <string>
#include <vector>

#include "plume/checkpoint.hpp"
#include "plume/ops.hpp"

namespace plume {

// A (transposed) 2-D or 3-D convolution with its parameters.
struct ConvLayer {
  Tensor weight;
  Tensor bias;
  ops::ConvSpec spec;
  bool transposed = false;

  Tensor operator()(const Tensor& x) const;
  // Transposed only: picks output_padding so the spatial extents equal `target`.
  Tensor to_extent(const Tensor& x, const Shape& target_spatial) const;
};

// Basic residual block: two 3x3 convs with a projection shortcut when the
// stride or channel count changes.
struct BasicBlock {
  ConvLayer conv_a;
  ConvLayer conv_b;
  bool has_projection = false;
  ConvLayer projection;

  Tensor operator()(const Tensor& x) const;
};

// Bottleneck residual block: 1x1 reduce, strided 3x3, 1x1 expand.
struct BottleneckBlock {
  ConvLayer reduce;
  ConvLayer conv;
  ConvLayer expand;
  bool has_projection = false;
  ConvLayer projection;

  Tensor operator()(const Tensor& x) const;
};

// Creates layers whose parameters live in a ParameterStore under dotted names.
class LayerFactory {
 public:
  LayerFactory(ParameterStore& store, std::mt19937_64& rng) : store_(store), rng_(rng) {}

  ConvLayer conv2d(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
                   std::size_t stride = 1, std::size_t dilation = 1, double gain = 1.0);
  ConvLayer conv3d(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
                   const std::vector<std::size_t>& stride, double gain = 1.0);
  ConvLayer deconv(const std::string& name, std::size_t rank, std::size_t cin, std::size_t cout,
                   std::size_t kernel, const std::vector<std::size_t>& stride);

  BasicBlock basic_block(const std::string& name, std::size_t cin, std::size_t cout, std::size_t stride,
                         std::size_t dilation);
  BottleneckBlock bottleneck(const std::string& name, std::size_t cin, std::size_t cout, std::size_t stride);

 private:
  ConvLayer make(const std::string& name, Shape weight_shape, std::size_t fan_in, std::size_t bias_len,
                 ops::ConvSpec spec, bool transposed, double gain);

  ParameterStore& store_;
  std::mt19937_64& rng_;
};

// Residual branches end with a down-scaled init so deep stacks without
// normalisation start near identity.
inline constexpr double kResidualBranchGain = 0.25;

}  // namespace plume
