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

#include "plume/layers.hpp"

#include "plume/error.hpp"

namespace plume {

Tensor ConvLayer::operator()(const Tensor& x) const {
  return transposed ? ops::conv_transpose(x, weight, bias, spec) : ops::conv(x, weight, bias, spec);
}

Tensor ConvLayer::to_extent(const Tensor& x, const Shape& target_spatial) const {
  require(transposed, ErrorCode::kInvalidConfig, "to_extent needs a transposed layer");
  const std::size_t r = spec.stride.size();
  require(target_spatial.size() == r && x.rank() == r + 1, ErrorCode::kShapeMismatch, "to_extent rank mismatch");
  ops::ConvSpec s = spec;
  s.output_padding.assign(r, 0);
  for (std::size_t a = 0; a < r; ++a) {
    const std::size_t k = weight.dim(2 + a);
    const std::size_t base =
        ops::conv_transpose_out_extent(x.dim(1 + a), k, s.stride[a], s.padding[a], s.dilation[a], 0);
    require(target_spatial[a] >= base && target_spatial[a] - base < s.stride[a], ErrorCode::kShapeMismatch,
            "cannot reach extent " + std::to_string(target_spatial[a]) + " from " + std::to_string(x.dim(1 + a)));
    s.output_padding[a] = target_spatial[a] - base;
  }
  return ops::conv_transpose(x, weight, bias, s);
}

Tensor BasicBlock::operator()(const Tensor& x) const {
  Tensor y = conv_b(ops::relu(conv_a(x)));
  return ops::relu(ops::add(y, has_projection ? projection(x) : x));
}

Tensor BottleneckBlock::operator()(const Tensor& x) const {
  Tensor y = expand(ops::relu(conv(ops::relu(reduce(x)))));
  return ops::relu(ops::add(y, has_projection ? projection(x) : x));
}

ConvLayer LayerFactory::make(const std::string& name, Shape weight_shape, std::size_t fan_in, std::size_t bias_len,
                             ops::ConvSpec spec, bool transposed, double gain) {
  ConvLayer layer;
  layer.weight = store_.create(name + ".weight", std::move(weight_shape));
  init_uniform_fan_in(layer.weight, fan_in, rng_, gain);
  layer.bias = store_.create(name + ".bias", Shape{bias_len});
  layer.spec = std::move(spec);
  layer.transposed = transposed;
  return layer;
}

ConvLayer LayerFactory::conv2d(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
                               std::size_t stride, std::size_t dilation, double gain) {
  const std::size_t pad = dilation * (kernel / 2);
  return make(name, Shape{cout, cin, kernel, kernel}, cin * kernel * kernel, cout,
              ops::ConvSpec::uniform(2, stride, pad, dilation), false, gain);
}

ConvLayer LayerFactory::conv3d(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
                               const std::vector<std::size_t>& stride, double gain) {
  require(stride.size() == 3, ErrorCode::kInvalidConfig, "conv3d stride needs three entries");
  ops::ConvSpec spec = ops::ConvSpec::uniform(3, 1, kernel / 2, 1);
  spec.stride = stride;
  return make(name, Shape{cout, cin, kernel, kernel, kernel}, cin * kernel * kernel * kernel, cout, spec, false, gain);
}

ConvLayer LayerFactory::deconv(const std::string& name, std::size_t rank, std::size_t cin, std::size_t cout,
                               std::size_t kernel, const std::vector<std::size_t>& stride) {
  require(stride.size() == rank, ErrorCode::kInvalidConfig, "deconv stride rank mismatch");
  ops::ConvSpec spec = ops::ConvSpec::uniform(rank, 1, kernel / 2, 1);
  spec.stride = stride;
  Shape w{cin, cout};
  std::size_t k_total = 1;
  for (std::size_t a = 0; a < rank; ++a) {
    w.push_back(kernel);
    k_total *= kernel;
  }
  return make(name, std::move(w), cin * k_total, cout, spec, true, 1.0);
}

BasicBlock LayerFactory::basic_block(const std::string& name, std::size_t cin, std::size_t cout, std::size_t stride,
                                     std::size_t dilation) {
  BasicBlock b;
  b.conv_a = conv2d(name + ".conv_a", cin, cout, 3, stride, dilation);
  b.conv_b = conv2d(name + ".conv_b", cout, cout, 3, 1, dilation, kResidualBranchGain);
  b.has_projection = stride != 1 || cin != cout;
  if (b.has_projection) b.projection = conv2d(name + ".proj", cin, cout, 1, stride);
  return b;
}

BottleneckBlock LayerFactory::bottleneck(const std::string& name, std::size_t cin, std::size_t cout,
                                         std::size_t stride) {
  const std::size_t mid = std::max<std::size_t>(4, cout / 4);
  BottleneckBlock b;
  b.reduce = conv2d(name + ".reduce", cin, mid, 1);
  b.conv = conv2d(name + ".conv", mid, mid, 3, stride);
  b.expand = conv2d(name + ".expand", mid, cout, 1, 1, 1, kResidualBranchGain);
  b.has_projection = stride != 1 || cin != cout;
  if (b.has_projection) b.projection = conv2d(name + ".proj", cin, cout, 1, stride);
  return b;
}

}  // namespace plume
