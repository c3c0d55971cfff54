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

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "plume/geometry.hpp"
#include "plume/tensor.hpp"

namespace plume::ops {

// ---- convolution ---------------------------------------------------------

// Per-axis hyper-parameters for a 2-D or 3-D (transposed) convolution. Inputs
// carry no batch axis: [C, S1, ..., Sr].
struct ConvSpec {
  std::vector<std::size_t> stride;
  std::vector<std::size_t> padding;
  std::vector<std::size_t> dilation;
  std::vector<std::size_t> output_padding;  // transposed only

  static ConvSpec uniform(std::size_t rank, std::size_t stride = 1, std::size_t padding = 0,
                          std::size_t dilation = 1);
};

// Output extent of a forward convolution along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding,
                            std::size_t dilation);
// Output extent of a transposed convolution along one axis.
std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                      std::size_t padding, std::size_t dilation, std::size_t output_padding);

// Cross-correlation. weight: [C_out, C_in, k...]; bias: [C_out] or undefined.
Tensor conv(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvSpec& spec);
// Adjoint of `conv` with respect to its input. weight: [C_in, C_out, k...].
Tensor conv_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvSpec& spec);

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride = 1,
              std::size_t padding = 0, std::size_t dilation = 1);
Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride = 1,
              std::size_t padding = 0, std::size_t dilation = 1);

// ---- pooling and resampling ---------------------------------------------

// Window = stride, no padding: output floor((H - kh) / kh) + 1.
Tensor avg_pool2d(const Tensor& input, std::size_t kh, std::size_t kw);
Tensor avg_pool2d(const Tensor& input, std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw);
// Padding cells never win; ties go to the first element in scan order.
Tensor max_pool2d(const Tensor& input, std::size_t window, std::size_t stride, std::size_t padding = 0);

// Align-corners bilinear resize of [C, H, W] (also valid for shrinking).
Tensor upsample_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w);

// Bilinear read of [C, H, W] at subpixel (u, v). Neighbours outside the map
// contribute zero; a location with no neighbour inside returns all zeros.
Tensor bilinear_sample(const Tensor& feature_map, double u, double v);

// Batched bilinear reads: result [C, N]. Entries with valid[n] == 0 are zero.
Tensor gather_bilinear(const Tensor& feature_map, std::span<const PixelCoord> coords,
                       std::span<const std::uint8_t> valid);

// ---- elementwise and structural -------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Same shape, or b with a leading extent of 1 broadcast over a's first axis.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);

// Inverted dropout: identity when !train, else zeroes with probability p and
// scales survivors by 1 / (1 - p).
Tensor dropout(const Tensor& a, double p, bool train, std::mt19937_64& rng);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, std::size_t axis);

}  // namespace plume::ops
