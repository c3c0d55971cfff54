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

// Convolution via im2col and a dense matrix product. All kernels run on a
// 3-D internal geometry; 2-D convolutions use a unit leading axis.

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <string>

#include "plume/error.hpp"
#include "plume/ops.hpp"

namespace plume::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using Ext3 = std::array<std::ptrdiff_t, 3>;

// Forward-convolution view: `in` has `cin` channels, `out` has `cout`.
struct ConvGeometry {
  std::size_t cin = 0;
  std::size_t cout = 0;
  Ext3 in{1, 1, 1};
  Ext3 out{1, 1, 1};
  Ext3 k{1, 1, 1};
  Ext3 s{1, 1, 1};
  Ext3 p{0, 0, 0};
  Ext3 d{1, 1, 1};

  std::size_t kernel_size() const { return static_cast<std::size_t>(k[0] * k[1] * k[2]); }
  std::size_t in_size() const { return static_cast<std::size_t>(in[0] * in[1] * in[2]); }
  std::size_t out_size() const { return static_cast<std::size_t>(out[0] * out[1] * out[2]); }

  bool is_pointwise() const {
    return kernel_size() == 1 && s == Ext3{1, 1, 1} && p == Ext3{0, 0, 0} && in == out;
  }
};

void im2col(const ConvGeometry& g, const double* x, double* cols) {
  const std::size_t K = g.kernel_size();
  const std::size_t P = g.out_size();
  for (std::size_t c = 0; c < g.cin; ++c) {
    const double* xc = x + c * g.in_size();
    for (std::ptrdiff_t kd = 0; kd < g.k[0]; ++kd) {
      for (std::ptrdiff_t kh = 0; kh < g.k[1]; ++kh) {
        for (std::ptrdiff_t kw = 0; kw < g.k[2]; ++kw) {
          const std::size_t row = c * K + static_cast<std::size_t>((kd * g.k[1] + kh) * g.k[2] + kw);
          double* dst = cols + row * P;
          for (std::ptrdiff_t od = 0; od < g.out[0]; ++od) {
            const std::ptrdiff_t id = od * g.s[0] - g.p[0] + kd * g.d[0];
            for (std::ptrdiff_t oh = 0; oh < g.out[1]; ++oh) {
              const std::ptrdiff_t ih = oh * g.s[1] - g.p[1] + kh * g.d[1];
              double* row_dst = dst + (od * g.out[1] + oh) * g.out[2];
              if (id < 0 || id >= g.in[0] || ih < 0 || ih >= g.in[1]) {
                std::fill(row_dst, row_dst + g.out[2], 0.0);
                continue;
              }
              const double* src = xc + (id * g.in[1] + ih) * g.in[2];
              for (std::ptrdiff_t ow = 0; ow < g.out[2]; ++ow) {
                const std::ptrdiff_t iw = ow * g.s[2] - g.p[2] + kw * g.d[2];
                row_dst[ow] = (iw >= 0 && iw < g.in[2]) ? src[iw] : 0.0;
              }
            }
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* x) {
  const std::size_t K = g.kernel_size();
  const std::size_t P = g.out_size();
  for (std::size_t c = 0; c < g.cin; ++c) {
    double* xc = x + c * g.in_size();
    for (std::ptrdiff_t kd = 0; kd < g.k[0]; ++kd) {
      for (std::ptrdiff_t kh = 0; kh < g.k[1]; ++kh) {
        for (std::ptrdiff_t kw = 0; kw < g.k[2]; ++kw) {
          const std::size_t row = c * K + static_cast<std::size_t>((kd * g.k[1] + kh) * g.k[2] + kw);
          const double* src = cols + row * P;
          for (std::ptrdiff_t od = 0; od < g.out[0]; ++od) {
            const std::ptrdiff_t id = od * g.s[0] - g.p[0] + kd * g.d[0];
            if (id < 0 || id >= g.in[0]) continue;
            for (std::ptrdiff_t oh = 0; oh < g.out[1]; ++oh) {
              const std::ptrdiff_t ih = oh * g.s[1] - g.p[1] + kh * g.d[1];
              if (ih < 0 || ih >= g.in[1]) continue;
              const double* row_src = src + (od * g.out[1] + oh) * g.out[2];
              double* dst = xc + (id * g.in[1] + ih) * g.in[2];
              for (std::ptrdiff_t ow = 0; ow < g.out[2]; ++ow) {
                const std::ptrdiff_t iw = ow * g.s[2] - g.p[2] + kw * g.d[2];
                if (iw >= 0 && iw < g.in[2]) dst[iw] += row_src[ow];
              }
            }
          }
        }
      }
    }
  }
}

// Columns of `x` under geometry g, or x itself for pointwise kernels.
const double* columns(const ConvGeometry& g, const double* x, std::vector<double>& scratch) {
  if (g.is_pointwise()) return x;
  scratch.resize(g.cin * g.kernel_size() * g.out_size());
  im2col(g, x, scratch.data());
  return scratch.data();
}

std::size_t spatial_rank(const Tensor& input, const Tensor& weight) {
  const std::size_t r = input.rank() - 1;
  require(r == 2 || r == 3, ErrorCode::kShapeMismatch,
          "convolution input must be [C, H, W] or [C, D, H, W], got " + shape_to_string(input.shape()));
  require(weight.rank() == r + 2, ErrorCode::kShapeMismatch,
          "weight rank does not match input: " + shape_to_string(weight.shape()));
  return r;
}

void check_spec(const ConvSpec& spec, std::size_t r, bool transposed) {
  require(spec.stride.size() == r && spec.padding.size() == r && spec.dilation.size() == r,
          ErrorCode::kShapeMismatch, "conv spec rank mismatch");
  require(!transposed || spec.output_padding.empty() || spec.output_padding.size() == r,
          ErrorCode::kShapeMismatch, "output_padding rank mismatch");
  for (std::size_t a = 0; a < r; ++a) {
    require(spec.stride[a] >= 1 && spec.dilation[a] >= 1, ErrorCode::kShapeMismatch,
            "stride and dilation must be >= 1");
  }
}

void check_bias(const Tensor& bias, std::size_t channels) {
  if (!bias.defined()) return;
  require(bias.numel() == channels, ErrorCode::kShapeMismatch,
          "bias has " + std::to_string(bias.numel()) + " entries, expected " + std::to_string(channels));
}

void set_axes(ConvGeometry& g, std::size_t r, const ConvSpec& spec, const Shape& kernel_shape) {
  const std::size_t off = 3 - r;
  for (std::size_t a = 0; a < r; ++a) {
    g.k[off + a] = static_cast<std::ptrdiff_t>(kernel_shape[2 + a]);
    g.s[off + a] = static_cast<std::ptrdiff_t>(spec.stride[a]);
    g.p[off + a] = static_cast<std::ptrdiff_t>(spec.padding[a]);
    g.d[off + a] = static_cast<std::ptrdiff_t>(spec.dilation[a]);
  }
}

void add_bias(double* out, const Tensor& bias, std::size_t channels, std::size_t plane) {
  if (!bias.defined()) return;
  const auto b = bias.data();
  for (std::size_t c = 0; c < channels; ++c) {
    double* row = out + c * plane;
    for (std::size_t i = 0; i < plane; ++i) row[i] += b[c];
  }
}

void accumulate_bias_grad(detail::TensorImpl& bias, const double* g, std::size_t channels, std::size_t plane) {
  auto gb = bias.grad_buffer();
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += g[c * plane + i];
    gb[c] += acc;
  }
}

}  // namespace

ConvSpec ConvSpec::uniform(std::size_t rank, std::size_t stride, std::size_t padding, std::size_t dilation) {
  ConvSpec s;
  s.stride.assign(rank, stride);
  s.padding.assign(rank, padding);
  s.dilation.assign(rank, dilation);
  s.output_padding.assign(rank, 0);
  return s;
}

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding,
                            std::size_t dilation) {
  const auto span = static_cast<std::ptrdiff_t>(in + 2 * padding) -
                    static_cast<std::ptrdiff_t>(dilation * (kernel - 1) + 1);
  if (span < 0) return 0;
  return static_cast<std::size_t>(span) / stride + 1;
}

std::size_t conv_transpose_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                      std::size_t padding, std::size_t dilation, std::size_t output_padding) {
  const auto v = static_cast<std::ptrdiff_t>((in - 1) * stride + dilation * (kernel - 1) + output_padding + 1) -
                 static_cast<std::ptrdiff_t>(2 * padding);
  return v > 0 ? static_cast<std::size_t>(v) : 0;
}

Tensor conv(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvSpec& spec) {
  const std::size_t r = spatial_rank(input, weight);
  check_spec(spec, r, false);
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require(ws[1] == xs[0], ErrorCode::kShapeMismatch,
          "weight expects " + std::to_string(ws[1]) + " input channels, got " + std::to_string(xs[0]));
  check_bias(bias, ws[0]);

  ConvGeometry g;
  g.cin = xs[0];
  g.cout = ws[0];
  set_axes(g, r, spec, ws);
  Shape out_shape{g.cout};
  for (std::size_t a = 0; a < r; ++a) {
    const std::size_t o = conv_out_extent(xs[1 + a], ws[2 + a], spec.stride[a], spec.padding[a], spec.dilation[a]);
    require(o >= 1, ErrorCode::kShapeMismatch,
            "convolution output is empty for input " + shape_to_string(xs) + " and kernel " + shape_to_string(ws));
    g.in[3 - r + a] = static_cast<std::ptrdiff_t>(xs[1 + a]);
    g.out[3 - r + a] = static_cast<std::ptrdiff_t>(o);
    out_shape.push_back(o);
  }

  const std::size_t P = g.out_size();
  const std::size_t KC = g.cin * g.kernel_size();
  std::vector<double> out(g.cout * P, 0.0);
  {
    std::vector<double> scratch;
    const double* cols = columns(g, input.data().data(), scratch);
    MapMat(out.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(P)).noalias() =
        ConstMapMat(weight.data().data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(KC)) *
        ConstMapMat(cols, static_cast<Eigen::Index>(KC), static_cast<Eigen::Index>(P));
  }
  add_bias(out.data(), bias, g.cout, P);

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  auto x = input.impl();
  auto w = weight.impl();
  auto b = bias.defined() ? bias.impl() : nullptr;
  return detail::make_result(std::move(out_shape), std::move(out), inputs, "conv",
                             [g, x, w, b, KC, P](const detail::TensorImpl& o) {
                               const auto rows = static_cast<Eigen::Index>(g.cout);
                               const auto kc = static_cast<Eigen::Index>(KC);
                               const auto p = static_cast<Eigen::Index>(P);
                               ConstMapMat gout(o.grad.data(), rows, p);
                               if (w->requires_grad) {
                                 std::vector<double> scratch;
                                 const double* cols = columns(g, x->data.data(), scratch);
                                 MapMat(w->grad_buffer().data(), rows, kc).noalias() +=
                                     gout * ConstMapMat(cols, kc, p).transpose();
                               }
                               if (x->requires_grad) {
                                 RowMat gcols = ConstMapMat(w->data.data(), rows, kc).transpose() * gout;
                                 if (g.is_pointwise()) {
                                   MapMat(x->grad_buffer().data(), kc, p) += gcols;
                                 } else {
                                   col2im_add(g, gcols.data(), x->grad_buffer().data());
                                 }
                               }
                               if (b && b->requires_grad) accumulate_bias_grad(*b, o.grad.data(), g.cout, P);
                             });
}

Tensor conv_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvSpec& spec) {
  const std::size_t r = spatial_rank(input, weight);
  check_spec(spec, r, true);
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require(ws[0] == xs[0], ErrorCode::kShapeMismatch,
          "transposed weight expects " + std::to_string(ws[0]) + " input channels, got " + std::to_string(xs[0]));
  check_bias(bias, ws[1]);

  // Geometry of the forward convolution this op is the adjoint of: its input
  // is our output (ws[1] channels) and its output is our input.
  ConvGeometry g;
  g.cin = ws[1];
  g.cout = ws[0];
  set_axes(g, r, spec, ws);
  Shape out_shape{g.cin};
  for (std::size_t a = 0; a < r; ++a) {
    const std::size_t op = spec.output_padding.empty() ? 0 : spec.output_padding[a];
    require(op < spec.stride[a] || op < spec.dilation[a], ErrorCode::kShapeMismatch,
            "output_padding must be smaller than stride or dilation");
    const std::size_t o =
        conv_transpose_out_extent(xs[1 + a], ws[2 + a], spec.stride[a], spec.padding[a], spec.dilation[a], op);
    require(o >= 1, ErrorCode::kShapeMismatch, "transposed convolution output is empty");
    g.out[3 - r + a] = static_cast<std::ptrdiff_t>(xs[1 + a]);
    g.in[3 - r + a] = static_cast<std::ptrdiff_t>(o);
    out_shape.push_back(o);
  }

  const std::size_t P = g.out_size();
  const std::size_t KC = g.cin * g.kernel_size();
  const auto kc = static_cast<Eigen::Index>(KC);
  const auto p = static_cast<Eigen::Index>(P);
  const auto rows = static_cast<Eigen::Index>(g.cout);
  std::vector<double> out(g.cin * g.in_size(), 0.0);
  {
    RowMat cols = ConstMapMat(weight.data().data(), rows, kc).transpose() *
                  ConstMapMat(input.data().data(), rows, p);
    if (g.is_pointwise()) {
      MapMat(out.data(), kc, p) = cols;
    } else {
      col2im_add(g, cols.data(), out.data());
    }
  }
  add_bias(out.data(), bias, g.cin, g.in_size());

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  auto x = input.impl();
  auto w = weight.impl();
  auto b = bias.defined() ? bias.impl() : nullptr;
  return detail::make_result(std::move(out_shape), std::move(out), inputs, "conv_transpose",
                             [g, x, w, b, kc, p, rows](const detail::TensorImpl& o) {
                               std::vector<double> scratch;
                               const double* gcols = columns(g, o.grad.data(), scratch);
                               ConstMapMat gc(gcols, kc, p);
                               if (x->requires_grad) {
                                 MapMat(x->grad_buffer().data(), rows, p).noalias() +=
                                     ConstMapMat(w->data.data(), rows, kc) * gc;
                               }
                               if (w->requires_grad) {
                                 MapMat(w->grad_buffer().data(), rows, kc).noalias() +=
                                     ConstMapMat(x->data.data(), rows, p) * gc.transpose();
                               }
                               if (b && b->requires_grad) accumulate_bias_grad(*b, o.grad.data(), g.cin, g.in_size());
                             });
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding, std::size_t dilation) {
  require(input.rank() == 3, ErrorCode::kShapeMismatch, "conv2d expects [C, H, W]");
  return conv(input, weight, bias, ConvSpec::uniform(2, stride, padding, dilation));
}

Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding, std::size_t dilation) {
  require(input.rank() == 4, ErrorCode::kShapeMismatch, "conv3d expects [C, D1, D2, D3]");
  return conv(input, weight, bias, ConvSpec::uniform(3, stride, padding, dilation));
}

}  // namespace plume::ops
