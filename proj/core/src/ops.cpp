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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "plume/error.hpp"
#include "plume/ops.hpp"

namespace plume::ops {

namespace {

using detail::make_result;
using detail::TensorImpl;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          std::string(op) + ": " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
}

// Row-major strides.
std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

struct BilinearTap {
  std::array<std::ptrdiff_t, 4> offset{};  // pixel offsets within one channel plane; -1 = outside
  std::array<double, 4> weight{};
};

BilinearTap bilinear_tap(std::size_t h, std::size_t w, double u, double v) {
  BilinearTap tap;
  tap.offset.fill(-1);
  const auto W = static_cast<double>(w);
  const auto H = static_cast<double>(h);
  if (!(u > -1.0 && u < W && v > -1.0 && v < H)) return tap;
  const double x0 = std::floor(u);
  const double y0 = std::floor(v);
  const double ax = u - x0;
  const double ay = v - y0;
  const std::array<double, 2> xs{x0, x0 + 1};
  const std::array<double, 2> ys{y0, y0 + 1};
  const std::array<double, 2> wx{1.0 - ax, ax};
  const std::array<double, 2> wy{1.0 - ay, ay};
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const int t = dy * 2 + dx;
      tap.weight[t] = wy[dy] * wx[dx];
      if (xs[dx] >= 0 && xs[dx] < W && ys[dy] >= 0 && ys[dy] < H) {
        tap.offset[t] = static_cast<std::ptrdiff_t>(ys[dy]) * static_cast<std::ptrdiff_t>(w) +
                        static_cast<std::ptrdiff_t>(xs[dx]);
      }
    }
  }
  return tap;
}

// Align-corners source coordinate for output index o.
struct Lerp {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
};

std::vector<Lerp> lerp_table(std::size_t in, std::size_t out) {
  std::vector<Lerp> table(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = out > 1 ? static_cast<double>(o) * static_cast<double>(in - 1) / static_cast<double>(out - 1)
                               : 0.0;
    Lerp l;
    l.lo = std::min(static_cast<std::size_t>(std::floor(src)), in - 1);
    l.hi = std::min(l.lo + 1, in - 1);
    l.frac = src - static_cast<double>(l.lo);
    table[o] = l;
  }
  return table;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, "add", [ai, bi](const TensorImpl& o) {
    for (auto* t : {ai.get(), bi.get()}) {
      if (!t->requires_grad) continue;
      auto g = t->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, "sub", [ai, bi](const TensorImpl& o) {
    if (ai->requires_grad) {
      auto g = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bi->requires_grad) {
      auto g = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const bool broadcast = a.shape() != b.shape();
  if (broadcast) {
    require(a.rank() == b.rank() && b.rank() >= 1 && b.dim(0) == 1 &&
                std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1),
            ErrorCode::kShapeMismatch,
            "mul: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  const std::size_t inner = b.numel();
  const std::size_t outer = a.numel() / inner;
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t r = 0; r < outer; ++r) {
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] = x[r * inner + i] * y[i];
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, "mul", [ai, bi, inner, outer](const TensorImpl& o) {
    if (ai->requires_grad) {
      auto g = ai->grad_buffer();
      for (std::size_t r = 0; r < outer; ++r) {
        for (std::size_t i = 0; i < inner; ++i) g[r * inner + i] += o.grad[r * inner + i] * bi->data[i];
      }
    }
    if (bi->requires_grad) {
      auto g = bi->grad_buffer();
      for (std::size_t r = 0; r < outer; ++r) {
        for (std::size_t i = 0; i < inner; ++i) g[i] += o.grad[r * inner + i] * ai->data[r * inner + i];
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a}, "scale", [ai, factor](const TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a}, "relu", [ai](const TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (ai->data[i] > 0.0) g[i] += o.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i])) : std::exp(x[i]) / (1.0 + std::exp(x[i]));
  }
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a}, "sigmoid", [ai](const TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * o.data[i] * (1.0 - o.data[i]);
  });
}

Tensor square(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= v;
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a}, "square", [ai](const TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * ai->data[i] * o.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), ErrorCode::kShapeMismatch, "concat of zero tensors");
  const Shape& first = parts.front().shape();
  require(axis < first.size(), ErrorCode::kShapeMismatch, "concat axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& t : parts) {
    require(t.rank() == first.size(), ErrorCode::kShapeMismatch, "concat rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      require(d == axis || t.dim(d) == first[d], ErrorCode::kShapeMismatch,
              "concat: " + shape_to_string(t.shape()) + " vs " + shape_to_string(first));
    }
    out_shape[axis] += t.dim(axis);
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  std::vector<double> out(shape_numel(out_shape));
  const std::size_t out_row = out_shape[axis] * inner;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& t : parts) {
    offsets.push_back(offset);
    const std::size_t row = t.dim(axis) * inner;
    const auto src = t.data();
    for (std::size_t r = 0; r < outer; ++r) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * row), row,
                  out.begin() + static_cast<std::ptrdiff_t>(r * out_row + offset));
    }
    offset += row;
  }
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (const Tensor& t : parts) impls.push_back(t.impl());
  return make_result(std::move(out_shape), std::move(out), parts, "concat",
                     [impls, offsets, outer, inner, out_row, axis](const TensorImpl& o) {
                       for (std::size_t p = 0; p < impls.size(); ++p) {
                         auto& t = *impls[p];
                         if (!t.requires_grad) continue;
                         const std::size_t row = t.shape[axis] * inner;
                         auto g = t.grad_buffer();
                         for (std::size_t r = 0; r < outer; ++r) {
                           const double* src = o.grad.data() + r * out_row + offsets[p];
                           for (std::size_t i = 0; i < row; ++i) g[r * row + i] += src[i];
                         }
                       }
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require(shape_numel(shape) == a.numel(), ErrorCode::kShapeMismatch,
          "reshape " + shape_to_string(a.shape()) + " -> " + shape_to_string(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  auto ai = a.impl();
  return make_result(std::move(shape), std::move(out), {a}, "reshape", [ai](const TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
  const std::size_t r = a.rank();
  require(axes.size() == r, ErrorCode::kShapeMismatch, "permute rank mismatch");
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) {
    require(axes[i] < r && !seen[axes[i]], ErrorCode::kShapeMismatch, "permute axes are not a permutation");
    seen[axes[i]] = true;
    out_shape[i] = a.dim(axes[i]);
  }
  const auto in_strides = strides_of(a.shape());
  // Source offset for every destination element, in destination order.
  std::vector<std::size_t> src_index(a.numel());
  std::vector<std::size_t> counter(r, 0);
  for (std::size_t n = 0; n < src_index.size(); ++n) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < r; ++i) off += counter[i] * in_strides[axes[i]];
    src_index[n] = off;
    for (std::size_t i = r; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = x[src_index[n]];
  auto ai = a.impl();
  return make_result(std::move(out_shape), std::move(out), {a}, "permute",
                     [ai, src_index = std::move(src_index)](const TensorImpl& o) {
                       auto g = ai->grad_buffer();
                       for (std::size_t n = 0; n < src_index.size(); ++n) g[src_index[n]] += o.grad[n];
                     });
}

Tensor dropout(const Tensor& a, double p, bool train, std::mt19937_64& rng) {
  require(p >= 0.0 && p < 1.0, ErrorCode::kInvalidConfig, "dropout probability must be in [0, 1)");
  if (!train || p == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factor(a.numel());
  for (double& f : factor) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    f = u < p ? 0.0 : keep_scale;
  }
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor[i];
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a}, "dropout",
                     [ai, factor = std::move(factor)](const TensorImpl& o) {
                       auto g = ai->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor[i];
                     });
}

Tensor sum(const Tensor& a) {
  const auto x = a.data();
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  auto ai = a.impl();
  return make_result(Shape{1}, {total}, {a}, "sum", [ai](const TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (double& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  require(a.numel() > 0, ErrorCode::kShapeMismatch, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
  require(axis < a.rank(), ErrorCode::kShapeMismatch, "sum_axis axis out of range");
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= a.dim(d);
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.dim(d);
  const std::size_t n = a.dim(axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<double> out(outer * inner, 0.0);
  const auto x = a.data();
  for (std::size_t r = 0; r < outer; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const double* src = x.data() + (r * n + j) * inner;
      double* dst = out.data() + r * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  auto ai = a.impl();
  return make_result(std::move(out_shape), std::move(out), {a}, "sum_axis",
                     [ai, outer, inner, n](const TensorImpl& o) {
                       auto g = ai->grad_buffer();
                       for (std::size_t r = 0; r < outer; ++r) {
                         for (std::size_t j = 0; j < n; ++j) {
                           for (std::size_t i = 0; i < inner; ++i) g[(r * n + j) * inner + i] += o.grad[r * inner + i];
                         }
                       }
                     });
}

Tensor avg_pool2d(const Tensor& input, std::size_t kh, std::size_t kw) { return avg_pool2d(input, kh, kw, kh, kw); }

Tensor avg_pool2d(const Tensor& input, std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw) {
  require(input.rank() == 3, ErrorCode::kShapeMismatch, "avg_pool2d expects [C, H, W]");
  const std::size_t C = input.dim(0);
  const std::size_t H = input.dim(1);
  const std::size_t W = input.dim(2);
  require(kh >= 1 && kw >= 1 && kh <= H && kw <= W && sh >= 1 && sw >= 1, ErrorCode::kShapeMismatch,
          "pool window larger than input " + shape_to_string(input.shape()));
  const std::size_t oh = (H - kh) / sh + 1;
  const std::size_t ow = (W - kw) / sw + 1;
  const double inv = 1.0 / static_cast<double>(kh * kw);
  std::vector<double> out(C * oh * ow, 0.0);
  const auto x = input.data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < kh; ++a) {
          const double* row = x.data() + (c * H + i * sh + a) * W + j * sw;
          for (std::size_t b = 0; b < kw; ++b) acc += row[b];
        }
        out[(c * oh + i) * ow + j] = acc * inv;
      }
    }
  }
  auto xi = input.impl();
  return make_result(Shape{C, oh, ow}, std::move(out), {input}, "avg_pool2d",
                     [xi, C, H, W, kh, kw, sh, sw, oh, ow, inv](const TensorImpl& o) {
                       auto g = xi->grad_buffer();
                       for (std::size_t c = 0; c < C; ++c) {
                         for (std::size_t i = 0; i < oh; ++i) {
                           for (std::size_t j = 0; j < ow; ++j) {
                             const double share = o.grad[(c * oh + i) * ow + j] * inv;
                             for (std::size_t a = 0; a < kh; ++a) {
                               double* row = g.data() + (c * H + i * sh + a) * W + j * sw;
                               for (std::size_t b = 0; b < kw; ++b) row[b] += share;
                             }
                           }
                         }
                       }
                     });
}

Tensor max_pool2d(const Tensor& input, std::size_t window, std::size_t stride, std::size_t padding) {
  require(input.rank() == 3, ErrorCode::kShapeMismatch, "max_pool2d expects [C, H, W]");
  require(window >= 1 && stride >= 1 && padding < window, ErrorCode::kShapeMismatch, "invalid max_pool2d window");
  const std::size_t C = input.dim(0);
  const std::size_t H = input.dim(1);
  const std::size_t W = input.dim(2);
  const std::size_t oh = conv_out_extent(H, window, stride, padding, 1);
  const std::size_t ow = conv_out_extent(W, window, stride, padding, 1);
  require(oh >= 1 && ow >= 1, ErrorCode::kShapeMismatch, "max_pool2d window larger than input");
  std::vector<double> out(C * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  const auto x = input.data();
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t a = 0; a < window; ++a) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(i * stride + a) - pad;
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t b = 0; b < window; ++b) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(j * stride + b) - pad;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
            const std::size_t idx = (c * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(xx);
            if (!found || x[idx] > best) {
              best = x[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        out[(c * oh + i) * ow + j] = best;
        argmax[(c * oh + i) * ow + j] = best_idx;
      }
    }
  }
  auto xi = input.impl();
  return make_result(Shape{C, oh, ow}, std::move(out), {input}, "max_pool2d",
                     [xi, argmax = std::move(argmax)](const TensorImpl& o) {
                       auto g = xi->grad_buffer();
                       for (std::size_t n = 0; n < argmax.size(); ++n) g[argmax[n]] += o.grad[n];
                     });
}

Tensor upsample_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  require(input.rank() == 3, ErrorCode::kShapeMismatch, "upsample_bilinear expects [C, H, W]");
  require(out_h >= 1 && out_w >= 1, ErrorCode::kShapeMismatch, "upsample target must be >= 1");
  const std::size_t C = input.dim(0);
  const std::size_t H = input.dim(1);
  const std::size_t W = input.dim(2);
  if (out_h == H && out_w == W) return input;
  auto ty = lerp_table(H, out_h);
  auto tx = lerp_table(W, out_w);
  std::vector<double> out(C * out_h * out_w);
  const auto x = input.data();
  for (std::size_t c = 0; c < C; ++c) {
    const double* plane = x.data() + c * H * W;
    for (std::size_t i = 0; i < out_h; ++i) {
      const Lerp& ly = ty[i];
      for (std::size_t j = 0; j < out_w; ++j) {
        const Lerp& lx = tx[j];
        const double top = plane[ly.lo * W + lx.lo] * (1.0 - lx.frac) + plane[ly.lo * W + lx.hi] * lx.frac;
        const double bot = plane[ly.hi * W + lx.lo] * (1.0 - lx.frac) + plane[ly.hi * W + lx.hi] * lx.frac;
        out[(c * out_h + i) * out_w + j] = top * (1.0 - ly.frac) + bot * ly.frac;
      }
    }
  }
  auto xi = input.impl();
  return make_result(Shape{C, out_h, out_w}, std::move(out), {input}, "upsample_bilinear",
                     [xi, C, H, W, out_h, out_w, ty = std::move(ty), tx = std::move(tx)](const TensorImpl& o) {
                       auto g = xi->grad_buffer();
                       for (std::size_t c = 0; c < C; ++c) {
                         double* plane = g.data() + c * H * W;
                         for (std::size_t i = 0; i < out_h; ++i) {
                           const Lerp& ly = ty[i];
                           for (std::size_t j = 0; j < out_w; ++j) {
                             const Lerp& lx = tx[j];
                             const double go = o.grad[(c * out_h + i) * out_w + j];
                             plane[ly.lo * W + lx.lo] += go * (1.0 - ly.frac) * (1.0 - lx.frac);
                             plane[ly.lo * W + lx.hi] += go * (1.0 - ly.frac) * lx.frac;
                             plane[ly.hi * W + lx.lo] += go * ly.frac * (1.0 - lx.frac);
                             plane[ly.hi * W + lx.hi] += go * ly.frac * lx.frac;
                           }
                         }
                       }
                     });
}

Tensor gather_bilinear(const Tensor& feature_map, std::span<const PixelCoord> coords,
                       std::span<const std::uint8_t> valid) {
  require(feature_map.rank() == 3, ErrorCode::kShapeMismatch, "gather_bilinear expects [C, H, W]");
  require(valid.empty() || valid.size() == coords.size(), ErrorCode::kShapeMismatch,
          "validity mask length must match coordinate count");
  const std::size_t C = feature_map.dim(0);
  const std::size_t H = feature_map.dim(1);
  const std::size_t W = feature_map.dim(2);
  const std::size_t N = coords.size();
  std::vector<BilinearTap> taps(N);
  for (std::size_t n = 0; n < N; ++n) {
    if (valid.empty() || valid[n]) {
      taps[n] = bilinear_tap(H, W, coords[n].u, coords[n].v);
    } else {
      taps[n].offset.fill(-1);
    }
  }
  const std::size_t plane = H * W;
  std::vector<double> out(C * N, 0.0);
  const auto x = feature_map.data();
  for (std::size_t c = 0; c < C; ++c) {
    const double* src = x.data() + c * plane;
    double* dst = out.data() + c * N;
    for (std::size_t n = 0; n < N; ++n) {
      const BilinearTap& t = taps[n];
      double acc = 0.0;
      for (int q = 0; q < 4; ++q) {
        if (t.offset[q] >= 0) acc += t.weight[q] * src[t.offset[q]];
      }
      dst[n] = acc;
    }
  }
  auto fi = feature_map.impl();
  return make_result(Shape{C, N}, std::move(out), {feature_map}, "gather_bilinear",
                     [fi, C, N, plane, taps = std::move(taps)](const TensorImpl& o) {
                       auto g = fi->grad_buffer();
                       for (std::size_t c = 0; c < C; ++c) {
                         double* dst = g.data() + c * plane;
                         const double* go = o.grad.data() + c * N;
                         for (std::size_t n = 0; n < N; ++n) {
                           const BilinearTap& t = taps[n];
                           for (int q = 0; q < 4; ++q) {
                             if (t.offset[q] >= 0) dst[t.offset[q]] += t.weight[q] * go[n];
                           }
                         }
                       }
                     });
}

Tensor bilinear_sample(const Tensor& feature_map, double u, double v) {
  const PixelCoord px{u, v};
  Tensor column = gather_bilinear(feature_map, std::span<const PixelCoord>(&px, 1), {});
  return reshape(column, Shape{feature_map.dim(0)});
}

}  // namespace plume::ops
