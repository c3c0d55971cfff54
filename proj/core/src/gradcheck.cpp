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


#include "plume/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "plume/error.hpp"
#include "plume/losses.hpp"
#include "plume/networks.hpp"
#include "plume/ops.hpp"

namespace plume::gradcheck {

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = uniform(rng, lo, hi);
  return t;
}

// Magnitudes kept away from zero so ReLU/|x| kinks are rare.
Tensor signed_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) {
    const double m = uniform(rng, 0.1, 1.0);
    v = (rng() & 1) ? m : -m;
  }
  return t;
}

double evaluate(const LossFn& f, const std::vector<Tensor>& inputs) {
  NoGradGuard guard;
  const Tensor loss = f(inputs);
  require(loss.numel() == 1, ErrorCode::kShapeMismatch, "gradient check loss must be a scalar");
  return loss.item();
}

}  // namespace

Tensor project(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor r(out.shape());
  for (double& v : r.mutable_data()) v = n(rng);
  return ops::sum(ops::mul(out, r));
}

Result check(const std::string& name, const std::vector<Tensor>& inputs, const LossFn& f, const Options& options,
             Rng& rng) {
  Result result;
  result.name = name;
  for (const Tensor& t : inputs) {
    Tensor handle = t;
    handle.set_requires_grad(true);
    handle.zero_grad();
  }
  const Tensor loss = f(inputs);
  require(loss.numel() == 1, ErrorCode::kShapeMismatch, "gradient check loss must be a scalar");
  const double f0 = loss.item();
  backward(loss);

  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].numel(); ++j) entries.emplace_back(i, j);
  }
  if (options.max_entries != 0 && entries.size() > options.max_entries) {
    // Round-robin over inputs so every tensor is represented.
    std::vector<std::pair<std::size_t, std::size_t>> chosen;
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    while (chosen.size() < options.max_entries) {
      for (std::size_t i : order) {
        if (chosen.size() == options.max_entries) break;
        if (inputs[i].numel() == 0) continue;
        chosen.emplace_back(i, pick(rng, 0, inputs[i].numel() - 1));
      }
    }
    entries = std::move(chosen);
  }

  const double h = options.step;
  result.passed = true;
  for (const auto& [i, j] : entries) {
    Tensor t = inputs[i];
    const double analytic = t.has_grad() ? t.grad()[j] : 0.0;
    auto data = t.mutable_data();
    const double x = data[j];
    data[j] = x + h;
    const double fp = evaluate(f, inputs);
    data[j] = x - h;
    const double fm = evaluate(f, inputs);
    data[j] = x;
    const auto rel = [&](double numeric) {
      return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), options.floor});
    };
    double numeric = (fp - fm) / (2 * h);
    double err = rel(numeric);
    // Shorter steps before giving up: a parameter feeding many units can put
    // several ReLU kinks inside one step.
    for (double small = h / 10; err > options.tolerance && small >= h / 100; small /= 10) {
      data[j] = x + small;
      const double sp = evaluate(f, inputs);
      data[j] = x - small;
      const double sm = evaluate(f, inputs);
      data[j] = x;
      const double n = (sp - sm) / (2 * small);
      if (rel(n) < err) {
        err = rel(n);
        numeric = n;
      }
    }
    ++result.checked;
    if (err > options.tolerance) {
      const double fwd = (fp - f0) / h;
      const double bwd = (f0 - fm) / h;
      const auto close = [&](double a, double b) {
        return std::abs(a - b) <= 1e-3 * std::max({std::abs(a), std::abs(b), options.floor});
      };
      if (!close(fwd, bwd) && (close(analytic, fwd) || close(analytic, bwd))) {
        ++result.kinks;
        continue;
      }
    }
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      char buf[160];
      std::snprintf(buf, sizeof buf, "input[%zu] entry %zu: analytic %.10g numeric %.10g", i, j, analytic, numeric);
      result.worst = buf;
    }
    if (err > options.tolerance) result.passed = false;
  }
  if (result.kinks * 10 > result.checked) result.passed = false;
  for (const Tensor& t : inputs) {
    Tensor handle = t;
    handle.zero_grad();
  }
  return result;
}

namespace {

struct Case {
  std::string name;
  bool end_to_end = false;
  // Builds inputs and loss for one random draw.
  std::function<std::pair<std::vector<Tensor>, LossFn>(Rng& rng, std::uint64_t seed)> make;
};

LossFn projected(std::function<Tensor(const std::vector<Tensor>&)> op, std::uint64_t seed) {
  return [op = std::move(op), seed](const std::vector<Tensor>& in) { return project(op(in), seed); };
}

ops::ConvSpec random_spec(Rng& rng, std::size_t rank, bool transposed) {
  ops::ConvSpec s = ops::ConvSpec::uniform(rank, pick(rng, 1, 2), pick(rng, 0, 1), pick(rng, 1, 2));
  if (transposed) {
    s.output_padding.assign(rank, 0);
    for (std::size_t a = 0; a < rank; ++a) {
      if (s.stride[a] > 1) s.output_padding[a] = pick(rng, 0, s.stride[a] - 1);
    }
  }
  return s;
}

Case conv_case(std::size_t rank, bool transposed) {
  std::string name = std::string(transposed ? "conv_transpose" : "conv") + std::to_string(rank) + "d";
  return {name, false, [rank, transposed](Rng& rng, std::uint64_t seed) {
            const std::size_t cin = pick(rng, 1, 3);
            const std::size_t cout = pick(rng, 1, 3);
            const std::size_t k = pick(rng, 0, 1) ? 3 : 1 + pick(rng, 0, 1);
            ops::ConvSpec spec = random_spec(rng, rank, transposed);
            Shape in{cin};
            for (std::size_t a = 0; a < rank; ++a) {
              // Keep forward outputs non-empty for the largest dilated kernel.
              in.push_back(pick(rng, 5, rank == 2 ? 8 : 6));
            }
            Shape w = transposed ? Shape{cin, cout} : Shape{cout, cin};
            for (std::size_t a = 0; a < rank; ++a) w.push_back(k);
            if (transposed) {
              for (std::size_t a = 0; a < rank; ++a) spec.output_padding[a] = std::min(
                  spec.output_padding[a], std::max(spec.stride[a], spec.dilation[a]) - 1);
            }
            std::vector<Tensor> inputs{random_tensor(rng, in), random_tensor(rng, w), random_tensor(rng, {cout})};
            return std::make_pair(inputs, projected(
                                              [spec, transposed](const std::vector<Tensor>& x) {
                                                return transposed ? ops::conv_transpose(x[0], x[1], x[2], spec)
                                                                  : ops::conv(x[0], x[1], x[2], spec);
                                              },
                                              seed));
          }};
}

template <typename Op>
Case unary_case(std::string name, Op op, bool signed_input = false) {
  return {std::move(name), false, [op, signed_input](Rng& rng, std::uint64_t seed) {
            Shape s{pick(rng, 1, 3), pick(rng, 1, 5), pick(rng, 1, 5)};
            Tensor x = signed_input ? signed_tensor(rng, s) : random_tensor(rng, s, -2.0, 2.0);
            return std::make_pair(std::vector<Tensor>{x},
                                  projected([op](const std::vector<Tensor>& in) { return op(in[0]); }, seed));
          }};
}

OccupancyGrid random_labels(Rng& rng, const Shape& s) {
  OccupancyGrid g;
  g.dims = GridDims{s[0], s[1], s[2]};
  g.values.resize(g.dims.count());
  g.fov_mask.resize(g.dims.count());
  for (std::size_t n = 0; n < g.values.size(); ++n) {
    g.values[n] = static_cast<double>(rng() & 1);
    g.fov_mask[n] = (rng() % 4) != 0;
  }
  return g;
}

struct RandomScene {
  VoxelGridSpec grid;
  CameraRig rig;
};

// Small grid in front of a rig whose image is H x W.
RandomScene random_scene(Rng& rng, std::size_t H, std::size_t W) {
  RandomScene s;
  const double res = 0.5;
  s.grid.resolution = res;
  const double x0 = -res * static_cast<double>(pick(rng, 2, 5));
  s.grid.x_range = {x0, x0 + res * static_cast<double>(pick(rng, 3, 8))};
  s.grid.y_range = {-0.5, -0.5 + res * static_cast<double>(pick(rng, 1, 3))};
  const double z0 = uniform(rng, 1.5, 3.0);
  s.grid.z_range = {z0, z0 + res * static_cast<double>(pick(rng, 3, 8))};
  s.rig.image_w = static_cast<int>(W);
  s.rig.image_h = static_cast<int>(H);
  s.rig.fx = uniform(rng, 0.6, 1.2) * static_cast<double>(W);
  s.rig.fy = s.rig.fx * uniform(rng, 0.9, 1.1);
  s.rig.cx = uniform(rng, 0.4, 0.6) * static_cast<double>(W - 1);
  s.rig.cy = uniform(rng, 0.4, 0.6) * static_cast<double>(H - 1);
  s.rig.baseline = uniform(rng, 0.2, 0.6);
  return s;
}

std::vector<BevBox> random_boxes(Rng& rng, const VoxelGridSpec& grid, std::size_t count) {
  std::vector<BevBox> boxes;
  for (std::size_t n = 0; n < count; ++n) {
    BevBox b;
    b.u = uniform(rng, grid.x_range.min + 1.0, grid.x_range.max - 1.0);
    b.v = uniform(rng, grid.z_range.min + 1.0, grid.z_range.max - 1.0);
    b.w = uniform(rng, 1.2, 2.0);
    b.h = uniform(rng, 2.5, 4.5);
    b.theta = uniform(rng, -3.1, 3.1);
    boxes.push_back(b);
  }
  return boxes;
}

NetworkConfig toy_config(std::size_t draw) {
  NetworkConfig c;
  c.variant = Variant::kSmall;
  c.scale = 0.125;
  c.dropout = 0.2;
  c.grid.x_range = {-4.0, 4.0};
  c.grid.y_range = {0.0, 1.0};
  c.grid.z_range = {2.0, 10.0};
  c.grid.resolution = 0.5;
  static const VolumeNet nets[] = {VolumeNet::kHybrid3dBev, VolumeNet::kBevOnly, VolumeNet::kPure3d};
  static const FeatureResolution res[] = {FeatureResolution::kFull, FeatureResolution::kHalf,
                                          FeatureResolution::kQuarter};
  c.volume_net = nets[draw % 3];
  c.image_feature_resolution = res[(draw / 3) % 3];
  c.fusion_enabled = draw % 2 == 0;
  c.concat_voxel_coords = draw % 4 == 1;
  c.share_stereo_weights = draw % 5 != 2;
  return c;
}

std::vector<Case> all_cases() {
  std::vector<Case> cases;
  cases.push_back(conv_case(2, false));
  cases.push_back(conv_case(3, false));
  cases.push_back(conv_case(2, true));
  cases.push_back(conv_case(3, true));

  cases.push_back({"avg_pool2d", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t kh = pick(rng, 1, 3), kw = pick(rng, 1, 3);
                     const std::size_t sh = pick(rng, 1, kh), sw = pick(rng, 1, kw);
                     Tensor x = random_tensor(rng, {pick(rng, 1, 3), pick(rng, kh, 7), pick(rng, kw, 7)});
                     return std::make_pair(std::vector<Tensor>{x},
                                           projected(
                                               [=](const std::vector<Tensor>& in) {
                                                 return ops::avg_pool2d(in[0], kh, kw, sh, sw);
                                               },
                                               seed));
                   }});
  cases.push_back({"max_pool2d", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t window = pick(rng, 2, 3), stride = pick(rng, 1, 2);
                     const std::size_t pad = pick(rng, 0, window / 2);
                     // Distinct values spaced well beyond the step avoid ties and kinks.
                     Shape s{pick(rng, 1, 3), pick(rng, 3, 7), pick(rng, 3, 7)};
                     Tensor x(s);
                     auto d = x.mutable_data();
                     for (std::size_t n = 0; n < d.size(); ++n) d[n] = 0.01 * static_cast<double>(n);
                     std::shuffle(d.begin(), d.end(), rng);
                     return std::make_pair(std::vector<Tensor>{x},
                                           projected(
                                               [=](const std::vector<Tensor>& in) {
                                                 return ops::max_pool2d(in[0], window, stride, pad);
                                               },
                                               seed));
                   }});
  cases.push_back({"upsample_bilinear", false, [](Rng& rng, std::uint64_t seed) {
                     Tensor x = random_tensor(rng, {pick(rng, 1, 3), pick(rng, 1, 5), pick(rng, 1, 5)});
                     const std::size_t oh = pick(rng, 1, 9), ow = pick(rng, 1, 9);
                     return std::make_pair(std::vector<Tensor>{x},
                                           projected(
                                               [=](const std::vector<Tensor>& in) {
                                                 return ops::upsample_bilinear(in[0], oh, ow);
                                               },
                                               seed));
                   }});
  cases.push_back({"bilinear_sample", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t H = pick(rng, 2, 6), W = pick(rng, 2, 6);
                     Tensor x = random_tensor(rng, {pick(rng, 1, 4), H, W});
                     // Includes partially outside reads.
                     const double u = uniform(rng, -0.8, static_cast<double>(W) - 0.2);
                     const double v = uniform(rng, -0.8, static_cast<double>(H) - 0.2);
                     return std::make_pair(std::vector<Tensor>{x},
                                           projected(
                                               [=](const std::vector<Tensor>& in) {
                                                 return ops::bilinear_sample(in[0], u, v);
                                               },
                                               seed));
                   }});
  cases.push_back({"gather_bilinear", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t H = pick(rng, 2, 6), W = pick(rng, 2, 6), N = pick(rng, 1, 12);
                     Tensor x = random_tensor(rng, {pick(rng, 1, 4), H, W});
                     std::vector<PixelCoord> coords(N);
                     std::vector<std::uint8_t> valid(N);
                     for (std::size_t n = 0; n < N; ++n) {
                       coords[n] = {uniform(rng, -1.0, static_cast<double>(W)),
                                    uniform(rng, -1.0, static_cast<double>(H))};
                       valid[n] = (rng() % 5) != 0;
                     }
                     return std::make_pair(std::vector<Tensor>{x},
                                           projected(
                                               [=](const std::vector<Tensor>& in) {
                                                 return ops::gather_bilinear(in[0], coords, valid);
                                               },
                                               seed));
                   }});

  const auto binary = [](std::string name, auto op, bool broadcast) {
    return Case{std::move(name), false, [op, broadcast](Rng& rng, std::uint64_t seed) {
                  Shape s{pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 4)};
                  Shape sb = s;
                  if (broadcast) sb[0] = 1;
                  std::vector<Tensor> inputs{random_tensor(rng, s), random_tensor(rng, sb)};
                  return std::make_pair(
                      inputs, projected([op](const std::vector<Tensor>& in) { return op(in[0], in[1]); }, seed));
                }};
  };
  cases.push_back(binary("add", ops::add, false));
  cases.push_back(binary("sub", ops::sub, false));
  cases.push_back(binary("mul", ops::mul, false));
  cases.push_back(binary("mul_broadcast", ops::mul, true));

  cases.push_back(unary_case("scale", [](const Tensor& x) { return ops::scale(x, -1.7); }));
  cases.push_back(unary_case("relu", [](const Tensor& x) { return ops::relu(x); }, true));
  cases.push_back(unary_case("sigmoid", [](const Tensor& x) { return ops::sigmoid(x); }));
  cases.push_back(unary_case("square", [](const Tensor& x) { return ops::square(x); }));
  cases.push_back(unary_case("sum", [](const Tensor& x) { return ops::scale(ops::sum(x), 0.7); }));
  cases.push_back(unary_case("mean", [](const Tensor& x) { return ops::scale(ops::mean(x), 1.3); }));
  for (std::size_t axis = 0; axis < 3; ++axis) {
    cases.push_back(unary_case("sum_axis" + std::to_string(axis),
                               [axis](const Tensor& x) { return ops::sum_axis(x, axis); }));
  }
  cases.push_back(unary_case("reshape", [](const Tensor& x) { return ops::reshape(x, Shape{x.numel(), 1}); }));
  cases.push_back(unary_case("permute", [](const Tensor& x) { return ops::permute(x, {2, 0, 1}); }));
  cases.push_back(unary_case("dropout", [](const Tensor& x) {
    Rng mask_rng(99);  // identical mask on every evaluation
    return ops::dropout(x, 0.3, true, mask_rng);
  }));
  cases.push_back({"concat", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t axis = pick(rng, 0, 2);
                     Shape s{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)};
                     std::vector<Tensor> inputs;
                     const std::size_t parts = pick(rng, 2, 3);
                     for (std::size_t p = 0; p < parts; ++p) {
                       Shape sp = s;
                       sp[axis] = pick(rng, 1, 3);
                       inputs.push_back(random_tensor(rng, sp));
                     }
                     return std::make_pair(
                         inputs, projected([axis](const std::vector<Tensor>& in) { return ops::concat(in, axis); },
                                           seed));
                   }});

  cases.push_back({"occupancy_bce", false, [](Rng& rng, std::uint64_t) {
                     Shape s{pick(rng, 1, 4), pick(rng, 1, 3), pick(rng, 1, 4)};
                     OccupancyGrid labels = random_labels(rng, s);
                     Tensor p = random_tensor(rng, s, 0.05, 0.95);
                     return std::make_pair(std::vector<Tensor>{p}, LossFn([labels](const std::vector<Tensor>& in) {
                                             return occupancy_bce(in[0], labels);
                                           }));
                   }});
  cases.push_back({"occupancy_bce_logits", false, [](Rng& rng, std::uint64_t) {
                     Shape s{pick(rng, 1, 4), pick(rng, 1, 3), pick(rng, 1, 4)};
                     OccupancyGrid labels = random_labels(rng, s);
                     Tensor x = random_tensor(rng, s, -4.0, 4.0);
                     return std::make_pair(std::vector<Tensor>{x}, LossFn([labels](const std::vector<Tensor>& in) {
                                             return occupancy_bce_logits(in[0], labels);
                                           }));
                   }});
  cases.push_back({"focal_loss_logits", false, [](Rng& rng, std::uint64_t) {
                     const std::size_t A = pick(rng, 1, 5), B = pick(rng, 1, 5);
                     std::vector<std::uint8_t> targets(A * B);
                     for (auto& t : targets) t = (rng() % 3) == 0;
                     Tensor x = random_tensor(rng, {1, A, B}, -5.0, 5.0);
                     const double alpha = uniform(rng, 0.1, 0.9), gamma = uniform(rng, 0.0, 3.0);
                     return std::make_pair(std::vector<Tensor>{x},
                                           LossFn([=](const std::vector<Tensor>& in) {
                                             return focal_loss_logits(in[0], targets, 3.0, alpha, gamma);
                                           }));
                   }});
  for (SmoothL1Mode mode : {SmoothL1Mode::kHuberBeta05, SmoothL1Mode::kPaperLiteral}) {
    const bool literal = mode == SmoothL1Mode::kPaperLiteral;
    cases.push_back({literal ? "smooth_l1_literal" : "smooth_l1_huber", false, [mode](Rng& rng, std::uint64_t) {
                       const std::size_t A = pick(rng, 1, 4), B = pick(rng, 1, 4);
                       std::vector<std::uint8_t> mask(A * B);
                       for (auto& m : mask) m = (rng() % 2) == 0;
                       std::vector<double> target(6 * A * B);
                       for (double& t : target) t = uniform(rng, -2.0, 2.0);
                       Tensor x = random_tensor(rng, {6, A, B}, -2.0, 2.0);
                       return std::make_pair(std::vector<Tensor>{x},
                                             LossFn([=](const std::vector<Tensor>& in) {
                                               return smooth_l1_loss(in[0], target, mask, 2.0, mode);
                                             }));
                     }});
  }
  cases.push_back({"detection_loss", false, [](Rng& rng, std::uint64_t) {
                     VoxelGridSpec grid;
                     grid.x_range = {-8.0, 8.0};
                     grid.z_range = {2.0, 18.0};
                     grid.y_range = {0.0, 1.0};
                     grid.resolution = 0.5;
                     const std::vector<BevBox> boxes = random_boxes(rng, grid, pick(rng, 0, 3));
                     const DetectionTargets targets = encode_detection_targets(boxes, grid, 4);
                     Tensor cls = random_tensor(rng, {1, targets.rows, targets.cols}, -3.0, 3.0);
                     Tensor reg = random_tensor(rng, {6, targets.rows, targets.cols});
                     return std::make_pair(std::vector<Tensor>{cls, reg},
                                           LossFn([targets](const std::vector<Tensor>& in) {
                                             return detection_loss(DenseDetections{in[0], in[1]}, targets).total;
                                           }));
                   }});

  cases.push_back({"build_plume", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t H = pick(rng, 4, 10), W = pick(rng, 6, 14), C = pick(rng, 1, 3);
                     const RandomScene scene = random_scene(rng, H, W);
                     const bool coords = rng() & 1;
                     const bool both = rng() & 1;
                     std::vector<Tensor> inputs{random_tensor(rng, {C, H, W}), random_tensor(rng, {C, H, W})};
                     return std::make_pair(inputs, projected(
                                                       [=](const std::vector<Tensor>& in) {
                                                         return build_plume(in[0], in[1], scene.grid, scene.rig,
                                                                            coords, both)
                                                             .values;
                                                       },
                                                       seed));
                   }});
  cases.push_back({"image_feature_fusion", false, [](Rng& rng, std::uint64_t seed) {
                     const std::size_t H = pick(rng, 4, 10), W = pick(rng, 6, 14), C = pick(rng, 1, 3);
                     const RandomScene scene = random_scene(rng, H, W);
                     const GridDims d = grid_dims(scene.grid);
                     std::vector<Tensor> inputs{random_tensor(rng, {C, H, W}), random_tensor(rng, {C, H, W}),
                                                random_tensor(rng, {d.x, d.y, d.z}, 0.0, 1.0),
                                                random_tensor(rng, {pick(rng, 1, 3), d.x, d.z})};
                     return std::make_pair(inputs, projected(
                                                       [=](const std::vector<Tensor>& in) {
                                                         return image_feature_fusion(in[0], in[1], in[2], in[3],
                                                                                     scene.grid, scene.rig);
                                                       },
                                                       seed));
                   }});
  return cases;
}

// Toy model, random stereo pair and labels; loss = occupancy BCE plus the
// detection loss through the (optionally fused) detection head.
Result end_to_end(std::size_t draw, std::uint64_t seed, const Options& options) {
  Rng rng(seed);
  const NetworkConfig config = toy_config(draw);
  auto model = std::make_shared<PlumeModel>(config, seed);
  const std::size_t H = 16, W = 32;
  CameraRig rig;
  rig.image_w = static_cast<int>(W);
  rig.image_h = static_cast<int>(H);
  rig.fx = rig.fy = 16.0;
  rig.cx = 15.5;
  rig.cy = 4.0;
  rig.baseline = 0.5;
  const Tensor left = random_tensor(rng, {3, H, W}, 0.0, 1.0);
  const Tensor right = random_tensor(rng, {3, H, W}, 0.0, 1.0);
  const GridDims d = grid_dims(config.grid);
  const OccupancyGrid labels = random_labels(rng, Shape{d.x, d.y, d.z});
  const DetectionTargets targets = encode_detection_targets(random_boxes(rng, config.grid, 2), config.grid, 4);

  std::vector<Tensor> params;
  for (const auto& [name, t] : model->parameters().entries()) {
    // Zero-initialised biases put every out-of-view voxel exactly on a ReLU
    // kink; check at a generic point instead.
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0) {
      Tensor b = t;
      for (double& v : b.mutable_data()) v = uniform(rng, -0.1, 0.1);
    }
    params.push_back(t);
  }
  const LossFn f = [=](const std::vector<Tensor>&) {
    Rng dropout_rng(seed ^ 0x5eedULL);
    ForwardContext ctx{true, &dropout_rng, nullptr};
    const BackboneOutputs b = model->backbone(left, right, rig, ctx);
    const DenseDetections det = model->detection_head(model->detection_input(b), ctx);
    return ops::add(occupancy_loss(b.occupancy_logits, labels).total, detection_loss(det, targets).total);
  };
  const std::string name = "end_to_end[" + to_string(config.volume_net) + "," +
                           to_string(config.image_feature_resolution) + (config.fusion_enabled ? ",fusion" : "") +
                           (config.concat_voxel_coords ? ",coords" : "") +
                           (config.share_stereo_weights ? "" : ",unshared") + "]";
  return check(name, params, f, options, rng);
}

}  // namespace

std::vector<std::string> case_names() {
  std::vector<std::string> names;
  for (const Case& c : all_cases()) names.push_back(c.name);
  names.push_back("end_to_end");
  return names;
}

std::vector<Result> run_suite(const SuiteOptions& options, const std::function<void(const Result&)>& on_result) {
  std::vector<Result> results;
  const auto emit = [&](Result r) {
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  };
  Options op_options;
  std::uint64_t case_index = 0;
  for (const Case& c : all_cases()) {
    ++case_index;
    if (!options.filter.empty() && c.name.find(options.filter) == std::string::npos) continue;
    // One aggregated result per case over all random draws.
    Result total;
    total.name = c.name;
    total.passed = true;
    for (std::size_t draw = 0; draw < options.shapes_per_op; ++draw) {
      const std::uint64_t seed = options.seed * 1000003ULL + case_index * 1009ULL + draw;
      Rng rng(seed);
      auto [inputs, f] = c.make(rng, seed);
      const Result r = check(c.name, inputs, f, op_options, rng);
      total.checked += r.checked;
      total.kinks += r.kinks;
      if (r.max_rel_error >= total.max_rel_error) {
        total.max_rel_error = r.max_rel_error;
        total.worst = "draw " + std::to_string(draw) + " " + r.worst;
      }
      total.passed = total.passed && r.passed;
    }
    emit(std::move(total));
  }
  if (options.end_to_end && (options.filter.empty() || std::string("end_to_end").find(options.filter) != std::string::npos)) {
    Options e2e = op_options;
    e2e.max_entries = 400;
    for (std::size_t draw = 0; draw < options.shapes_per_op; ++draw) {
      emit(end_to_end(draw, options.seed * 7919ULL + draw, e2e));
    }
  }
  return results;
}

}  // namespace plume::gradcheck
