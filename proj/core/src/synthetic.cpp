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

#include "plume/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "plume/error.hpp"
#include "plume/kitti.hpp"
#include "plume/postproc.hpp"

namespace plume {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  // 53-bit uniform in [0, 1); independent of the standard library's distributions.
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double in(const Interval& i) { return i.lo + (i.hi - i.lo) * unit(); }
  std::size_t index(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(unit() * (hi - lo + 1)); }

 private:
  std::mt19937_64 rng_;
};

std::uint64_t mix(std::uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

// Deterministic value in [0, 1) for an integer lattice cell.
double lattice_noise(std::uint64_t seed, long a, long b, long c = 0) {
  std::uint64_t h = mix(seed ^ 0x9e3779b97f4a7c15ULL);
  h = mix(h ^ static_cast<std::uint64_t>(a));
  h = mix(h ^ static_cast<std::uint64_t>(b));
  h = mix(h ^ static_cast<std::uint64_t>(c));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

using Color = std::array<double, 3>;

struct SurfacePoint {
  Point3 p;
  Color color;
  double spacing;
};

struct Placed {
  BevBox box;
  double height;
  Color base;
};

Color box_color(std::size_t index, double hue_shift) {
  static constexpr std::array<Color, 6> palette{{{0.85, 0.15, 0.10},
                                                  {0.10, 0.35, 0.85},
                                                  {0.90, 0.80, 0.10},
                                                  {0.15, 0.70, 0.25},
                                                  {0.75, 0.20, 0.80},
                                                  {0.95, 0.55, 0.10}}};
  Color c = palette[index % palette.size()];
  for (double& v : c) v = std::clamp(v + 0.1 * (hue_shift - 0.5), 0.0, 1.0);
  return c;
}

bool fits_grid(const BevBox& b, const VoxelGridSpec& g, double margin) {
  for (const auto& c : b.corners()) {
    if (c[0] < g.x_range.min + margin || c[0] > g.x_range.max - margin) return false;
    if (c[1] < g.z_range.min + margin || c[1] > g.z_range.max - margin) return false;
  }
  return true;
}

void add_box_surface(const Placed& pl, const SyntheticSceneSpec& spec, std::uint64_t seed, std::size_t box_index,
                     std::vector<SurfacePoint>& out) {
  const BevBox& b = pl.box;
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double ds = spec.surface_spacing;
  auto world = [&](double a, double lb, double y) {
    return Point3{b.u + c * a - s * lb, y, b.v + s * a + c * lb};
  };
  const double top = spec.ground_y - pl.height;
  // Faces: +a, -a (width sides), +b, -b (length sides), top.
  struct Face {
    int axis;     // 0: a fixed, 1: b fixed, 2: top
    double fixed;
    double shade;
  };
  const std::array<Face, 5> faces{{{0, 0.5 * b.w, 0.85},
                                   {0, -0.5 * b.w, 0.7},
                                   {1, 0.5 * b.h, 1.0},
                                   {1, -0.5 * b.h, 0.6},
                                   {2, top, 0.95}}};
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    const double span1 = face.axis == 0 ? b.h : b.w;  // along the face's horizontal direction
    const double span2 = face.axis == 2 ? b.h : pl.height;
    const long n1 = std::max<long>(1, std::lround(span1 / ds));
    const long n2 = std::max<long>(1, std::lround(span2 / ds));
    for (long i = 0; i <= n1; ++i) {
      for (long j = 0; j <= n2; ++j) {
        const double t1 = -0.5 * span1 + span1 * static_cast<double>(i) / n1;
        const double t2 = span2 * static_cast<double>(j) / n2;
        Point3 p;
        if (face.axis == 0) {
          p = world(face.fixed, t1, spec.ground_y - t2);
        } else if (face.axis == 1) {
          p = world(t1, face.fixed, spec.ground_y - t2);
        } else {
          p = world(t1, -0.5 * b.h + t2, top);
        }
        // Stripes and blotches give the stereo matcher something to lock onto.
        const double pattern = lattice_noise(seed, static_cast<long>(box_index * 8 + f), i / 5, j / 5);
        const double stripe = ((i / 4 + j / 6) % 2) ? 1.0 : 0.75;
        Color col;
        for (int k = 0; k < 3; ++k) col[k] = std::clamp(pl.base[k] * face.shade * stripe * (0.7 + 0.3 * pattern), 0.0, 1.0);
        out.push_back({p, col, ds});
      }
    }
  }
}

void splat(Tensor& image, std::vector<double>& zbuf, double u, double v, double half, double depth,
           const Color& col) {
  const long w = static_cast<long>(image.dim(2));
  const long h = static_cast<long>(image.dim(1));
  const long x0 = std::max<long>(0, std::lround(u - half));
  const long x1 = std::min<long>(w - 1, std::lround(u + half));
  const long y0 = std::max<long>(0, std::lround(v - half));
  const long y1 = std::min<long>(h - 1, std::lround(v + half));
  auto data = image.mutable_data();
  const std::size_t plane = static_cast<std::size_t>(w * h);
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y * w + x);
      if (depth >= zbuf[idx]) continue;
      zbuf[idx] = depth;
      for (std::size_t c = 0; c < 3; ++c) data[c * plane + idx] = col[c];
    }
  }
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  grid.validate();
  rig.validate();
  require(min_boxes <= max_boxes, ErrorCode::kInvalidSpec, "min_boxes exceeds max_boxes");
  require(ground_spacing > 0 && surface_spacing > 0, ErrorCode::kInvalidSpec, "point spacings must be positive");
  require(box_width.lo > 0 && box_length.lo > 0 && box_height.lo > 0, ErrorCode::kInvalidSpec,
          "box sizes must be positive");
  require(ground_y > grid.y_range.min && ground_y < grid.y_range.max, ErrorCode::kInvalidSpec,
          "ground plane must lie inside the grid's height range");
}

SyntheticSceneSpec SyntheticSceneSpec::toy(std::uint64_t seed) {
  SyntheticSceneSpec s;
  s.seed = seed;
  s.grid.x_range = {-6.4, 6.4};
  s.grid.y_range = {0.0, 1.6};
  s.grid.z_range = {2.0, 14.8};
  s.grid.resolution = 0.2;
  s.rig.fx = 64.0;
  s.rig.fy = 64.0;
  s.rig.cx = 63.5;
  s.rig.cy = 8.0;
  s.rig.baseline = 0.54;
  s.rig.image_w = 128;
  s.rig.image_h = 48;
  return s;
}

SyntheticScene synth_scene(const SyntheticSceneSpec& spec) {
  spec.validate();
  Sampler rng(spec.seed);
  const CameraRig& rig = spec.rig;

  // Place boxes without overlap, inside the grid, with centers in view.
  std::vector<Placed> placed;
  const std::size_t target = rng.index(spec.min_boxes, spec.max_boxes);
  for (int attempt = 0; attempt < 200 && placed.size() < target; ++attempt) {
    Placed p;
    p.box.w = rng.in(spec.box_width);
    p.box.h = rng.in(spec.box_length);
    p.height = rng.in(spec.box_height);
    p.box.theta = normalize_angle(rng.in(spec.heading));
    p.box.u = rng.in({spec.grid.x_range.min, spec.grid.x_range.max});
    p.box.v = rng.in({spec.grid.z_range.min, spec.grid.z_range.max});
    p.box.score = 1.0;
    p.base = box_color(placed.size(), rng.unit());
    if (!fits_grid(p.box, spec.grid, 0.2)) continue;
    const Point3 center{p.box.u, spec.ground_y - 0.5 * p.height, p.box.v};
    if (!in_fov(rig, center, true)) continue;
    BevBox inflated = p.box;
    inflated.w += 0.6;
    inflated.h += 0.6;
    bool overlaps = false;
    for (const Placed& q : placed) {
      BevBox other = q.box;
      other.w += 0.6;
      other.h += 0.6;
      if (rotated_iou(inflated, other) > 0) overlaps = true;
    }
    if (!overlaps) placed.push_back(p);
  }

  // Surface points.
  std::vector<SurfacePoint> points;
  const double gs = spec.ground_spacing;
  const long nz = static_cast<long>(std::ceil((spec.max_ground_depth - 0.5) / gs));
  for (long kz = 0; kz <= nz; ++kz) {
    const double z = 0.5 + kz * gs;
    const double reach = z * (rig.image_w + 2.0) / rig.fx + 1.0;  // lateral extent visible at this depth
    const long nx = static_cast<long>(std::ceil(reach / gs));
    for (long kx = -nx; kx <= nx; ++kx) {
      Point3 p{kx * gs + 0.3 * gs * (rng.unit() - 0.5), spec.ground_y, z + 0.3 * gs * (rng.unit() - 0.5)};
      if (p.z <= 0.1) continue;
      const bool under_box = std::any_of(placed.begin(), placed.end(),
                                         [&](const Placed& b) { return b.box.contains(p.x, p.z); });
      if (under_box) continue;
      const double tile = lattice_noise(spec.seed, static_cast<long>(std::floor(p.x / 0.3)),
                                        static_cast<long>(std::floor(p.z / 0.3)));
      const double fine = lattice_noise(spec.seed + 1, static_cast<long>(std::floor(p.x / 0.1)),
                                        static_cast<long>(std::floor(p.z / 0.1)));
      const double g = 0.25 + 0.25 * tile + 0.1 * fine;
      points.push_back({p, {g * 0.95, g, g * 0.9}, gs});
    }
  }
  for (std::size_t b = 0; b < placed.size(); ++b) add_box_surface(placed[b], spec, spec.seed, b, points);

  // Render.
  SyntheticScene scene;
  StereoSample& s = scene.sample;
  s.id = "synth_" + std::to_string(spec.seed);
  s.rig = rig;
  const std::size_t H = static_cast<std::size_t>(rig.image_h);
  const std::size_t W = static_cast<std::size_t>(rig.image_w);
  s.left = Tensor({3, H, W});
  s.right = Tensor({3, H, W});
  for (Tensor* img : {&s.left, &s.right}) {
    auto d = img->mutable_data();
    for (std::size_t y = 0; y < H; ++y) {
      const double t = static_cast<double>(y) / static_cast<double>(H);
      const Color sky{0.55 + 0.2 * t, 0.65 + 0.15 * t, 0.85};
      for (std::size_t x = 0; x < W; ++x) {
        for (std::size_t c = 0; c < 3; ++c) d[(c * H + y) * W + x] = sky[c];
      }
    }
  }
  std::vector<double> zl(H * W, std::numeric_limits<double>::infinity());
  std::vector<double> zr(H * W, std::numeric_limits<double>::infinity());
  s.cloud.reserve(points.size());
  for (const SurfacePoint& sp : points) {
    s.cloud.push_back(sp.p);
    if (sp.p.z <= 0) continue;
    const PixelCoord l = project_to_image(rig, sp.p);
    const PixelCoord r = project_to_right(rig, sp.p);
    const double half = 0.5 * sp.spacing * rig.fx / sp.p.z;
    const bool left_hit = l.u > -half - 1 && l.u < W + half && l.v > -half - 1 && l.v < H + half;
    const bool right_hit = r.u > -half - 1 && r.u < W + half && r.v > -half - 1 && r.v < H + half;
    if (!left_hit && !right_hit) continue;
    if (left_hit) splat(s.left, zl, l.u, l.v, half, sp.p.z, sp.color);
    if (right_hit) splat(s.right, zr, r.u, r.v, half, sp.p.z, sp.color);
    scene.splats.push_back({sp.p, l.u, r.u, l.v});
  }

  // Ground truth.
  for (const Placed& p : placed) {
    GroundTruthBox g;
    g.box = p.box;
    g.type = "Car";
    g.height_3d = p.height;
    g.y = spec.ground_y;
    double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
    double u1 = -u0, v1 = -u0;
    for (const auto& c : p.box.corners()) {
      for (double y : {spec.ground_y, spec.ground_y - p.height}) {
        const PixelCoord px = project_to_image(rig, {c[0], y, c[1]});
        u0 = std::min(u0, px.u);
        u1 = std::max(u1, px.u);
        v0 = std::min(v0, px.v);
        v1 = std::max(v1, px.v);
      }
    }
    const double full_w = u1 - u0;
    g.bbox = {std::clamp(u0, 0.0, W - 1.0), std::clamp(v0, 0.0, H - 1.0), std::clamp(u1, 0.0, W - 1.0),
              std::clamp(v1, 0.0, H - 1.0)};
    g.image_bbox_height = g.bbox[3] - g.bbox[1];
    g.truncation = full_w > 0 ? std::clamp(1.0 - (g.bbox[2] - g.bbox[0]) / full_w, 0.0, 1.0) : 0.0;
    g.occlusion = 0;
    const double ry = rotation_y_from_theta(p.box.theta);
    g.alpha = normalize_angle(ry - std::atan2(p.box.u, p.box.v));
    g.difficulty = assign_difficulty(g);
    s.gt_boxes.push_back(g);
  }
  scene.occupancy = occupancy_from_points(spec.grid, s.cloud, rig, true);
  return scene;
}

}  // namespace plume
