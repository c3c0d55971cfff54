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

#include "plume/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "plume/binary_io.hpp"
#include "plume/error.hpp"

namespace plume {

namespace {

constexpr double kClipEps = 1e-9;

double cross(const BevBox::Corner& o, const BevBox::Corner& a, const BevBox::Corner& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

void check_box(const BevBox& b) {
  require(b.w > 0 && b.h > 0 && std::isfinite(b.w) && std::isfinite(b.h), ErrorCode::kDegenerateBox,
          "box size must be positive, got " + std::to_string(b.w) + " x " + std::to_string(b.h));
}

}  // namespace

double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0) r += two_pi;
  r -= std::numbers::pi;
  return r >= std::numbers::pi ? -std::numbers::pi : r;
}

std::array<BevBox::Corner, 4> BevBox::corners() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double hw = 0.5 * w;
  const double hh = 0.5 * h;
  const std::array<Corner, 4> local{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  std::array<Corner, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {u + c * local[i][0] - s * local[i][1], v + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

bool BevBox::contains(double pu, double pv) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double du = pu - u;
  const double dv = pv - v;
  const double a = c * du + s * dv;
  const double b = -s * du + c * dv;
  return std::abs(a) <= 0.5 * w && std::abs(b) <= 0.5 * h;
}

std::array<double, 2> cell_center(const VoxelGridSpec& grid, std::size_t stride, std::size_t i, std::size_t j) {
  const double cell = grid.resolution * static_cast<double>(stride);
  return {grid.x_range.min + (static_cast<double>(i) + 0.5) * cell,
          grid.z_range.min + (static_cast<double>(j) + 0.5) * cell};
}

std::array<std::size_t, 2> detection_map_dims(const VoxelGridSpec& grid, std::size_t stride) {
  const GridDims d = grid_dims(grid);
  return {(d.x + stride - 1) / stride, (d.z + stride - 1) / stride};
}

std::vector<BevBox> decode_boxes(const Tensor& class_logits, const Tensor& regression, const VoxelGridSpec& grid,
                                 std::size_t stride, double score_threshold) {
  require(class_logits.rank() == 3 && class_logits.dim(0) == 1 && regression.rank() == 3 && regression.dim(0) == 6 &&
              class_logits.dim(1) == regression.dim(1) && class_logits.dim(2) == regression.dim(2),
          ErrorCode::kShapeMismatch,
          "decode_boxes expects [1, A, B] and [6, A, B], got " + shape_to_string(class_logits.shape()) + " and " +
              shape_to_string(regression.shape()));
  const std::size_t rows = class_logits.dim(1);
  const std::size_t cols = class_logits.dim(2);
  const std::size_t plane = rows * cols;
  const auto logits = class_logits.data();
  const auto reg = regression.data();
  std::vector<BevBox> out;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t c = i * cols + j;
      const double score = 1.0 / (1.0 + std::exp(-logits[c]));
      if (!(score > score_threshold)) continue;
      const auto [cu, cv] = cell_center(grid, stride, i, j);
      BevBox b;
      b.u = cu + reg[c];
      b.v = cv + reg[plane + c];
      b.w = std::exp(reg[2 * plane + c]);
      b.h = std::exp(reg[3 * plane + c]);
      b.theta = normalize_angle(std::atan2(reg[4 * plane + c], reg[5 * plane + c]));
      b.score = score;
      out.push_back(b);
    }
  }
  return out;
}

double polygon_area(std::span<const BevBox::Corner> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& p = polygon[i];
    const auto& q = polygon[(i + 1) % polygon.size()];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(twice);
}

std::vector<BevBox::Corner> clip_convex(std::span<const BevBox::Corner> subject,
                                        std::span<const BevBox::Corner> clip) {
  std::vector<BevBox::Corner> poly(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !poly.empty(); ++e) {
    const auto& a = clip[e];
    const auto& b = clip[(e + 1) % clip.size()];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    // Signed distance to the edge line; inside is the left side of a->b.
    auto side = [&](const BevBox::Corner& p) { return cross(a, b, p) / len; };
    std::vector<BevBox::Corner> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& p = poly[i];
      const auto& q = poly[(i + 1) % poly.size()];
      const double sp = side(p);
      const double sq = side(q);
      const bool p_in = sp >= -kClipEps;
      const bool q_in = sq >= -kClipEps;
      if (p_in) next.push_back(p);
      if (p_in != q_in && std::abs(sp - sq) > 0) {
        const double t = sp / (sp - sq);
        if (t > 0 && t < 1) next.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      }
    }
    poly = std::move(next);
  }
  return poly;
}

double rotated_iou(const BevBox& a, const BevBox& b) {
  check_box(a);
  check_box(b);
  const auto ca = a.corners();
  const auto cb = b.corners();
  // Quick reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(a.w, a.h);
  const double rb = 0.5 * std::hypot(b.w, b.h);
  if (std::hypot(a.u - b.u, a.v - b.v) > ra + rb) return 0.0;
  const auto inter_poly = clip_convex(ca, cb);
  if (inter_poly.size() < 3) return 0.0;
  const double inter = polygon_area(inter_poly);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool nms_order(const BevBox& a, const BevBox& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.u != b.u) return a.u < b.u;
  return a.v < b.v;
}

std::vector<BevBox> nms(std::vector<BevBox> boxes, double iou_threshold) {
  std::stable_sort(boxes.begin(), boxes.end(), nms_order);
  std::vector<BevBox> kept;
  for (const BevBox& b : boxes) {
    bool keep = true;
    for (const BevBox& k : kept) {
      if (rotated_iou(b, k) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(b);
  }
  return kept;
}

std::string format_detections(std::span<const BevBox> boxes) {
  std::string out;
  char line[256];
  for (const BevBox& b : boxes) {
    std::snprintf(line, sizeof(line), "%d %.9g %.9g %.9g %.9g %.9g %.9g\n", b.class_id, b.u, b.v, b.w, b.h, b.theta,
                  b.score);
    out += line;
  }
  return out;
}

std::vector<BevBox> parse_detections(const std::string& text) {
  std::vector<BevBox> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    BevBox b;
    std::string extra;
    if (!(fields >> b.class_id >> b.u >> b.v >> b.w >> b.h >> b.theta >> b.score) || (fields >> extra)) {
      fail(ErrorCode::kMalformedLine, "detection line " + std::to_string(line_no) + ": expected 7 fields");
    }
    out.push_back(b);
  }
  return out;
}

void write_detections_file(const std::string& path, std::span<const BevBox> boxes) {
  write_file_text(path, format_detections(boxes));
}

std::vector<BevBox> read_detections_file(const std::string& path) { return parse_detections(read_file_text(path)); }

}  // namespace plume
