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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plume/postproc.hpp"

namespace plume {

enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2, kIgnored = 3 };
std::string to_string(Difficulty d);

struct GroundTruthBox {
  BevBox box;
  std::string type = "Car";
  double image_bbox_height = 0.0;  // pixels
  int occlusion = 0;               // 0..3
  double truncation = 0.0;         // [0, 1]
  Difficulty difficulty = Difficulty::kIgnored;

  // Remaining KITTI label fields, kept so labels round-trip.
  double alpha = 0.0;
  std::array<double, 4> bbox{};  // x1 y1 x2 y2
  double height_3d = 0.0;
  double y = 0.0;  // camera-frame y of the bottom center
};

// easy: height >= 40, occ <= 0, trunc <= 0.15; moderate: height >= 25,
// occ <= 1, trunc <= 0.30; hard: height >= 25, occ <= 2, trunc <= 0.50.
// DontCare labels are always ignored.
Difficulty assign_difficulty(const GroundTruthBox& gt);

// Whether a ground truth is counted at evaluation level `level`. Levels are
// cumulative (easy boxes count at moderate and hard). std::nullopt counts
// every box of the evaluated class regardless of difficulty.
bool counts_at(const GroundTruthBox& gt, std::optional<Difficulty> level, const std::string& evaluated_type = "Car");

struct MatchResult {
  std::vector<double> scores;      // per detection, in input order
  std::vector<std::uint8_t> tp;    // 1 if matched a counted ground truth
  std::vector<std::uint8_t> fp;    // 1 if unmatched; tp = fp = 0 for ignored matches
  std::vector<std::uint8_t> gt_used;
  std::size_t counted_gt = 0;
};

// Detections must be sorted by score descending. Each takes the highest-IoU
// unmatched counted ground truth with IoU >= threshold.
MatchResult match_detections(std::span<const BevBox> detections, std::span<const GroundTruthBox> gts,
                             double iou_threshold, std::optional<Difficulty> level,
                             const std::string& evaluated_type = "Car");

enum class ApMode { kElevenPoint, kFortyPoint };

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Pooled precision/recall at every distinct score threshold, highest first.
std::vector<PrPoint> precision_recall(std::span<const MatchResult> frames);
// Mean interpolated precision at 11 (0, 0.1, ..., 1) or 40 (1/40, ..., 1)
// recall points. Throws kNoGroundTruth when no frame counts a ground truth.
double average_precision(std::span<const MatchResult> frames, ApMode mode = ApMode::kElevenPoint);

struct EvalFrame {
  std::vector<BevBox> detections;
  std::vector<GroundTruthBox> ground_truth;
};

struct ApTable {
  std::vector<Difficulty> rows{Difficulty::kEasy, Difficulty::kModerate, Difficulty::kHard};
  std::vector<double> iou_thresholds{0.5, 0.7};
  // values[row][col] as a fraction; empty when the bucket has no ground truth.
  std::vector<std::vector<std::optional<double>>> values;
};

ApTable evaluate(std::span<const EvalFrame> frames, ApMode mode = ApMode::kElevenPoint,
                 std::vector<double> iou_thresholds = {0.5, 0.7});
// AP over all ground truths of the class, ignoring difficulty.
double evaluate_all(std::span<const EvalFrame> frames, double iou_threshold, ApMode mode = ApMode::kElevenPoint);

// Rows = difficulty, columns = IoU threshold, cells = AP percent with 2 decimals.
std::string format_ap_table(const ApTable& table);
std::string format_ap_csv(const ApTable& table);

}  // namespace plume
