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

#include "plume/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include "plume/error.hpp"

namespace plume {

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
    case Difficulty::kIgnored: return "ignored";
  }
  return "?";
}

Difficulty assign_difficulty(const GroundTruthBox& gt) {
  if (gt.type == "DontCare") return Difficulty::kIgnored;
  const double h = gt.image_bbox_height;
  if (h >= 40 && gt.occlusion <= 0 && gt.truncation <= 0.15) return Difficulty::kEasy;
  if (h >= 25 && gt.occlusion <= 1 && gt.truncation <= 0.30) return Difficulty::kModerate;
  if (h >= 25 && gt.occlusion <= 2 && gt.truncation <= 0.50) return Difficulty::kHard;
  return Difficulty::kIgnored;
}

bool counts_at(const GroundTruthBox& gt, std::optional<Difficulty> level, const std::string& evaluated_type) {
  if (gt.type != evaluated_type) return false;
  if (!level) return true;
  const Difficulty d = assign_difficulty(gt);
  return d != Difficulty::kIgnored && static_cast<int>(d) <= static_cast<int>(*level);
}

MatchResult match_detections(std::span<const BevBox> detections, std::span<const GroundTruthBox> gts,
                             double iou_threshold, std::optional<Difficulty> level,
                             const std::string& evaluated_type) {
  MatchResult r;
  const std::size_t n = detections.size();
  r.scores.resize(n);
  r.tp.assign(n, 0);
  r.fp.assign(n, 0);
  r.gt_used.assign(gts.size(), 0);
  std::vector<std::uint8_t> counted(gts.size(), 0);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    counted[g] = counts_at(gts[g], level, evaluated_type);
    r.counted_gt += counted[g];
  }
  for (std::size_t d = 0; d < n; ++d) {
    r.scores[d] = detections[d].score;
    int best = -1;
    double best_iou = -1.0;
    bool hits_ignored = false;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = rotated_iou(detections[d], gts[g].box);
      if (iou < iou_threshold) continue;
      if (!counted[g]) {
        hits_ignored = true;
        continue;
      }
      if (r.gt_used[g]) continue;
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      r.tp[d] = 1;
      r.gt_used[best] = 1;
    } else if (!hits_ignored) {
      r.fp[d] = 1;
    }
  }
  return r;
}

std::vector<PrPoint> precision_recall(std::span<const MatchResult> frames) {
  struct Entry {
    double score;
    bool tp;
  };
  std::vector<Entry> entries;
  std::size_t total_gt = 0;
  for (const MatchResult& f : frames) {
    total_gt += f.counted_gt;
    for (std::size_t i = 0; i < f.scores.size(); ++i) {
      if (f.tp[i] || f.fp[i]) entries.push_back({f.scores[i], f.tp[i] != 0});
    }
  }
  require(total_gt > 0, ErrorCode::kNoGroundTruth, "no ground truth in the evaluated bucket");
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.score > b.score; });
  std::vector<PrPoint> curve;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    tp += entries[i].tp;
    ++seen;
    // Detections sharing a score are admitted together.
    if (i + 1 < entries.size() && entries[i + 1].score == entries[i].score) continue;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(total_gt),
                     static_cast<double>(tp) / static_cast<double>(seen)});
  }
  return curve;
}

double average_precision(std::span<const MatchResult> frames, ApMode mode) {
  const std::vector<PrPoint> curve = precision_recall(frames);
  // Suffix maximum gives the interpolated precision at each curve point.
  std::vector<double> interp(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    interp[i] = running;
  }
  const int points = mode == ApMode::kElevenPoint ? 11 : 40;
  double total = 0.0;
  for (int k = 0; k < points; ++k) {
    const double r = mode == ApMode::kElevenPoint ? k / 10.0 : (k + 1) / 40.0;
    // Recall is non-decreasing along the curve: first point reaching r.
    auto it = std::lower_bound(curve.begin(), curve.end(), r,
                               [](const PrPoint& p, double value) { return p.recall < value; });
    if (it != curve.end()) total += interp[static_cast<std::size_t>(it - curve.begin())];
  }
  return total / points;
}

ApTable evaluate(std::span<const EvalFrame> frames, ApMode mode, std::vector<double> iou_thresholds) {
  ApTable table;
  table.iou_thresholds = std::move(iou_thresholds);
  for (Difficulty level : table.rows) {
    std::vector<std::optional<double>> row;
    for (double thr : table.iou_thresholds) {
      std::vector<MatchResult> matches;
      std::size_t gt = 0;
      for (const EvalFrame& f : frames) {
        std::vector<BevBox> dets = f.detections;
        std::stable_sort(dets.begin(), dets.end(), nms_order);
        matches.push_back(match_detections(dets, f.ground_truth, thr, level));
        gt += matches.back().counted_gt;
      }
      row.push_back(gt ? std::optional<double>(average_precision(matches, mode)) : std::nullopt);
    }
    table.values.push_back(std::move(row));
  }
  return table;
}

double evaluate_all(std::span<const EvalFrame> frames, double iou_threshold, ApMode mode) {
  std::vector<MatchResult> matches;
  for (const EvalFrame& f : frames) {
    std::vector<BevBox> dets = f.detections;
    std::stable_sort(dets.begin(), dets.end(), nms_order);
    matches.push_back(match_detections(dets, f.ground_truth, iou_threshold, std::nullopt));
  }
  return average_precision(matches, mode);
}

namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *v);
  return buf;
}

std::string iou_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "AP@%.2g", t);
  return buf;
}

}  // namespace

std::string format_ap_table(const ApTable& table) {
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-10s", "difficulty");
  out += buf;
  for (double t : table.iou_thresholds) {
    std::snprintf(buf, sizeof(buf), " %10s", iou_label(t).c_str());
    out += buf;
  }
  out += '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%-10s", to_string(table.rows[r]).c_str());
    out += buf;
    for (std::size_t c = 0; c < table.iou_thresholds.size(); ++c) {
      std::snprintf(buf, sizeof(buf), " %10s", percent(table.values[r][c]).c_str());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string format_ap_csv(const ApTable& table) {
  std::string out = "difficulty";
  for (double t : table.iou_thresholds) out += "," + iou_label(t);
  out += '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += to_string(table.rows[r]);
    for (std::size_t c = 0; c < table.iou_thresholds.size(); ++c) out += "," + percent(table.values[r][c]);
    out += '\n';
  }
  return out;
}

}  // namespace plume
