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


#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "../support/oracles.hpp"
#include "plume/error.hpp"
#include "plume/evaluation.hpp"

namespace plume {
namespace {

GroundTruthBox car(double u, double v, double height = 50, int occ = 0, double trunc = 0) {
  GroundTruthBox g;
  g.box.u = u;
  g.box.v = v;
  g.box.w = 1.6;
  g.box.h = 3.9;
  g.image_bbox_height = height;
  g.occlusion = occ;
  g.truncation = trunc;
  g.difficulty = assign_difficulty(g);
  return g;
}

BevBox detection_at(const GroundTruthBox& g, double score, double shift = 0) {
  BevBox b = g.box;
  b.u += shift;
  b.score = score;
  return b;
}

TEST(Difficulty, Buckets) {
  EXPECT_EQ(assign_difficulty(car(0, 0, 50, 0, 0)), Difficulty::kEasy);
  EXPECT_EQ(assign_difficulty(car(0, 0, 30, 1, 0.2)), Difficulty::kModerate);
  EXPECT_EQ(assign_difficulty(car(0, 0, 30, 2, 0.4)), Difficulty::kHard);
  EXPECT_EQ(assign_difficulty(car(0, 0, 10)), Difficulty::kIgnored);
  GroundTruthBox dc = car(0, 0);
  dc.type = "DontCare";
  EXPECT_EQ(assign_difficulty(dc), Difficulty::kIgnored);
  EXPECT_TRUE(counts_at(car(0, 0), Difficulty::kHard));
  EXPECT_FALSE(counts_at(car(0, 0, 30, 1), Difficulty::kEasy));
}

TEST(Matching, PerfectAndDuplicate) {
  const std::vector<GroundTruthBox> gts{car(0, 10), car(5, 20)};
  const std::vector<BevBox> perfect{detection_at(gts[0], 0.9), detection_at(gts[1], 0.8)};
  const MatchResult m = match_detections(perfect, gts, 0.7, Difficulty::kHard);
  EXPECT_EQ(m.tp, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(m.fp, (std::vector<std::uint8_t>{0, 0}));
  const std::vector<BevBox> dup{detection_at(gts[0], 0.9), detection_at(gts[0], 0.8, 0.1)};
  const MatchResult d = match_detections(dup, gts, 0.5, Difficulty::kHard);
  EXPECT_EQ(d.tp, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(d.fp, (std::vector<std::uint8_t>{0, 1}));
}

TEST(Matching, IgnoredGroundTruthAbsorbsDetection) {
  const std::vector<GroundTruthBox> gts{car(0, 10, 10)};
  const std::vector<BevBox> dets{detection_at(gts[0], 0.9)};
  const MatchResult m = match_detections(dets, gts, 0.5, Difficulty::kHard);
  EXPECT_EQ(m.tp[0] + m.fp[0], 0);
  EXPECT_EQ(m.counted_gt, 0u);
}

struct Scene {
  std::vector<GroundTruthBox> gts;
  std::vector<BevBox> dets;  // sorted by score
};

Scene random_scene(std::mt19937_64& rng) {
  Scene s;
  const int n_gt = static_cast<int>(rng() % 4) + 1;
  for (int g = 0; g < n_gt; ++g) {
    s.gts.push_back(car(oracle::uniform(rng, -10, 10), oracle::uniform(rng, 5, 40),
                        oracle::uniform(rng, 10, 60), static_cast<int>(rng() % 3)));
  }
  const int n_det = static_cast<int>(rng() % 6);
  for (int d = 0; d < n_det; ++d) {
    BevBox b;
    if (rng() % 3) {
      b = s.gts[rng() % s.gts.size()].box;
      b.u += oracle::uniform(rng, -0.8, 0.8);
      b.v += oracle::uniform(rng, -1.5, 1.5);
      b.theta += oracle::uniform(rng, -0.3, 0.3);
    } else {
      b = oracle::random_box(rng, 10);
      b.v += 20;
    }
    b.score = std::round(oracle::uniform(rng, 0, 1) * 10) / 10;
    s.dets.push_back(b);
  }
  std::stable_sort(s.dets.begin(), s.dets.end(), nms_order);
  return s;
}

TEST(Matching, GreedyRuleMatchesDirectImplementation) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Scene s = random_scene(rng);
    for (auto level : {Difficulty::kEasy, Difficulty::kModerate, Difficulty::kHard}) {
      const MatchResult m = match_detections(s.dets, s.gts, 0.5, level);
      std::vector<BevBox> gt_boxes;
      std::vector<std::uint8_t> counted;
      for (const auto& g : s.gts) {
        gt_boxes.push_back(g.box);
        counted.push_back(counts_at(g, level));
      }
      const auto ref = oracle::greedy_match(s.dets, gt_boxes, counted, 0.5, rotated_iou);
      for (std::size_t d = 0; d < ref.size(); ++d) {
        EXPECT_EQ(m.tp[d] != 0, ref[d].tp);
        EXPECT_EQ(m.fp[d] != 0, ref[d].fp);
      }
    }
  }
}

TEST(Ap, PerfectDetectorAndEmpty) {
  const std::vector<GroundTruthBox> gts{car(0, 10), car(5, 20), car(-4, 30)};
  std::vector<BevBox> dets;
  for (std::size_t i = 0; i < gts.size(); ++i) dets.push_back(detection_at(gts[i], 0.9 - 0.1 * i));
  const std::vector<MatchResult> frames{match_detections(dets, gts, 0.7, Difficulty::kHard)};
  EXPECT_EQ(average_precision(frames, ApMode::kElevenPoint), 1.0);
  EXPECT_EQ(average_precision(frames, ApMode::kFortyPoint), 1.0);
  const std::vector<MatchResult> none{match_detections({}, gts, 0.7, Difficulty::kHard)};
  EXPECT_EQ(average_precision(none), 0.0);
  const std::vector<MatchResult> no_gt{match_detections(dets, {}, 0.7, Difficulty::kHard)};
  try {
    average_precision(no_gt);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoGroundTruth);
  }
}

MatchResult synthetic_match(std::vector<double> scores, std::vector<std::uint8_t> tp, std::size_t gt) {
  MatchResult m;
  m.scores = std::move(scores);
  m.tp = tp;
  for (auto t : tp) m.fp.push_back(!t);
  m.counted_gt = gt;
  return m;
}

TEST(Ap, HandEnumeratedCase) {
  // 3 ground truths, 4 detections: TP 0.9, FP 0.8, TP 0.7, TP 0.6.
  // PR points: (1/3, 1), (1/3, 1/2), (2/3, 2/3), (1, 3/4).
  // 11-point: r=0..0.3 -> 1 (4 points), r=0.4..0.6 -> 3/4 (3), r=0.7..1 -> 3/4 (4).
  const std::vector<MatchResult> frames{synthetic_match({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 1}, 3)};
  EXPECT_NEAR(average_precision(frames), (4 * 1.0 + 7 * 0.75) / 11, 1e-15);
  const auto pr = precision_recall(frames);
  ASSERT_EQ(pr.size(), 4u);
  EXPECT_DOUBLE_EQ(pr[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(pr[2].recall, 2.0 / 3);
  // 40-point: recall points 1/40..13/40 (13) -> 1, the remaining 27 -> 3/4.
  EXPECT_NEAR(average_precision(frames, ApMode::kFortyPoint), (13 * 1.0 + 27 * 0.75) / 40, 1e-15);
}

TEST(Ap, BruteForceEnumeration) {
  std::mt19937_64 rng(2);
  std::size_t evaluated = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MatchResult> frames;
    std::vector<oracle::ScoredMatch> pooled;
    std::size_t gt = 0;
    for (int f = 0; f < 3; ++f) {
      const Scene s = random_scene(rng);
      frames.push_back(match_detections(s.dets, s.gts, 0.5, Difficulty::kHard));
      gt += frames.back().counted_gt;
      for (std::size_t d = 0; d < s.dets.size(); ++d) {
        pooled.push_back({s.dets[d].score, frames.back().tp[d] != 0, frames.back().fp[d] != 0});
      }
    }
    if (gt == 0) continue;
    ++evaluated;
    EXPECT_EQ(average_precision(frames, ApMode::kElevenPoint), oracle::brute_force_ap(pooled, gt, 11));
    EXPECT_EQ(average_precision(frames, ApMode::kFortyPoint), oracle::brute_force_ap(pooled, gt, 40));
  }
  EXPECT_GT(evaluated, 40u);
}

TEST(Ap, LowScoreFalsePositiveNeverHelps) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> scores;
    std::vector<std::uint8_t> tp;
    const int n = static_cast<int>(rng() % 8) + 1;
    for (int i = 0; i < n; ++i) {
      scores.push_back(oracle::uniform(rng, 0.1, 1));
      tp.push_back(rng() % 2);
    }
    const std::size_t gt = static_cast<std::size_t>(std::count(tp.begin(), tp.end(), 1)) + rng() % 3 + 1;
    std::vector<MatchResult> base{synthetic_match(scores, tp, gt)};
    const double before = average_precision(base);
    double floor_score = 1;
    for (std::size_t i = 0; i < tp.size(); ++i) {
      if (tp[i]) floor_score = std::min(floor_score, scores[i]);
    }
    scores.push_back(floor_score * oracle::uniform(rng, 0, 0.999));
    tp.push_back(0);
    std::vector<MatchResult> after{synthetic_match(scores, tp, gt)};
    EXPECT_LE(average_precision(after), before);
  }
}

TEST(Ap, InvariantToFrameOrderAndScoreRescaling) {
  std::mt19937_64 rng(4);
  std::vector<MatchResult> frames;
  for (int f = 0; f < 6; ++f) {
    const Scene s = random_scene(rng);
    frames.push_back(match_detections(s.dets, s.gts, 0.5, Difficulty::kHard));
  }
  const double base = average_precision(frames);
  std::reverse(frames.begin(), frames.end());
  EXPECT_EQ(average_precision(frames), base);
  for (auto& f : frames) {
    for (double& s : f.scores) s = std::pow(s, 3) * 0.5;
  }
  EXPECT_EQ(average_precision(frames), base);
}

TEST(Ap, ConstantCurveAgreesAcrossModes) {
  // Every detection is a TP and all ground truths are found: precision 1 everywhere.
  const std::vector<MatchResult> frames{synthetic_match({0.9, 0.5, 0.2}, {1, 1, 1}, 3)};
  EXPECT_EQ(average_precision(frames, ApMode::kElevenPoint), average_precision(frames, ApMode::kFortyPoint));
  // Constant precision 1/2 up to full recall.
  const std::vector<MatchResult> half{synthetic_match({0.9, 0.9, 0.5, 0.5}, {1, 0, 1, 0}, 2)};
  EXPECT_EQ(average_precision(half, ApMode::kElevenPoint), 0.5);
  EXPECT_EQ(average_precision(half, ApMode::kFortyPoint), 0.5);
}

TEST(ApTableFormat, TextAndCsv) {
  std::vector<EvalFrame> frames(1);
  frames[0].ground_truth = {car(0, 10), car(5, 20, 30, 1)};
  frames[0].detections = {detection_at(frames[0].ground_truth[0], 0.9)};
  const ApTable t = evaluate(frames);
  ASSERT_TRUE(t.values[0][0].has_value());
  EXPECT_EQ(*t.values[0][0], 1.0);
  // Moderate counts both cars; recall tops out at 1/2.
  EXPECT_EQ(*t.values[1][0], 6.0 / 11);
  const std::string text = format_ap_table(t);
  EXPECT_NE(text.find("100.00"), std::string::npos);
  EXPECT_NE(text.find("moderate"), std::string::npos);
  const std::string csv = format_ap_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "difficulty,AP@0.5,AP@0.7");
  EXPECT_NE(csv.find("easy,100.00,100.00"), std::string::npos);
  EXPECT_EQ(evaluate_all(frames, 0.5), 6.0 / 11);
}

}  // namespace
}  // namespace plume
