/* Copyright 2026 The semls Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scenes.hpp"
#include "semls/evaluator.hpp"
#include "semls/repeatability.hpp"

namespace semls {
namespace {

using testing::seg;

const CategoryRegistry& three() {
  static const CategoryRegistry reg({"building", "pole", "curb"});
  return reg;
}

TEST(Evaluator, ThresholdGrid) {
  const auto t = acl_thresholds();
  EXPECT_DOUBLE_EQ(t.front(), 0.5);
  EXPECT_DOUBLE_EQ(t.back(), 0.95);
}

TEST(Evaluator, MatchesIdenticalAndRejectsWrongCategory) {
  const std::vector<SemLS> gt{seg(0, 0, 50, 0, 1)};
  const std::vector<SemLS> same{seg(0, 0, 50, 0, 1, 0.9)};
  const std::vector<SemLS> other{seg(0, 0, 50, 0, 2, 0.9)};
  const auto m = match_detections(gt, same, 1.0);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].gt_index, std::optional<std::size_t>(0));
  const auto miss = match_detections(gt, other, 0.5);
  ASSERT_EQ(miss.size(), 1u);
  EXPECT_FALSE(miss[0].gt_index.has_value());
}

TEST(Evaluator, AveragePrecisionEdgeCases) {
  const std::vector<ScoredHit> all_tp{{0.9, true}, {0.8, true}};
  EXPECT_DOUBLE_EQ(*average_precision(all_tp, 2), 1.0);
  const std::vector<ScoredHit> none{{0.9, false}};
  EXPECT_DOUBLE_EQ(*average_precision(none, 3), 0.0);
}

TEST(Evaluator, TpFpTpAgainstHandCurve) {
  // Precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1. Interpolated precision is
  // 1 for r <= 0.5 (51 samples) and 2/3 above (50 samples).
  const std::vector<ScoredHit> hits{{0.9, true}, {0.8, false}, {0.7, true}};
  const double expected = (51.0 * 1.0 + 50.0 * (2.0 / 3.0)) / 101.0;
  EXPECT_NEAR(*average_precision(hits, 2), expected, 1e-12);
  EXPECT_NEAR(testing::brute_force_ap({true, false, true}, 2), expected, 1e-12);
}

TEST(Evaluator, PerfectDetectionsScoreOne) {
  DetectionSet gt, det;
  gt["a"] = {seg(0, 0, 50, 10, 0), seg(100, 100, 120, 180, 1), seg(5, 200, 300, 210, 2)};
  for (SemLS s : gt["a"]) {
    s.confidence = 0.9;
    det["a"].push_back(s);
  }
  const EvalReport r = evaluate(gt, det, three());
  ASSERT_TRUE(r.map.has_value());
  EXPECT_DOUBLE_EQ(*r.map, 1.0);
  EXPECT_DOUBLE_EQ(*r.map3, 1.0);
}

TEST(Evaluator, LowConfidenceIsFiltered) {
  DetectionSet gt, det;
  gt["a"] = {seg(0, 0, 50, 10, 0)};
  det["a"] = {seg(0, 0, 50, 10, 0, 0.4)};
  const EvalReport r = evaluate(gt, det, three());
  EXPECT_DOUBLE_EQ(*r.map, 0.0);
  EXPECT_EQ(r.filtered_detections, 1u);
}

TEST(Evaluator, EmptyGroundTruth) {
  DetectionSet gt, det;
  det["a"] = {seg(0, 0, 50, 10, 0, 0.9)};
  const EvalReport r = evaluate(gt, det, three());
  EXPECT_TRUE(r.empty);
  EXPECT_FALSE(r.map.has_value());
}

TEST(Evaluator, AgreesWithBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto d = testing::random_micro_dataset(seed);
    const EvalReport r = evaluate(d.gt, d.det, three());
    std::size_t n_gt = 0;
    for (const auto& [id, v] : d.gt) n_gt += v.size();
    ASSERT_EQ(r.empty, n_gt == 0) << seed;
    if (r.empty) continue;
    const auto oracle = testing::brute_force_map(d.gt, d.det, 3);
    ASSERT_EQ(r.map.has_value(), oracle.has_value()) << seed;
    if (r.map) { EXPECT_NEAR(*r.map, *oracle, 1e-9) << seed; }
  }
}

TEST(Repeatability, SampleAffineIdentityAndDeterminism) {
  AffineSamplingConfig collapsed;
  collapsed.rotation_deg = {0.0, 0.0};
  collapsed.scale = {1.0, 1.0};
  collapsed.shear_deg = {0.0, 0.0};
  collapsed.translation_frac = {0.0, 0.0};
  const AffineTransform id = sample_affine(3, collapsed);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(id.m[i], AffineTransform::identity().m[i], 1e-12);
  EXPECT_EQ(sample_affine(9, {}).m, sample_affine(9, {}).m);
  for (std::uint64_t s = 0; s < 10000; ++s) {
    ASSERT_NE(sample_affine(s, {}).determinant(), 0.0);
  }
}

TEST(Repeatability, RotationByFortyFiveDegrees) {
  const double c = std::sqrt(0.5);
  AffineTransform rot;
  rot.m = {c, -c, 0.0, c, c, 0.0};
  const std::vector<SemLS> in{seg(0, 0, 10, 0)};
  const auto out = transform_segments(in, rot, std::nullopt, 0.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].segment.p1.x, 0.0, 1e-12);
  EXPECT_NEAR(out[0].segment.p2.x, 7.0711, 1e-4);
  EXPECT_NEAR(out[0].segment.p2.y, 7.0711, 1e-4);
}

TEST(Repeatability, OutsideBoundsIsDropped) {
  AffineTransform shift;
  shift.m = {1, 0, 1000, 0, 1, 0};
  const std::vector<SemLS> in{seg(0, 0, 10, 0)};
  EXPECT_TRUE(transform_segments(in, shift, ImageBounds{640, 480}).empty());
}

TEST(Repeatability, HandCountedCases) {
  const std::vector<SemLS> a{seg(10, 10, 110, 10), seg(10, 200, 10, 300)};
  const std::vector<SemLS> b{seg(10, 10, 110, 10), seg(400, 50, 420, 400)};
  const std::vector<SemLS> far{seg(500, 400, 600, 420)};
  const auto id = AffineTransform::identity();
  EXPECT_DOUBLE_EQ(repeatability(a, a, id, 0.9), 1.0);
  EXPECT_DOUBLE_EQ(repeatability(a, b, id, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(repeatability(a, far, id, 0.5), 0.0);
}

TEST(Repeatability, MareIsOneForIdentityPairs) {
  std::mt19937_64 rng(2);
  std::vector<RepeatPair> pairs;
  for (int i = 0; i < 3; ++i) {
    RepeatPair p;
    for (int k = 0; k < 5; ++k) p.dets_i.push_back(testing::random_segment(rng, 640, 480, k % 2, 10));
    p.dets_it = p.dets_i;
    pairs.push_back(p);
  }
  const auto rep = mare(pairs);
  EXPECT_DOUBLE_EQ(rep.mare, 1.0);
  for (std::size_t k = 1; k < rep.re.size(); ++k) EXPECT_LE(rep.re[k], rep.re[k - 1]);
}

}  // namespace
}  // namespace semls
