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

#include <cmath>
#include <random>

#include "scenes.hpp"
#include "semls/detector_numerics.hpp"
#include "semls/selfcheck.hpp"

namespace semls {
namespace {

using testing::seg;

TEST(Targets, CenterCellAndOffset) {
  const std::vector<GeneralEncoding> ann{GeneralEncoding{10, 6, 8, 4, 0, 1}};
  const TargetMaps t = make_targets(ann, 2, 32, 32, 4);
  EXPECT_DOUBLE_EQ(t.heatmap(1, 1, 2), 1.0);
  EXPECT_DOUBLE_EQ(t.offset(0, 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(t.offset(1, 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(t.mask(0, 1, 2), 1.0);
  EXPECT_EQ(t.n, 1u);
}

TEST(Targets, GaussianKernel) {
  EXPECT_NEAR(gaussian_value(1.0, 0.0, 1.0), std::exp(-0.5), 1e-15);
  Tensor3 hm(1, 9, 9);
  draw_gaussian(hm, 0, 4, 4, 3, 1.0);
  EXPECT_DOUBLE_EQ(hm(0, 4, 4), 1.0);
  EXPECT_NEAR(hm(0, 4, 5), 0.6065, 1e-4);
  EXPECT_EQ(hm(0, 0, 0), 0.0);
}

TEST(Targets, RadiusIsNonNegativeAndGrows) {
  EXPECT_GE(gaussian_radius(1, 1), 0);
  EXPECT_LE(gaussian_radius(5, 5), gaussian_radius(50, 50));
}

TEST(Losses, FocalHandValue) {
  Tensor3 p(1, 1, 1, 0.5), g(1, 1, 1, 1.0);
  EXPECT_NEAR(focal_loss(p, g, 1), 0.25 * std::log(2.0), 1e-12);
}

TEST(Losses, FocalIsNonNegative) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Tensor3 p(2, 4, 4), g(2, 4, 4);
    for (double& v : p.data()) v = u(rng);
    for (double& v : g.data()) v = u(rng) < 0.1 ? 1.0 : u(rng) * 0.9;
    EXPECT_GE(focal_loss(p, g, 3), 0.0);
  }
}

TEST(Losses, MaskedL1) {
  Tensor3 pred(2, 1, 2), target(2, 1, 2), mask(1, 1, 2);
  mask(0, 0, 0) = 1.0;
  pred(0, 0, 0) = 0.25;
  pred(1, 0, 0) = -0.75;
  EXPECT_DOUBLE_EQ(masked_l1(pred, target, mask, 1), 1.0);
  pred(0, 0, 1) = 100.0;
  EXPECT_DOUBLE_EQ(masked_l1(pred, target, mask, 1), 1.0);
  EXPECT_EQ(masked_l1(target, target, mask, 1), 0.0);
}

TEST(Losses, MaskedL1GradientSigns) {
  Tensor3 pred(1, 1, 3), target(1, 1, 3), mask(1, 1, 3, 1.0);
  pred(0, 0, 0) = 0.5;
  pred(0, 0, 1) = -0.5;
  pred(0, 0, 2) = 0.2;
  const Tensor3 g = masked_l1_gradient(pred, target, mask, 2);
  EXPECT_DOUBLE_EQ(g(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g(0, 0, 1), -0.5);
  EXPECT_DOUBLE_EQ(g(0, 0, 2), 0.5);
}

TEST(Losses, DirectionCrossEntropy) {
  Tensor3 logits(2, 1, 2), target(1, 1, 2), mask(1, 1, 2);
  mask(0, 0, 0) = 1.0;
  EXPECT_NEAR(direction_ce(logits, target, mask, 1), std::log(2.0), 1e-12);
  logits(0, 0, 0) = 10.0;
  logits(1, 0, 0) = -10.0;
  EXPECT_LE(direction_ce(logits, target, mask, 1), 1e-8);
  logits(0, 0, 1) = -30.0;
  EXPECT_LE(direction_ce(logits, target, mask, 1), 1e-8);
}

TEST(Losses, TotalIsWeightedSum) {
  const auto scene = random_scene(4);
  const TargetMaps t = make_targets(scene, 4, 128, 96);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  HeadSet h = ideal_heads(t, Encoding::kLineAsObj, DirectionMode::kRegression);
  for (double& v : h.heatmap.data()) v = u(rng);
  for (double& v : h.offset.data()) v = u(rng);
  for (double& v : h.wh->data()) v = 10 * u(rng);
  LossWeights w;
  const LossBreakdown b = total_loss(h, t, w, Encoding::kLineAsObj, DirectionMode::kRegression);
  const double hm = focal_loss(h.heatmap, t.heatmap, t.n);
  const double off = masked_l1(h.offset, t.offset, t.mask, t.n);
  const double wh = masked_l1(*h.wh, t.wh, t.mask, t.n);
  const double d = masked_l1(*h.direction, t.direction, t.mask, t.n);
  EXPECT_NEAR(b.total, hm + w.off * off + w.wh * wh + w.d * d, 1e-12);

  LossWeights only_off{1.0, 0.0, 0.0, 0.0, 0.0};
  const LossBreakdown b2 = total_loss(h, t, only_off, Encoding::kLineAsObj, DirectionMode::kRegression);
  EXPECT_EQ(b2.total, b2.hm + b2.off);
}

TEST(Losses, IdealHeadsHaveZeroLoss) {
  const auto scene = random_scene(12);
  const TargetMaps t = make_targets(scene, 4, 128, 96);
  for (auto enc : {Encoding::kAngMidLen, Encoding::kLineAsObj}) {
    for (auto mode : {DirectionMode::kRegression, DirectionMode::kClassification}) {
      EXPECT_LE(total_loss(ideal_heads(t, enc, mode), t, {}, enc, mode).total, 1e-12);
    }
  }
}

TEST(Decode, BelowThresholdIsEmpty) {
  HeadSet h;
  h.heatmap = Tensor3(1, 8, 8, 0.3);
  h.offset = Tensor3(2, 8, 8);
  h.wh = Tensor3(2, 8, 8, 2.0);
  h.direction = Tensor3(1, 8, 8);
  DecodeOptions opt;
  opt.d_mode = DirectionMode::kRegression;
  EXPECT_TRUE(decode_detections(h, opt).empty());
}

TEST(Decode, NeighbouringPeaksKeepTheLarger) {
  HeadSet h;
  h.heatmap = Tensor3(1, 8, 8);
  h.heatmap(0, 4, 3) = 0.9;
  h.heatmap(0, 4, 4) = 0.8;
  h.offset = Tensor3(2, 8, 8);
  h.wh = Tensor3(2, 8, 8, 2.0);
  h.direction = Tensor3(1, 8, 8);
  DecodeOptions opt;
  opt.d_mode = DirectionMode::kRegression;
  const auto out = decode_detections(h, opt);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(*out[0].confidence, 0.9);
}

TEST(Decode, IdealHeadsRoundTrip) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto scene = random_scene(s);
    const TargetMaps t = make_targets(scene, 4, 128, 96);
    DecodeOptions opt;
    const auto got = decode_detections(ideal_heads(t, opt.encoding, opt.d_mode), opt);
    EXPECT_LE(detail::max_endpoint_error(scene, got), 0.5 * opt.stride);
  }
}

TEST(GradCheck, DetectsAWrongGradient) {
  DifferentiableLoss sq{[](std::span<const double> x) { return x[0] * x[0]; },
                        [](std::span<const double> x) { return std::vector<double>{x[0]}; }};
  const std::vector<double> p{1.0};
  EXPECT_GT(finite_diff_check(sq, p).max_relative_error, 0.1);
}

TEST(SelfCheck, AllChecksPass) {
  for (const auto& r : run_loss_selfcheck(7)) EXPECT_TRUE(r.passed()) << r.name << " " << r.value;
}

}  // namespace
}  // namespace semls
