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

#include "scenes.hpp"
#include "semls/acl.hpp"
#include "semls/core.hpp"

namespace semls {
namespace {

using testing::seg;

TEST(Core, CanonicalOrderPutsLexicographicallySmallerEndpointFirst) {
  const SemLS s = make_segment({10, 5}, {2, 7});
  EXPECT_EQ(s.p1, (Point{2, 7}));
  EXPECT_EQ(s.p2, (Point{10, 5}));
  const SemLS v = make_segment({3, 9}, {3, 1});
  EXPECT_EQ(v.p1, (Point{3, 1}));
}

TEST(Core, RejectsZeroLengthAndBadConfidence) {
  EXPECT_THROW(make_segment({1, 1}, {1, 1}), ValidationError);
  EXPECT_THROW(make_segment({0, 0}, {1, 1}, 0, 1.5), ValidationError);
}

TEST(Core, AngMidLenRoundTrip) {
  for (const SemLS s : {seg(0, 0, 10, 0), seg(0, 0, 0, 10), seg(5, 5, 25, 15), seg(10, 0, 0, 10)}) {
    const AngMidLen a = encode_angmidlen(s);
    EXPECT_GE(a.alpha_deg, 0.0);
    EXPECT_LT(a.alpha_deg, 180.0);
    const auto [p1, p2] = decode_angmidlen(a);
    const auto [q1, q2] = canonicalize(p1, p2);
    EXPECT_NEAR(q1.x, s.p1.x, 1e-9);
    EXPECT_NEAR(q1.y, s.p1.y, 1e-9);
    EXPECT_NEAR(q2.x, s.p2.x, 1e-9);
    EXPECT_NEAR(q2.y, s.p2.y, 1e-9);
  }
}

TEST(Core, GeneralEncodingDirections) {
  const GeneralEncoding down = encode_general(seg(0, 0, 10, 10));
  const GeneralEncoding up = encode_general(seg(0, 10, 10, 0));
  EXPECT_NE(down.d_g, up.d_g);
  const SemLS back = decode_general_segment(up);
  EXPECT_EQ(back.p1, (Point{0, 10}));
  EXPECT_EQ(back.p2, (Point{10, 0}));
  GeneralEncoding bad = down;
  bad.d_g = 3;
  EXPECT_THROW(validate(bad), ValidationError);
}

TEST(Core, RegistryLookups) {
  CategoryRegistry reg = CategoryRegistry::with_defaults();
  const int pole = reg.index_of("pole");
  EXPECT_EQ(reg.name_of(pole), "pole");
  EXPECT_FALSE(reg.find("unicorn").has_value());
  EXPECT_THROW(reg.index_of("unicorn"), ValidationError);
}

TEST(Acl, IdenticalSegmentsScoreOne) {
  const SemLS s = seg(3, 4, 50, 70);
  EXPECT_DOUBLE_EQ(acl(s, s), 1.0);
}

TEST(Acl, WorkedShortenedSegment) {
  const SemLS ref = seg(0, 0, 10, 0), other = seg(2, 0, 10, 0);
  EXPECT_NEAR(sim_angle(ref, other), 1.0, 1e-15);
  EXPECT_NEAR(sim_center(ref, other), 0.8, 1e-12);
  EXPECT_NEAR(sim_length(ref, other), 0.8, 1e-12);
  EXPECT_NEAR(acl(ref, other), 0.64, 1e-12);
}

TEST(Acl, CategoryMismatch) {
  const SemLS a = seg(0, 0, 10, 0, 0), b = seg(0, 0, 10, 0, 1);
  EXPECT_EQ(acl(a, b), 0.0);
  EXPECT_DOUBLE_EQ(acl(a, b, true), 1.0);
}

TEST(Acl, AngleWrapsAround) {
  EXPECT_NEAR(angle_difference_deg(179.0, 1.0), 2.0, 1e-12);
  EXPECT_NEAR(angle_difference_deg(90.0, 0.0), 90.0, 1e-12);
  EXPECT_EQ(sim_angle(seg(0, 0, 10, 0), seg(0, 0, 0, 10)), 0.0);
}

TEST(Acl, FarCenterGivesZero) {
  EXPECT_EQ(sim_center(seg(0, 0, 10, 0), seg(100, 0, 110, 0)), 0.0);
}

TEST(Acl, LengthIsAsymmetric) {
  const SemLS shorter = seg(0, 0, 5, 0), longer = seg(0, 0, 20, 0);
  EXPECT_NE(sim_length(shorter, longer), sim_length(longer, shorter));
}

TEST(Acl, BoxIou) {
  EXPECT_NEAR(box_iou(Box{0, 0, 10, 10}, Box{5, 0, 15, 10}), 50.0 / 150.0, 1e-12);
  EXPECT_EQ(box_iou(Box{0, 0, 1, 1}, Box{5, 5, 6, 6}), 0.0);
}

TEST(Acl, EqualIouPairsAreDistinguished) {
  const auto pairs = testing::equal_iou_pairs(0.6);
  ASSERT_EQ(pairs.size(), 7u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_NEAR(segment_box_iou(pairs[i].ref, pairs[i].other), 0.6, 1e-9) << pairs[i].pattern;
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_NE(acl(pairs[i].ref, pairs[i].other), acl(pairs[j].ref, pairs[j].other));
    }
  }
}

}  // namespace
}  // namespace semls
