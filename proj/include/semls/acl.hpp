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

// Angle-Center-Length (ACL) overlap between two line segments.
//
// ACL(ref, other) = Sim_angle * Sim_center * Sim_length, or 0 when the
// categories differ. The measure is asymmetric: center and length terms are
// normalized by the length of the FIRST argument, which is always the
// reference (ground truth, pre-transform segment, human label).
// Every factor is clamped at 0, so the product lies in [0, 1].

#pragma once

#include <algorithm>
#include <cmath>

#include "semls/core.hpp"

namespace semls {

/// max(0, 1 - |c_ref - c_other| / (0.5 * l_ref)).
inline double sim_center(const SemLS& ref, const SemLS& other) {
  const double l1 = ref.length();
  const double raw = 1.0 - distance(ref.midpoint(), other.midpoint()) / (0.5 * l1);
  return std::max(0.0, raw);
}

/// max(0, 1 - |l_ref - l_other| / l_ref).
inline double sim_length(const SemLS& ref, const SemLS& other) {
  const double l1 = ref.length();
  const double raw = 1.0 - std::abs(l1 - other.length()) / l1;
  return std::max(0.0, raw);
}

/// Circular difference of two undirected angles, degrees in [0, 90].
inline double angle_difference_deg(double a_deg, double b_deg) {
  const double d = std::abs(fold_angle_deg(a_deg) - fold_angle_deg(b_deg));
  return std::min(d, 180.0 - d);
}

/// 1 - delta_alpha / 90 with the circular difference above.
inline double sim_angle(const SemLS& ref, const SemLS& other) {
  return 1.0 - angle_difference_deg(ref.angle_deg(), other.angle_deg()) / 90.0;
}

/// ACL value in [0, 1].
inline double acl(const SemLS& ref, const SemLS& other, bool category_agnostic = false) {
  if (!category_agnostic && ref.category != other.category) return 0.0;
  return sim_angle(ref, other) * sim_center(ref, other) * sim_length(ref, other);
}

/// IoU of two axis-aligned boxes. Zero-area unions give 0.
inline double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// IoU of the minimum bounding boxes of two segments (the segment-as-diagonal
/// view that ACL replaces).
inline double segment_box_iou(const SemLS& a, const SemLS& b) {
  return box_iou(bounding_box(a), bounding_box(b));
}

}  // namespace semls
