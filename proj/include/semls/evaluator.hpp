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

// ACL-based detection evaluation.
//
// Follows the COCO protocol with ACL in place of box IoU:
//   * detections with confidence below 0.5 are discarded,
//   * per image and category, detections are greedily matched in descending
//     confidence order to the unmatched ground truth with the highest ACL,
//   * AP is the 101-point interpolated area under the PR curve,
//   * AP is averaged over the ACL thresholds 0.50:0.05:0.95 and then over
//     categories (equal weights).
// mAP3 restricts the category mean to pole, building and curb.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semls/acl.hpp"
#include "semls/core.hpp"

namespace semls {

/// Image id -> segments. Detections carry a confidence.
using DetectionSet = std::map<std::string, std::vector<SemLS>>;

inline constexpr double kMinDetectionConfidence = 0.5;
inline constexpr int kRecallSamples = 101;

/// 0.50, 0.55, ..., 0.95.
inline std::array<double, 10> acl_thresholds() {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) t[static_cast<std::size_t>(i)] = (50.0 + 5.0 * i) / 100.0;
  return t;
}

struct Match {
  std::size_t det_index = 0;
  std::optional<std::size_t> gt_index;  // empty for a false positive
  double acl = 0.0;
};

/// Greedy confidence-ordered matching of one image. Returns one entry per
/// detection in processing order (descending confidence, ties by input
/// order). Detections without a confidence are treated as confidence 1.
inline std::vector<Match> match_detections(std::span<const SemLS> gt, std::span<const SemLS> det,
                                           double acl_threshold) {
  std::vector<std::size_t> order(det.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return det[a].confidence.value_or(1.0) > det[b].confidence.value_or(1.0);
  });

  std::vector<bool> taken(gt.size(), false);
  std::vector<Match> out;
  out.reserve(det.size());
  for (std::size_t d : order) {
    Match m{d, std::nullopt, 0.0};
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g] || gt[g].category != det[d].category) continue;
      const double v = acl(gt[g], det[d]);
      if (v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best >= acl_threshold && best >= 0.0) {
      taken[best_g] = true;
      m.gt_index = best_g;
      m.acl = best;
    }
    out.push_back(m);
  }
  return out;
}

/// One scored detection of a category across all images.
struct ScoredHit {
  double confidence = 0.0;
  bool true_positive = false;
};

struct PrCurve {
  /// Interpolated precision at recall i / 100, i = 0..100.
  std::array<double, kRecallSamples> precision{};
};

/// 101-point interpolated AP. `hits` must already be sorted by descending
/// confidence. Returns nullopt when there is nothing to score (no ground
/// truth and no detections); 0 when n_gt == 0 but detections exist.
inline std::optional<double> average_precision(std::span<const ScoredHit> hits, std::size_t n_gt,
                                               PrCurve* curve = nullptr) {
  if (curve) curve->precision.fill(0.0);
  if (n_gt == 0) {
    if (hits.empty()) return std::nullopt;
    return 0.0;
  }
  const std::size_t n = hits.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (hits[i].true_positive) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Monotone precision envelope from the right.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0.0;
  std::size_t cursor = 0;
  for (int r = 0; r < kRecallSamples; ++r) {
    const double level = static_cast<double>(r) / 100.0;
    while (cursor < n && recall[cursor] < level) ++cursor;
    const double p = cursor < n ? precision[cursor] : 0.0;
    if (curve) curve->precision[static_cast<std::size_t>(r)] = p;
    sum += p;
  }
  return sum / kRecallSamples;
}

struct CategoryResult {
  int category = 0;
  std::string name;
  std::size_t n_gt = 0;
  std::size_t n_det = 0;
  /// AP at each of the ten ACL thresholds.
  std::array<double, 10> ap{};
  std::array<PrCurve, 10> curves{};
  /// Mean over the ten thresholds.
  double mean_ap = 0.0;
};

struct EvalReport {
  /// True when the ground truth holds no segment at all; the mAP fields are
  /// then left empty.
  bool empty = false;
  std::vector<CategoryResult> categories;  // only categories with gt or det
  std::optional<double> map;               // mAP@0.5
  std::optional<double> map3;              // mAP3@0.5
  std::size_t filtered_detections = 0;     // dropped by the confidence floor
};

inline const std::array<const char*, 3>& map3_category_names() {
  static const std::array<const char*, 3> names{"pole", "building", "curb"};
  return names;
}

/// Full evaluation. Images present only in `det` count as false positives.
inline EvalReport evaluate(const DetectionSet& gt, const DetectionSet& det,
                           const CategoryRegistry& registry) {
  EvalReport report;
  const auto thresholds = acl_thresholds();
  const std::size_t n_cat = registry.size();

  std::size_t total_gt = 0;
  for (const auto& [id, segs] : gt) {
    total_gt += segs.size();
    for (const auto& s : segs) {
      if (s.category < 0 || static_cast<std::size_t>(s.category) >= n_cat) {
        throw ValidationError("ground-truth category index outside the registry");
      }
    }
  }
  if (total_gt == 0) {
    report.empty = true;
    return report;
  }

  // Confidence floor, split per image and category.
  struct PerImage {
    std::vector<std::vector<SemLS>> gt, det;
  };
  std::map<std::string, PerImage> images;
  auto touch = [&](const std::string& id) -> PerImage& {
    auto& p = images[id];
    if (p.gt.empty()) {
      p.gt.resize(n_cat);
      p.det.resize(n_cat);
    }
    return p;
  };
  for (const auto& [id, segs] : gt) {
    auto& p = touch(id);
    for (const auto& s : segs) p.gt[static_cast<std::size_t>(s.category)].push_back(s);
  }
  for (const auto& [id, segs] : det) {
    auto& p = touch(id);
    for (const auto& s : segs) {
      if (s.category < 0 || static_cast<std::size_t>(s.category) >= n_cat) {
        throw ValidationError("detection category index outside the registry");
      }
      if (s.confidence.value_or(1.0) < kMinDetectionConfidence) {
        ++report.filtered_detections;
        continue;
      }
      p.det[static_cast<std::size_t>(s.category)].push_back(s);
    }
  }

  for (std::size_t c = 0; c < n_cat; ++c) {
    CategoryResult res;
    res.category = static_cast<int>(c);
    res.name = registry.name_of(static_cast<int>(c));
    for (const auto& [id, p] : images) {
      res.n_gt += p.gt[c].size();
      res.n_det += p.det[c].size();
    }
    if (res.n_gt == 0 && res.n_det == 0) continue;

    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      struct Keyed {
        ScoredHit hit;
        const std::string* image;
        std::size_t det_index;
      };
      std::vector<Keyed> all;
      for (const auto& [id, p] : images) {
        for (const Match& m : match_detections(p.gt[c], p.det[c], thresholds[t])) {
          all.push_back({{p.det[c][m.det_index].confidence.value_or(1.0), m.gt_index.has_value()},
                         &id,
                         m.det_index});
        }
      }
      // Global order: confidence desc, then image id, then detection index.
      std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
        if (a.hit.confidence != b.hit.confidence) return a.hit.confidence > b.hit.confidence;
        if (*a.image != *b.image) return *a.image < *b.image;
        return a.det_index < b.det_index;
      });
      std::vector<ScoredHit> hits;
      hits.reserve(all.size());
      for (const auto& k : all) hits.push_back(k.hit);
      res.ap[t] = average_precision(hits, res.n_gt, &res.curves[t]).value_or(0.0);
    }
    res.mean_ap = std::accumulate(res.ap.begin(), res.ap.end(), 0.0) / res.ap.size();
    report.categories.push_back(std::move(res));
  }

  auto mean_over = [&](auto&& include) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : report.categories) {
      if (!include(r)) continue;
      sum += r.mean_ap;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  report.map = mean_over([](const CategoryResult&) { return true; });
  report.map3 = mean_over([](const CategoryResult& r) {
    const auto& names = map3_category_names();
    return std::find(names.begin(), names.end(), r.name) != names.end();
  });
  return report;
}

}  // namespace semls
