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

// Gradient-based label correction.
//
// A small LSD-style candidate generator (2x2 gradients, level-line region
// growing, weighted total-least-squares fit) produces category-free
// segments. A human label is snapped to the candidate with the highest
// category-agnostic ACL when that value exceeds 0.95.
//
// Pixel (i, j) covers [i, i+1) x [j, j+1). The gradient of the 2x2 cell whose
// top-left pixel is (i, j) is located at the shared corner (i+1, j+1), so a
// step between columns 49 and 50 is reported at x = 50.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "semls/acl.hpp"
#include "semls/core.hpp"

namespace semls {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Per-cell gradient magnitude and level-line angle over (W-1) x (H-1) cells.
struct GradientField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> magnitude;
  std::vector<double> angle_deg;  // level-line angle, [0, 180)

  std::size_t index(std::size_t x, std::size_t y) const { return y * width + x; }
  /// Image-plane location of cell (x, y).
  static Point location(std::size_t x, std::size_t y) {
    return {static_cast<double>(x) + 1.0, static_cast<double>(y) + 1.0};
  }
};

inline GradientField compute_gradient(const GrayImage& img) {
  GradientField g;
  if (img.width < 2 || img.height < 2) return g;
  g.width = img.width - 1;
  g.height = img.height - 1;
  g.magnitude.resize(g.width * g.height);
  g.angle_deg.resize(g.width * g.height);
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      const double a = img.at(x, y), b = img.at(x + 1, y);
      const double c = img.at(x, y + 1), d = img.at(x + 1, y + 1);
      const double gx = 0.5 * ((b + d) - (a + c));
      const double gy = 0.5 * ((c + d) - (a + b));
      const std::size_t i = g.index(x, y);
      g.magnitude[i] = std::hypot(gx, gy);
      // Level lines run perpendicular to the gradient.
      g.angle_deg[i] = fold_angle_deg(std::atan2(gy, gx) * kRadToDeg + 90.0);
    }
  }
  return g;
}

struct CandidateParams {
  double min_magnitude = 2.0;        // gradient of a 2 gray-level step
  double angle_tolerance_deg = 22.5;
  double min_length = 15.0;
  double max_fit_rms = 1.5;
};

struct Candidate {
  SemLS segment;
  std::size_t support = 0;  // cells in the grown region
  double fit_rms = 0.0;
};

using CandidateSet = std::vector<Candidate>;

namespace detail {

struct RegionFit {
  Point a, b;
  double rms = 0.0;
};

inline RegionFit fit_region(const GradientField& g, std::span<const std::size_t> cells) {
  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i : cells) {
    const Point p = GradientField::location(i % g.width, i / g.width);
    const double w = g.magnitude[i];
    sw += w;
    mx += w * p.x;
    my += w * p.y;
  }
  mx /= sw;
  my /= sw;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i : cells) {
    const Point p = GradientField::location(i % g.width, i / g.width);
    const double w = g.magnitude[i];
    sxx += w * (p.x - mx) * (p.x - mx);
    syy += w * (p.y - my) * (p.y - my);
    sxy += w * (p.x - mx) * (p.y - my);
  }
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const Point dir{std::cos(phi), std::sin(phi)};
  const Point nrm{-dir.y, dir.x};
  double tmin = 0.0, tmax = 0.0, r2 = 0.0;
  bool first = true;
  for (std::size_t i : cells) {
    const Point p = GradientField::location(i % g.width, i / g.width);
    const Point q{p.x - mx, p.y - my};
    const double t = q.x * dir.x + q.y * dir.y;
    const double d = q.x * nrm.x + q.y * nrm.y;
    r2 += g.magnitude[i] * d * d;
    if (first || t < tmin) tmin = t;
    if (first || t > tmax) tmax = t;
    first = false;
  }
  RegionFit f;
  f.a = {mx + tmin * dir.x, my + tmin * dir.y};
  f.b = {mx + tmax * dir.x, my + tmax * dir.y};
  f.rms = std::sqrt(r2 / sw);
  return f;
}

}  // namespace detail

/// Level-line region growing over 8-neighbours, seeded from the strongest
/// unvisited cell. Candidates are sorted by descending support.
inline CandidateSet gradient_candidates(const GrayImage& img, const CandidateParams& p = {}) {
  CandidateSet out;
  const GradientField g = compute_gradient(img);
  if (g.magnitude.empty()) return out;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < g.magnitude.size(); ++i) {
    if (g.magnitude[i] >= p.min_magnitude) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.magnitude[a] > g.magnitude[b];
  });

  std::vector<bool> used(g.magnitude.size(), false);
  std::vector<std::size_t> region;
  for (std::size_t seed : order) {
    if (used[seed]) continue;
    region.clear();
    region.push_back(seed);
    used[seed] = true;
    // Doubled-angle running mean keeps the undirected region angle.
    double s2 = std::sin(2.0 * g.angle_deg[seed] * kDegToRad);
    double c2 = std::cos(2.0 * g.angle_deg[seed] * kDegToRad);
    double region_angle = g.angle_deg[seed];
    for (std::size_t head = 0; head < region.size(); ++head) {
      const long cx = static_cast<long>(region[head] % g.width);
      const long cy = static_cast<long>(region[head] / g.width);
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long nx = cx + dx, ny = cy + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<long>(g.width) ||
              ny >= static_cast<long>(g.height)) {
            continue;
          }
          const std::size_t j = g.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
          if (used[j] || g.magnitude[j] < p.min_magnitude) continue;
          if (angle_difference_deg(g.angle_deg[j], region_angle) > p.angle_tolerance_deg) continue;
          used[j] = true;
          region.push_back(j);
          s2 += std::sin(2.0 * g.angle_deg[j] * kDegToRad);
          c2 += std::cos(2.0 * g.angle_deg[j] * kDegToRad);
          region_angle = fold_angle_deg(0.5 * std::atan2(s2, c2) * kRadToDeg);
        }
      }
    }
    if (region.size() < 2) continue;
    const auto fit = detail::fit_region(g, region);
    if (distance(fit.a, fit.b) < p.min_length || fit.rms > p.max_fit_rms) continue;
    out.push_back({make_segment(fit.a, fit.b), region.size(), fit.rms});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.support > b.support; });
  return out;
}

inline constexpr double kRefineThreshold = 0.95;

struct RefineResult {
  std::vector<SemLS> labels;
  std::vector<std::optional<std::size_t>> chosen;  // candidate index per label
  std::size_t replaced = 0;
  std::size_t kept = 0;
};

/// Replaces each label's geometry by the max-ACL candidate when that ACL
/// exceeds `threshold`. Category, confidence and track id are preserved.
inline RefineResult refine_labels(std::span<const SemLS> labels, std::span<const SemLS> candidates,
                                  double threshold = kRefineThreshold) {
  RefineResult r;
  r.labels.reserve(labels.size());
  for (const SemLS& label : labels) {
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double v = acl(label, candidates[i], /*category_agnostic=*/true);
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    SemLS out = label;
    if (best > threshold) {
      out.p1 = candidates[best_i].p1;
      out.p2 = candidates[best_i].p2;
      out = canonical(out);
      r.chosen.emplace_back(best_i);
      ++r.replaced;
    } else {
      r.chosen.emplace_back(std::nullopt);
      ++r.kept;
    }
    r.labels.push_back(out);
  }
  return r;
}

inline RefineResult refine_labels(std::span<const SemLS> labels, const CandidateSet& candidates,
                                  double threshold = kRefineThreshold) {
  std::vector<SemLS> segs;
  segs.reserve(candidates.size());
  for (const auto& c : candidates) segs.push_back(c.segment);
  return refine_labels(labels, segs, threshold);
}

}  // namespace semls
