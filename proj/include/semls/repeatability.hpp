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

// Detector repeatability under a known affine warp.
//
//   Re = (N_{I->It} + N_{It->I}) / (N_I + N_It)
//
// A segment of I "repeats" when its warped copy has ACL > th with a distinct
// detection of It. The warped copy is the ACL reference.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "semls/acl.hpp"
#include "semls/core.hpp"

namespace semls {

/// Row-major 2x3 matrix [a b c; d e f] mapping (x, y) -> (ax+by+c, dx+ey+f).
struct AffineTransform {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineTransform identity() { return {}; }

  double determinant() const { return m[0] * m[4] - m[1] * m[3]; }

  Point apply(Point p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }

  AffineTransform inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) {
      throw ValidationError("affine transform is not invertible");
    }
    const double a = m[4] / det, b = -m[1] / det, d = -m[3] / det, e = m[0] / det;
    return AffineTransform{{a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])}};
  }

  /// (this * other)(p) = this(other(p)).
  AffineTransform compose(const AffineTransform& o) const {
    return AffineTransform{{m[0] * o.m[0] + m[1] * o.m[3], m[0] * o.m[1] + m[1] * o.m[4],
                            m[0] * o.m[2] + m[1] * o.m[5] + m[2], m[3] * o.m[0] + m[4] * o.m[3],
                            m[3] * o.m[1] + m[4] * o.m[4], m[3] * o.m[2] + m[4] * o.m[5] + m[5]}};
  }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling ranges for random affine warps. Translation is a fraction of the
/// image size; rotation, scale and shear act about the image center.
struct AffineSamplingConfig {
  Range rotation_deg{-15.0, 15.0};
  Range scale{0.9, 1.1};
  Range shear_deg{-5.0, 5.0};
  Range translation_frac{-0.1, 0.1};
  double width = 640.0;
  double height = 480.0;
};

inline AffineTransform sample_affine(std::uint64_t seed, const AffineSamplingConfig& cfg) {
  for (const Range& r : {cfg.rotation_deg, cfg.scale, cfg.shear_deg, cfg.translation_frac}) {
    if (!(r.lo <= r.hi)) throw ValidationError("inverted sampling range");
  }
  if (!(cfg.scale.lo > 0.0)) throw ValidationError("scale range must be positive");
  if (std::abs(cfg.shear_deg.lo) >= 90.0 || std::abs(cfg.shear_deg.hi) >= 90.0) {
    throw ValidationError("shear must stay within (-90, 90) degrees");
  }
  std::mt19937_64 rng(seed);
  auto draw = [&rng](const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };
  const double theta = draw(cfg.rotation_deg) * kDegToRad;
  const double s = draw(cfg.scale);
  const double shear = std::tan(draw(cfg.shear_deg) * kDegToRad);
  const double tx = draw(cfg.translation_frac) * cfg.width;
  const double ty = draw(cfg.translation_frac) * cfg.height;

  const double cx = 0.5 * cfg.width, cy = 0.5 * cfg.height;
  const double c = std::cos(theta), sn = std::sin(theta);
  // Linear part: scale * rotation * shear_x.
  const double a = s * c, b = s * (c * shear - sn), d = s * sn, e = s * (sn * shear + c);
  AffineTransform t{{a, b, 0.0, d, e, 0.0}};
  t.m[2] = cx - (a * cx + b * cy) + tx;
  t.m[5] = cy - (d * cx + e * cy) + ty;
  return t;
}

struct ImageBounds {
  double width = 0.0;
  double height = 0.0;
};

/// A warped segment together with its index in the source list.
struct WarpedSegment {
  SemLS segment;
  std::size_t source_index = 0;
};

/// Liang-Barsky clip of segment a-b against [0,W]x[0,H]. Returns nullopt when
/// nothing remains.
inline std::optional<std::pair<Point, Point>> clip_to_bounds(Point a, Point b,
                                                             const ImageBounds& bounds) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const std::array<double, 4> p{-dx, dx, -dy, dy};
  const std::array<double, 4> q{a.x, bounds.width - a.x, a.y, bounds.height - a.y};
  for (std::size_t i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return std::nullopt;
  }
  const Point ca = t0 == 0.0 ? a : Point{a.x + t0 * dx, a.y + t0 * dy};
  const Point cb = t1 == 1.0 ? b : Point{a.x + t1 * dx, a.y + t1 * dy};
  return std::pair{ca, cb};
}

inline constexpr double kDefaultMinWarpedLength = 10.0;

/// Warps each segment, clips to `bounds` and drops remnants shorter than
/// `min_len`. Category, confidence and track id carry over.
inline std::vector<WarpedSegment> transform_segments(std::span<const SemLS> segs,
                                                     const AffineTransform& t,
                                                     std::optional<ImageBounds> bounds,
                                                     double min_len = kDefaultMinWarpedLength) {
  if (t.determinant() == 0.0) throw ValidationError("affine transform is not invertible");
  std::vector<WarpedSegment> out;
  out.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    Point a = t.apply(segs[i].p1);
    Point b = t.apply(segs[i].p2);
    if (bounds) {
      auto clipped = clip_to_bounds(a, b, *bounds);
      if (!clipped) continue;
      std::tie(a, b) = *clipped;
    }
    if (distance(a, b) < min_len || a == b) continue;
    SemLS s = segs[i];
    std::tie(s.p1, s.p2) = canonicalize(a, b);
    out.push_back({s, i});
  }
  return out;
}

struct RepeatabilityOptions {
  bool category_agnostic = false;
  /// When set, warped segments are clipped to the target image and short
  /// remnants discarded before matching (they still count in N_I).
  std::optional<ImageBounds> bounds_source;
  std::optional<ImageBounds> bounds_target;
  double min_len = kDefaultMinWarpedLength;
};

/// Number of `refs` re-found among `targets` with ACL > th, one-to-one,
/// greedy by descending ACL (ties: lower ref index, then lower target index).
inline std::size_t count_repeated(std::span<const SemLS> refs, std::span<const SemLS> targets,
                                  double th, bool category_agnostic) {
  struct Pair {
    double value;
    std::size_t r, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double v = acl(refs[r], targets[t], category_agnostic);
      if (v > th) pairs.push_back({v, r, t});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.r != b.r) return a.r < b.r;
    return a.t < b.t;
  });
  std::vector<bool> used_r(refs.size(), false), used_t(targets.size(), false);
  std::size_t n = 0;
  for (const Pair& p : pairs) {
    if (used_r[p.r] || used_t[p.t]) continue;
    used_r[p.r] = used_t[p.t] = true;
    ++n;
  }
  return n;
}

struct RepeatCounts {
  std::size_t forward = 0;   // N_{I->It}
  std::size_t backward = 0;  // N_{It->I}
  std::size_t n_source = 0;  // N_I
  std::size_t n_target = 0;  // N_It

  double re() const {
    const std::size_t denom = n_source + n_target;
    return denom == 0 ? 0.0 : static_cast<double>(forward + backward) / static_cast<double>(denom);
  }
};

inline RepeatCounts repeat_counts(std::span<const SemLS> dets_i, std::span<const SemLS> dets_it,
                                  const AffineTransform& t, double th,
                                  const RepeatabilityOptions& opt = {}) {
  if (!(th > 0.0 && th <= 1.0)) throw ValidationError("repeatability threshold outside (0, 1]");
  const AffineTransform inv = t.inverse();
  auto warp = [&](std::span<const SemLS> segs, const AffineTransform& m,
                  const std::optional<ImageBounds>& bounds) {
    std::vector<SemLS> out;
    for (auto& w : transform_segments(segs, m, bounds, bounds ? opt.min_len : 0.0)) {
      out.push_back(w.segment);
    }
    return out;
  };
  const std::vector<SemLS> fwd = warp(dets_i, t, opt.bounds_target);
  const std::vector<SemLS> bwd = warp(dets_it, inv, opt.bounds_source);
  RepeatCounts c;
  c.n_source = dets_i.size();
  c.n_target = dets_it.size();
  c.forward = count_repeated(fwd, dets_it, th, opt.category_agnostic);
  c.backward = count_repeated(bwd, dets_i, th, opt.category_agnostic);
  return c;
}

/// Re for one image pair; 0 when both sets are empty.
inline double repeatability(std::span<const SemLS> dets_i, std::span<const SemLS> dets_it,
                            const AffineTransform& t, double th,
                            const RepeatabilityOptions& opt = {}) {
  return repeat_counts(dets_i, dets_it, t, th, opt).re();
}

inline constexpr std::array<double, 5> kRepeatThresholds{0.5, 0.6, 0.7, 0.8, 0.9};

struct RepeatPair {
  std::vector<SemLS> dets_i;
  std::vector<SemLS> dets_it;
  AffineTransform transform;
  /// Overrides both bounds of the options for this pair when set.
  std::optional<ImageBounds> bounds;
};

struct RepeatabilityReport {
  std::array<double, 5> thresholds = kRepeatThresholds;
  std::array<double, 5> re{};  // mean over pairs
  double mare = 0.0;
};

inline RepeatabilityReport mare(std::span<const RepeatPair> pairs,
                                const RepeatabilityOptions& opt = {}) {
  if (pairs.empty()) throw ValidationError("mARe needs at least one image pair");
  RepeatabilityReport rep;
  for (std::size_t k = 0; k < rep.thresholds.size(); ++k) {
    double sum = 0.0;
    for (const auto& p : pairs) {
      RepeatabilityOptions o = opt;
      if (p.bounds) o.bounds_source = o.bounds_target = p.bounds;
      sum += repeatability(p.dets_i, p.dets_it, p.transform, rep.thresholds[k], o);
    }
    rep.re[k] = sum / static_cast<double>(pairs.size());
  }
  rep.mare = std::accumulate(rep.re.begin(), rep.re.end(), 0.0) / rep.re.size();
  return rep;
}

}  // namespace semls
