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

// Numerical self-checks of the detector losses, run by `semls losscheck`.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semls/core.hpp"
#include "semls/detector_numerics.hpp"

namespace semls {

struct SceneConfig {
  std::size_t width = 128;
  std::size_t height = 96;
  std::size_t num_classes = 4;
  std::size_t min_segments = 1;
  std::size_t max_segments = 12;
  double min_length = 8.0;
  double max_length = 60.0;
  int stride = kDefaultStride;
};

/// Random segments whose centers occupy distinct output cells, with
/// same-category centers at least two cells apart (Chebyshev), so every
/// center survives 3x3 peak extraction.
inline std::vector<SemLS> random_scene(std::uint64_t seed, const SceneConfig& cfg = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count(cfg.min_segments, cfg.max_segments);
  std::uniform_int_distribution<std::size_t> cat(0, cfg.num_classes - 1);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  std::uniform_real_distribution<double> angle(0.0, 180.0);
  std::uniform_real_distribution<double> length(cfg.min_length, cfg.max_length);
  const auto r = static_cast<std::size_t>(cfg.stride);
  std::uniform_int_distribution<std::size_t> cell_x(0, cfg.width / r - 1);
  std::uniform_int_distribution<std::size_t> cell_y(0, cfg.height / r - 1);

  const std::size_t n = count(rng);
  std::vector<SemLS> out;
  std::vector<std::pair<long, long>> cells;
  std::vector<std::size_t> cats;
  for (std::size_t attempt = 0; out.size() < n && attempt < 100 * n; ++attempt) {
    const long cx = static_cast<long>(cell_x(rng)), cy = static_cast<long>(cell_y(rng));
    const std::size_t k = cat(rng);
    bool ok = true;
    for (std::size_t i = 0; i < cells.size() && ok; ++i) {
      const long d = std::max(std::abs(cells[i].first - cx), std::abs(cells[i].second - cy));
      if (d == 0 || (cats[i] == k && d < 2)) ok = false;
    }
    if (!ok) continue;
    const Point c{(static_cast<double>(cx) + frac(rng)) * cfg.stride,
                  (static_cast<double>(cy) + frac(rng)) * cfg.stride};
    const double a = angle(rng) * kDegToRad, half = 0.5 * length(rng);
    const Point p1{c.x - half * std::cos(a), c.y - half * std::sin(a)};
    const Point p2{c.x + half * std::cos(a), c.y + half * std::sin(a)};
    const double W = static_cast<double>(cfg.width), H = static_cast<double>(cfg.height);
    if (std::min({p1.x, p1.y, p2.x, p2.y}) < 0.0 || std::max(p1.x, p2.x) > W ||
        std::max(p1.y, p2.y) > H) {
      continue;
    }
    out.push_back(make_segment(p1, p2, static_cast<int>(k)));
    cells.emplace_back(cx, cy);
    cats.push_back(k);
  }
  return out;
}

struct CheckResult {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  /// When set, `value` must be below `tolerance` instead of near `expected`.
  bool upper_bound = false;

  bool passed() const {
    if (!std::isfinite(value)) return false;
    return upper_bound ? value < tolerance : std::abs(value - expected) <= tolerance;
  }
};

namespace detail {

inline std::vector<double> flatten(const Tensor3& t) {
  return {t.data().begin(), t.data().end()};
}

inline Tensor3 reshape_like(std::span<const double> v, const Tensor3& like) {
  Tensor3 t(like.channels(), like.height(), like.width());
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

inline double max_endpoint_error(const std::vector<SemLS>& truth, const std::vector<SemLS>& got) {
  // Each truth segment is compared with the same-category decoded segment
  // whose midpoint is nearest; a missing one scores infinity.
  double worst = truth.size() == got.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const SemLS& t : truth) {
    double best = std::numeric_limits<double>::infinity();
    for (const SemLS& g : got) {
      if (g.category != t.category) continue;
      const SemLS a = canonical(t), b = canonical(g);
      best = std::min(best, std::max(distance(a.p1, b.p1), distance(a.p2, b.p2)));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

/// Hand-evaluated values, ideal-prediction zeros, gradient checks and a
/// decode round trip. Deterministic given `seed`.
inline std::vector<CheckResult> run_loss_selfcheck(std::uint64_t seed) {
  std::vector<CheckResult> out;

  {
    Tensor3 pred(1, 1, 1, 0.5), target(1, 1, 1, 1.0);
    out.push_back({"focal_single_cell", focal_loss(pred, target, 1), 0.25 * std::log(2.0), 1e-12});
  }
  {
    Tensor3 pred(2, 1, 1), target(2, 1, 1), mask(1, 1, 1, 1.0);
    pred(0, 0, 0) = 0.25;
    pred(1, 0, 0) = -0.75;
    out.push_back({"masked_l1_two_channels", masked_l1(pred, target, mask, 1), 1.0, 1e-12});
  }
  {
    Tensor3 logits(2, 1, 1), target(1, 1, 1), mask(1, 1, 1, 1.0);
    out.push_back({"direction_ce_uniform", direction_ce(logits, target, mask, 1), std::log(2.0),
                   1e-12});
  }

  SceneConfig cfg;
  const std::vector<SemLS> scene = random_scene(seed, cfg);
  const TargetMaps t = make_targets(scene, cfg.num_classes, cfg.width, cfg.height, cfg.stride);
  const LossWeights w;
  const std::pair<const char*, std::pair<Encoding, DirectionMode>> modes[] = {
      {"angmidlen", {Encoding::kAngMidLen, DirectionMode::kRegression}},
      {"lineasobj_reg", {Encoding::kLineAsObj, DirectionMode::kRegression}},
      {"lineasobj_cls", {Encoding::kLineAsObj, DirectionMode::kClassification}},
  };
  for (const auto& [name, m] : modes) {
    const HeadSet h = ideal_heads(t, m.first, m.second);
    out.push_back({std::string("ideal_total_") + name, total_loss(h, t, w, m.first, m.second).total,
                   0.0, 1e-12});
    DecodeOptions opt;
    opt.encoding = m.first;
    opt.d_mode = m.second;
    opt.stride = cfg.stride;
    out.push_back({std::string("decode_roundtrip_") + name,
                   detail::max_endpoint_error(scene, decode_detections(h, opt)), 0.0,
                   0.5 * cfg.stride, true});
  }

  // Small grid for the gradient checks.
  SceneConfig small;
  small.width = 24;
  small.height = 24;
  small.num_classes = 2;
  small.max_segments = 3;
  small.min_length = 4.0;
  small.max_length = 12.0;
  const TargetMaps ts =
      make_targets(random_scene(seed + 1, small), small.num_classes, small.width, small.height);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::normal_distribution<double> gauss(0.0, 2.0);

  {
    Tensor3 pred(ts.heatmap.channels(), ts.heatmap.height(), ts.heatmap.width());
    for (double& v : pred.data()) v = unit(rng);
    const Tensor3& target = ts.heatmap;
    const std::size_t n = ts.n;
    DifferentiableLoss loss{
        [&](std::span<const double> x) { return focal_loss(detail::reshape_like(x, pred), target, n); },
        [&](std::span<const double> x) {
          return detail::flatten(focal_loss_gradient(detail::reshape_like(x, pred), target, n));
        }};
    const auto point = detail::flatten(pred);
    out.push_back({"gradcheck_focal", finite_diff_check(loss, point).max_relative_error, 0.0, 1e-4,
                   true});
  }
  {
    Tensor3 pred(2, ts.mask.height(), ts.mask.width());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = 0.1 + unit(rng);
      pred.data()[i] = ts.offset.data()[i] + (rng() % 2 == 0 ? d : -d);
    }
    DifferentiableLoss loss{
        [&](std::span<const double> x) {
          return masked_l1(detail::reshape_like(x, pred), ts.offset, ts.mask, ts.n);
        },
        [&](std::span<const double> x) {
          return detail::flatten(masked_l1_gradient(detail::reshape_like(x, pred), ts.offset, ts.mask, ts.n));
        }};
    const auto point = detail::flatten(pred);
    out.push_back({"gradcheck_masked_l1", finite_diff_check(loss, point).max_relative_error, 0.0,
                   1e-4, true});
  }
  {
    Tensor3 logits(2, ts.mask.height(), ts.mask.width());
    for (double& v : logits.data()) v = gauss(rng);
    Tensor3 target(1, ts.mask.height(), ts.mask.width());
    for (std::size_t i = 0; i < target.size(); ++i) {
      target.data()[i] = ts.mask.data()[i] != 0.0 ? std::min(ts.direction.data()[i], 1.0) : 0.0;
    }
    DifferentiableLoss loss{
        [&](std::span<const double> x) {
          return direction_ce(detail::reshape_like(x, logits), target, ts.mask, ts.n);
        },
        [&](std::span<const double> x) {
          return detail::flatten(
              direction_ce_gradient(detail::reshape_like(x, logits), target, ts.mask, ts.n));
        }};
    const auto point = detail::flatten(logits);
    out.push_back({"gradcheck_direction_ce", finite_diff_check(loss, point).max_relative_error,
                   0.0, 1e-4, true});
  }
  return out;
}

}  // namespace semls
