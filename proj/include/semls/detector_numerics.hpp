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

// Reference numerics for a center-point line segment detector: dense
// training targets, the heatmap focal loss, masked L1 / cross-entropy head
// losses, the two weighted totals (angle/midpoint/length and
// box+direction encodings), peak decoding, and a central-difference
// gradient checker.
//
// All maps are laid out channel x y x x on a grid of (H/r) x (W/r) cells,
// r being the output stride.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semls/core.hpp"
#include "semls/tensor.hpp"

namespace semls {

enum class Encoding { kAngMidLen, kLineAsObj };
enum class DirectionMode { kRegression, kClassification };

inline constexpr int kDefaultStride = 4;
inline constexpr double kGaussianMinOverlap = 0.7;
inline constexpr double kProbabilityEpsilon = 1e-12;

// -----------------------------------------------------------------------------
// Targets
// -----------------------------------------------------------------------------

/// Largest integer radius r such that shifting the corners of a w x h box by
/// r keeps box IoU >= min_overlap for all three corner-motion patterns
/// (translation, shrink, growth). w and h are in feature-map cells.
inline int gaussian_radius(double w, double h, double min_overlap = kGaussianMinOverlap) {
  const double o = min_overlap;
  const double s = w + h;
  const double p = w * h;
  // Translated box: r^2 - s r + p(1-o)/(1+o) >= 0, smaller root.
  const double r1 = (s - std::sqrt(std::max(0.0, s * s - 4.0 * p * (1.0 - o) / (1.0 + o)))) / 2.0;
  // Shrunk box: 4r^2 - 2s r + p(1-o) >= 0, smaller root.
  const double r2 = (2.0 * s - std::sqrt(std::max(0.0, 4.0 * s * s - 16.0 * p * (1.0 - o)))) / 8.0;
  // Grown box: 4o r^2 + 2o s r + p(o-1) <= 0, positive root.
  const double r3 =
      (-2.0 * o * s + std::sqrt(std::max(0.0, 4.0 * o * o * s * s - 16.0 * o * (o - 1.0) * p))) /
      (8.0 * o);
  const double r = std::min({r1, r2, r3});
  return std::max(0, static_cast<int>(std::floor(r + 1e-9)));
}

/// Standard deviation paired with a radius: (2r + 1) / 6.
inline double gaussian_sigma(int radius) {
  return std::max(kProbabilityEpsilon, (2.0 * radius + 1.0) / 6.0);
}

inline double gaussian_value(double dx, double dy, double sigma) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

/// Writes exp(-d^2 / 2 sigma^2) into channel k within the square window of
/// the given radius, keeping the per-cell maximum.
inline void draw_gaussian(Tensor3& heatmap, std::size_t k, long cx, long cy, int radius,
                          double sigma) {
  const long h = static_cast<long>(heatmap.height());
  const long w = static_cast<long>(heatmap.width());
  for (long dy = -radius; dy <= radius; ++dy) {
    const long y = cy + dy;
    if (y < 0 || y >= h) continue;
    for (long dx = -radius; dx <= radius; ++dx) {
      const long x = cx + dx;
      if (x < 0 || x >= w) continue;
      double& cell = heatmap(k, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      cell = std::max(cell, gaussian_value(static_cast<double>(dx), static_cast<double>(dy), sigma));
    }
  }
}

struct TargetMaps {
  int stride = kDefaultStride;
  std::size_t num_classes = 0;
  Tensor3 heatmap;    // K x h x w, exactly 1 at centers
  Tensor3 offset;     // 2 x h x w, c/r - floor(c/r)
  Tensor3 wh;         // 2 x h x w, box size in cells
  Tensor3 ang;        // 1 x h x w, alpha / 180
  Tensor3 len;        // 1 x h x w, length in cells / cell-grid diagonal
  Tensor3 direction;  // 1 x h x w, d_g
  Tensor3 mask;       // 1 x h x w
  std::size_t n = 0;  // number of annotations (collisions included)

  std::size_t grid_width() const { return mask.width(); }
  std::size_t grid_height() const { return mask.height(); }
  double grid_diagonal() const {
    return std::hypot(static_cast<double>(grid_width()), static_cast<double>(grid_height()));
  }
};

/// Dense targets for annotations given in the general encoding. Centers that
/// collide in one cell keep counting in `n`; the later annotation's regression
/// targets win.
inline TargetMaps make_targets(std::span<const GeneralEncoding> annotations,
                               std::size_t num_classes, std::size_t image_width,
                               std::size_t image_height, int stride = kDefaultStride) {
  if (stride <= 0) throw ValidationError("output stride must be positive");
  const auto r = static_cast<std::size_t>(stride);
  if (image_width % r != 0 || image_height % r != 0) {
    throw ValidationError("output stride must divide the image size");
  }
  const std::size_t fw = image_width / r, fh = image_height / r;
  TargetMaps t;
  t.stride = stride;
  t.num_classes = num_classes;
  t.heatmap = Tensor3(num_classes, fh, fw);
  t.offset = Tensor3(2, fh, fw);
  t.wh = Tensor3(2, fh, fw);
  t.ang = Tensor3(1, fh, fw);
  t.len = Tensor3(1, fh, fw);
  t.direction = Tensor3(1, fh, fw);
  t.mask = Tensor3(1, fh, fw);
  const double diag = t.grid_diagonal();

  std::vector<std::pair<std::size_t, std::size_t>> centers;  // (k, cell index)
  for (const GeneralEncoding& g : annotations) {
    validate(g);
    if (g.k < 0 || static_cast<std::size_t>(g.k) >= num_classes) {
      throw ValidationError("annotation category " + std::to_string(g.k) +
                            " outside the heatmap channels");
    }
    if (g.xc < 0.0 || g.yc < 0.0 || g.xc > static_cast<double>(image_width) ||
        g.yc > static_cast<double>(image_height)) {
      throw ValidationError("annotation center outside the image");
    }
    const double fx = g.xc / stride, fy = g.yc / stride;
    // A center on the right/bottom border maps to the last cell.
    const std::size_t cx = std::min(static_cast<std::size_t>(std::floor(fx)), fw - 1);
    const std::size_t cy = std::min(static_cast<std::size_t>(std::floor(fy)), fh - 1);
    const auto k = static_cast<std::size_t>(g.k);

    const double wc = g.w / stride, hc = g.h / stride;
    const int radius = gaussian_radius(wc, hc);
    draw_gaussian(t.heatmap, k, static_cast<long>(cx), static_cast<long>(cy), radius,
                  gaussian_sigma(radius));
    centers.emplace_back(k, cy * fw + cx);

    t.offset(0, cy, cx) = fx - static_cast<double>(cx);
    t.offset(1, cy, cx) = fy - static_cast<double>(cy);
    t.wh(0, cy, cx) = wc;
    t.wh(1, cy, cx) = hc;
    t.direction(0, cy, cx) = static_cast<double>(g.d_g);
    if (g.d_g != 2 && g.w + g.h > 0.0) {
      const SemLS s = decode_general_segment(g);
      t.ang(0, cy, cx) = s.angle_deg() / 180.0;
      t.len(0, cy, cx) = (s.length() / stride) / diag;
    }
    t.mask(0, cy, cx) = 1.0;
    ++t.n;
  }
  // Centers are exactly 1 even where a wider neighbour already wrote there.
  for (auto [k, idx] : centers) t.heatmap(k, idx / fw, idx % fw) = 1.0;
  return t;
}

inline TargetMaps make_targets(std::span<const SemLS> segments, std::size_t num_classes,
                               std::size_t image_width, std::size_t image_height,
                               int stride = kDefaultStride) {
  std::vector<GeneralEncoding> enc;
  enc.reserve(segments.size());
  for (const auto& s : segments) enc.push_back(encode_general(s));
  return make_targets(enc, num_classes, image_width, image_height, stride);
}

// -----------------------------------------------------------------------------
// Losses
// -----------------------------------------------------------------------------

struct LossWeights {
  double off = 1.0;
  double wh = 0.1;
  double d = 1.0;
  double ang = 1.0;
  double len = 0.1;
};

struct FocalParams {
  double delta = 4.0;
  double gamma = 2.0;
};

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

inline double normalizer(std::size_t n) { return static_cast<double>(std::max<std::size_t>(n, 1)); }

/// -(1/N) sum M_t^delta (1 - P_t)^gamma log(P_t). Cells whose focusing
/// weight is exactly zero contribute exactly zero.
inline double focal_loss(const Tensor3& pred, const Tensor3& target, std::size_t n,
                         const FocalParams& fp = {}) {
  require_same_shape(pred, target, "focal_loss");
  const auto p = pred.data();
  const auto m = target.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 1.0) {
      const double wgt = std::pow(1.0 - p[i], fp.gamma);
      if (wgt == 0.0) continue;
      sum += wgt * std::log(clamp_probability(p[i]));
    } else {
      const double wgt = std::pow(1.0 - m[i], fp.delta) * std::pow(p[i], fp.gamma);
      if (wgt == 0.0) continue;
      sum += wgt * std::log(1.0 - clamp_probability(p[i]));
    }
  }
  return -sum / normalizer(n);
}

/// d focal_loss / d pred for predictions strictly inside (eps, 1 - eps).
inline Tensor3 focal_loss_gradient(const Tensor3& pred, const Tensor3& target, std::size_t n,
                                   const FocalParams& fp = {}) {
  require_same_shape(pred, target, "focal_loss_gradient");
  Tensor3 g(pred.channels(), pred.height(), pred.width());
  const auto p = pred.data();
  const auto m = target.data();
  auto out = g.data();
  const double inv_n = 1.0 / normalizer(n);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_probability(p[i]);
    if (m[i] == 1.0) {
      const double a = std::pow(1.0 - q, fp.gamma);
      const double da = -fp.gamma * std::pow(1.0 - q, fp.gamma - 1.0);
      out[i] = -inv_n * (da * std::log(q) + a / q);
    } else {
      const double w = std::pow(1.0 - m[i], fp.delta);
      const double a = std::pow(q, fp.gamma);
      const double da = fp.gamma * std::pow(q, fp.gamma - 1.0);
      out[i] = -inv_n * w * (da * std::log(1.0 - q) - a / (1.0 - q));
    }
  }
  return g;
}

inline void require_mask(const Tensor3& mask, const Tensor3& like, const char* what) {
  if (mask.channels() != 1 || mask.height() != like.height() || mask.width() != like.width()) {
    throw ShapeError(std::string(what) + ": mask " + mask.shape_string() +
                     " does not cover map " + like.shape_string());
  }
}

/// (1/N) sum over masked cells and all channels of |pred - target|.
inline double masked_l1(const Tensor3& pred, const Tensor3& target, const Tensor3& mask,
                        std::size_t n) {
  require_same_shape(pred, target, "masked_l1");
  require_mask(mask, pred, "masked_l1");
  double sum = 0.0;
  for (std::size_t c = 0; c < pred.channels(); ++c) {
    for (std::size_t y = 0; y < pred.height(); ++y) {
      for (std::size_t x = 0; x < pred.width(); ++x) {
        if (mask(0, y, x) == 0.0) continue;
        sum += mask(0, y, x) * std::abs(pred(c, y, x) - target(c, y, x));
      }
    }
  }
  return sum / normalizer(n);
}

/// Subgradient of masked_l1; sign(0) is taken as 0.
inline Tensor3 masked_l1_gradient(const Tensor3& pred, const Tensor3& target, const Tensor3& mask,
                                  std::size_t n) {
  require_same_shape(pred, target, "masked_l1_gradient");
  require_mask(mask, pred, "masked_l1_gradient");
  Tensor3 g(pred.channels(), pred.height(), pred.width());
  const double inv_n = 1.0 / normalizer(n);
  for (std::size_t c = 0; c < pred.channels(); ++c) {
    for (std::size_t y = 0; y < pred.height(); ++y) {
      for (std::size_t x = 0; x < pred.width(); ++x) {
        const double d = pred(c, y, x) - target(c, y, x);
        const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        g(c, y, x) = mask(0, y, x) * sign * inv_n;
      }
    }
  }
  return g;
}

namespace detail {

inline void check_direction_inputs(const Tensor3& logits, const Tensor3& target_d,
                                   const Tensor3& mask) {
  if (logits.channels() != 2) {
    throw ShapeError("direction_ce: expected 2 logit channels, got " + logits.shape_string());
  }
  require_mask(mask, logits, "direction_ce");
  require_mask(target_d, logits, "direction_ce target");
  for (std::size_t y = 0; y < logits.height(); ++y) {
    for (std::size_t x = 0; x < logits.width(); ++x) {
      if (mask(0, y, x) == 0.0) continue;
      const double t = target_d(0, y, x);
      if (t != 0.0 && t != 1.0) {
        throw ValidationError("direction target " + std::to_string(t) + " outside {0, 1}");
      }
    }
  }
}

}  // namespace detail

/// -(1/N) sum over masked cells of log softmax(logits)[target].
inline double direction_ce(const Tensor3& logits, const Tensor3& target_d, const Tensor3& mask,
                           std::size_t n) {
  detail::check_direction_inputs(logits, target_d, mask);
  double sum = 0.0;
  for (std::size_t y = 0; y < logits.height(); ++y) {
    for (std::size_t x = 0; x < logits.width(); ++x) {
      if (mask(0, y, x) == 0.0) continue;
      const double z0 = logits(0, y, x), z1 = logits(1, y, x);
      const double zt = target_d(0, y, x) == 0.0 ? z0 : z1;
      const double zo = target_d(0, y, x) == 0.0 ? z1 : z0;
      // -log softmax_t = log(1 + exp(z_other - z_t)), computed stably.
      const double d = zo - zt;
      const double nll = d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
      sum += mask(0, y, x) * nll;
    }
  }
  return sum / normalizer(n);
}

inline Tensor3 direction_ce_gradient(const Tensor3& logits, const Tensor3& target_d,
                                     const Tensor3& mask, std::size_t n) {
  detail::check_direction_inputs(logits, target_d, mask);
  Tensor3 g(2, logits.height(), logits.width());
  const double inv_n = 1.0 / normalizer(n);
  for (std::size_t y = 0; y < logits.height(); ++y) {
    for (std::size_t x = 0; x < logits.width(); ++x) {
      if (mask(0, y, x) == 0.0) continue;
      const double z0 = logits(0, y, x), z1 = logits(1, y, x);
      const double mx = std::max(z0, z1);
      const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
      const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
      const bool t0 = target_d(0, y, x) == 0.0;
      g(0, y, x) = mask(0, y, x) * (p0 - (t0 ? 1.0 : 0.0)) * inv_n;
      g(1, y, x) = mask(0, y, x) * (p1 - (t0 ? 0.0 : 1.0)) * inv_n;
    }
  }
  return g;
}

/// Prediction heads. Which optional heads are required depends on the
/// encoding: {ang, len} for AngMidLen, {wh, direction} for LineAsObj. The
/// direction head has 1 channel in regression mode and 2 logits otherwise.
struct HeadSet {
  Tensor3 heatmap;
  Tensor3 offset;
  std::optional<Tensor3> wh;
  std::optional<Tensor3> direction;
  std::optional<Tensor3> ang;
  std::optional<Tensor3> len;
};

struct LossBreakdown {
  double hm = 0.0;
  double off = 0.0;
  double wh = 0.0;
  double d = 0.0;
  double ang = 0.0;
  double len = 0.0;
  double total = 0.0;
};

namespace detail {

inline const Tensor3& require_head(const std::optional<Tensor3>& head, const char* name) {
  if (!head) throw ValidationError(std::string("missing prediction head '") + name + "'");
  return *head;
}

}  // namespace detail

/// hm + w_off off + w_ang ang + w_len len        (AngMidLen)
/// hm + w_off off + w_wh wh + w_d d              (LineAsObj)
inline LossBreakdown total_loss(const HeadSet& heads, const TargetMaps& t, const LossWeights& w,
                                Encoding encoding, DirectionMode d_mode) {
  LossBreakdown b;
  b.hm = focal_loss(heads.heatmap, t.heatmap, t.n);
  b.off = masked_l1(heads.offset, t.offset, t.mask, t.n);
  if (encoding == Encoding::kAngMidLen) {
    b.ang = masked_l1(detail::require_head(heads.ang, "ang"), t.ang, t.mask, t.n);
    b.len = masked_l1(detail::require_head(heads.len, "len"), t.len, t.mask, t.n);
    b.total = b.hm + w.off * b.off + w.ang * b.ang + w.len * b.len;
  } else {
    b.wh = masked_l1(detail::require_head(heads.wh, "wh"), t.wh, t.mask, t.n);
    const Tensor3& d = detail::require_head(heads.direction, "direction");
    b.d = d_mode == DirectionMode::kRegression ? masked_l1(d, t.direction, t.mask, t.n)
                                               : direction_ce(d, t.direction, t.mask, t.n);
    b.total = b.hm + w.off * b.off + w.wh * b.wh + w.d * b.d;
  }
  return b;
}

/// Logit magnitude used for saturated "ideal" direction predictions.
inline constexpr double kIdealLogit = 50.0;

/// Heads that reproduce the targets exactly (the zero-loss point).
inline HeadSet ideal_heads(const TargetMaps& t, Encoding encoding, DirectionMode d_mode) {
  HeadSet h;
  h.heatmap = t.heatmap;
  h.offset = t.offset;
  if (encoding == Encoding::kAngMidLen) {
    h.ang = t.ang;
    h.len = t.len;
    return h;
  }
  h.wh = t.wh;
  if (d_mode == DirectionMode::kRegression) {
    h.direction = t.direction;
  } else {
    Tensor3 logits(2, t.grid_height(), t.grid_width());
    for (std::size_t y = 0; y < t.grid_height(); ++y) {
      for (std::size_t x = 0; x < t.grid_width(); ++x) {
        const bool zero = t.direction(0, y, x) == 0.0;
        logits(0, y, x) = zero ? kIdealLogit : -kIdealLogit;
        logits(1, y, x) = zero ? -kIdealLogit : kIdealLogit;
      }
    }
    h.direction = std::move(logits);
  }
  return h;
}

// -----------------------------------------------------------------------------
// Decoding
// -----------------------------------------------------------------------------

struct DecodeOptions {
  Encoding encoding = Encoding::kLineAsObj;
  DirectionMode d_mode = DirectionMode::kClassification;
  double conf_threshold = 0.5;
  std::size_t top_k = 100;
  int stride = kDefaultStride;
};

/// True when heatmap(k, y, x) is strictly greater than its 8 neighbours.
inline bool is_strict_peak(const Tensor3& hm, std::size_t k, std::size_t y, std::size_t x) {
  const double v = hm(k, y, x);
  for (long dy = -1; dy <= 1; ++dy) {
    for (long dx = -1; dx <= 1; ++dx) {
      if (dy == 0 && dx == 0) continue;
      const long ny = static_cast<long>(y) + dy, nx = static_cast<long>(x) + dx;
      if (ny < 0 || nx < 0 || ny >= static_cast<long>(hm.height()) ||
          nx >= static_cast<long>(hm.width())) {
        continue;
      }
      if (hm(k, static_cast<std::size_t>(ny), static_cast<std::size_t>(nx)) >= v) return false;
    }
  }
  return true;
}

/// Peaks -> segments with confidence = heatmap value and category = channel.
inline std::vector<SemLS> decode_detections(const HeadSet& heads, const DecodeOptions& opt = {}) {
  const Tensor3& hm = heads.heatmap;
  if (heads.offset.channels() != 2 || heads.offset.height() != hm.height() ||
      heads.offset.width() != hm.width()) {
    throw ShapeError("decode_detections: offset head " + heads.offset.shape_string() +
                     " does not match heatmap " + hm.shape_string());
  }
  struct Peak {
    double score;
    std::size_t k, y, x;
  };
  std::vector<Peak> peaks;
  for (std::size_t k = 0; k < hm.channels(); ++k) {
    for (std::size_t y = 0; y < hm.height(); ++y) {
      for (std::size_t x = 0; x < hm.width(); ++x) {
        if (hm(k, y, x) >= opt.conf_threshold && is_strict_peak(hm, k, y, x)) {
          peaks.push_back({hm(k, y, x), k, y, x});
        }
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (peaks.size() > opt.top_k) peaks.resize(opt.top_k);

  const double r = opt.stride;
  const double diag = std::hypot(static_cast<double>(hm.width()), static_cast<double>(hm.height()));
  std::vector<SemLS> out;
  for (const Peak& p : peaks) {
    const Point center{(static_cast<double>(p.x) + heads.offset(0, p.y, p.x)) * r,
                       (static_cast<double>(p.y) + heads.offset(1, p.y, p.x)) * r};
    const int category = static_cast<int>(p.k);
    const double conf = std::clamp(p.score, 0.0, 1.0);
    std::pair<Point, Point> ends;
    if (opt.encoding == Encoding::kAngMidLen) {
      const double len = detail::require_head(heads.len, "len")(0, p.y, p.x) * diag * r;
      if (!(len > 0.0)) continue;
      const double alpha =
          fold_angle_deg(detail::require_head(heads.ang, "ang")(0, p.y, p.x) * 180.0);
      ends = decode_angmidlen({alpha, center, len});
    } else {
      const Tensor3& wh = detail::require_head(heads.wh, "wh");
      const Tensor3& d = detail::require_head(heads.direction, "direction");
      GeneralEncoding g;
      g.xc = center.x;
      g.yc = center.y;
      g.w = std::max(0.0, wh(0, p.y, p.x)) * r;
      g.h = std::max(0.0, wh(1, p.y, p.x)) * r;
      g.k = category;
      if (opt.d_mode == DirectionMode::kRegression) {
        g.d_g = d(0, p.y, p.x) < 0.5 ? 0 : 1;
      } else {
        g.d_g = d(1, p.y, p.x) > d(0, p.y, p.x) ? 1 : 0;
      }
      if (!(g.w + g.h > 0.0)) continue;
      const SemLS s = decode_general_segment(g);
      ends = {s.p1, s.p2};
    }
    out.push_back(make_segment(ends.first, ends.second, category, conf));
  }
  return out;
}

// -----------------------------------------------------------------------------
// Gradient verification
// -----------------------------------------------------------------------------

/// A scalar function of a flat parameter vector with its analytic gradient.
struct DifferentiableLoss {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

/// Compares the analytic gradient against central differences at `point`.
/// Relative error is |a - n| / max(|a|, |n|, abs_floor).
inline GradientCheck finite_diff_check(const DifferentiableLoss& loss,
                                       std::span<const double> point, double step = 1e-6,
                                       double abs_floor = 1e-6) {
  const std::vector<double> analytic = loss.gradient(point);
  if (analytic.size() != point.size()) {
    throw ShapeError("finite_diff_check: gradient size does not match the point");
  }
  std::vector<double> x(point.begin(), point.end());
  GradientCheck res;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + step;
    const double fp = loss.value(x);
    x[i] = x0 - step;
    const double fm = loss.value(x);
    x[i] = x0;
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), abs_floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > res.max_relative_error) {
      res.max_relative_error = rel;
      res.worst_index = i;
    }
  }
  return res;
}

}  // namespace semls
