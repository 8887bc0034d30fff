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

// Loop closure detection from semantic line segments.
//
// Each frame is reduced to a signature of (category, angle, normalized
// center, normalized length) records. A query votes for database frames by
// pairing same-category segments that pass angle/center/length gates; the
// best candidates are verified with RANSAC on a 2D similarity transform of
// the paired centers. Recall at fixed precision summarizes a query set.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semls/acl.hpp"
#include "semls/core.hpp"

namespace semls {

struct SegmentFeature {
  int category = 0;
  double alpha_deg = 0.0;  // [0, 180)
  Point center;            // normalized by image size, [0, 1]^2
  double length = 0.0;     // normalized by image diagonal
};

struct FrameSignature {
  std::string frame_id;
  std::vector<SegmentFeature> segments;
  std::optional<std::array<double, 3>> position;  // meters
};

inline FrameSignature make_signature(std::string frame_id, std::span<const SemLS> segs,
                                     double width, double height,
                                     std::optional<std::array<double, 3>> position = {}) {
  if (!(width > 0.0 && height > 0.0)) throw ValidationError("image size must be positive");
  FrameSignature f{std::move(frame_id), {}, position};
  const double diag = std::hypot(width, height);
  f.segments.reserve(segs.size());
  for (const SemLS& s : segs) {
    const Point m = s.midpoint();
    f.segments.push_back({s.category, s.angle_deg(),
                          {std::clamp(m.x / width, 0.0, 1.0), std::clamp(m.y / height, 0.0, 1.0)},
                          s.length() / diag});
  }
  return f;
}

/// Immutable database of signatures with per-category postings.
class LcdIndex {
 public:
  struct Posting {
    std::size_t frame;
    std::size_t segment;
  };

  LcdIndex() = default;

  explicit LcdIndex(std::vector<FrameSignature> frames) : frames_(std::move(frames)) {
    std::set<std::string> seen;
    for (std::size_t f = 0; f < frames_.size(); ++f) {
      if (!seen.insert(frames_[f].frame_id).second) {
        throw ValidationError("duplicate frame id '" + frames_[f].frame_id + "'");
      }
      for (std::size_t s = 0; s < frames_[f].segments.size(); ++s) {
        postings_[frames_[f].segments[s].category].push_back({f, s});
        ++segment_count_;
      }
    }
  }

  const std::vector<FrameSignature>& frames() const { return frames_; }
  std::size_t segment_count() const { return segment_count_; }

  std::span<const Posting> postings(int category) const {
    auto it = postings_.find(category);
    if (it == postings_.end()) return {};
    return it->second;
  }

 private:
  std::vector<FrameSignature> frames_;
  std::map<int, std::vector<Posting>> postings_;
  std::size_t segment_count_ = 0;
};

inline LcdIndex build_index(std::vector<FrameSignature> db) { return LcdIndex(std::move(db)); }

struct VoteParams {
  double tau_alpha_deg = 10.0;
  double tau_center = 0.1;
  double tau_length = 0.2;  // relative to the query length
  std::size_t top_k = 100;
  std::string exclude_frame_id;  // skipped when non-empty (self-matches)
};

struct FrameCandidate {
  std::size_t frame = 0;
  std::string frame_id;
  double score = 0.0;  // pairs / max(n_query, n_db)
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (query seg, db seg)
};

inline bool passes_gates(const SegmentFeature& q, const SegmentFeature& d, const VoteParams& p) {
  if (q.category != d.category) return false;
  if (angle_difference_deg(q.alpha_deg, d.alpha_deg) > p.tau_alpha_deg) return false;
  if (distance(q.center, d.center) > p.tau_center) return false;
  return q.length > 0.0 && std::abs(q.length - d.length) / q.length <= p.tau_length;
}

/// Greedy pairing: each query segment, in order, takes the unused gate-passing
/// database segment with the nearest center (ties: lower index).
inline std::vector<std::pair<std::size_t, std::size_t>> pair_segments(const FrameSignature& q,
                                                                      const FrameSignature& d,
                                                                      const VoteParams& p) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> used(d.segments.size(), false);
  for (std::size_t i = 0; i < q.segments.size(); ++i) {
    std::optional<std::size_t> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.segments.size(); ++j) {
      if (used[j] || !passes_gates(q.segments[i], d.segments[j], p)) continue;
      const double dist = distance(q.segments[i].center, d.segments[j].center);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best) {
      used[*best] = true;
      pairs.emplace_back(i, *best);
    }
  }
  return pairs;
}

/// Frames with at least one pair, by descending score (ties: frame id), top-k.
inline std::vector<FrameCandidate> vote_candidates(const FrameSignature& query,
                                                   const LcdIndex& index,
                                                   const VoteParams& p = {}) {
  if (!(p.tau_alpha_deg > 0.0 && p.tau_center > 0.0 && p.tau_length > 0.0)) {
    throw ValidationError("voting tolerances must be positive");
  }
  std::set<std::size_t> touched;
  for (const auto& s : query.segments) {
    for (const auto& post : index.postings(s.category)) touched.insert(post.frame);
  }
  std::vector<FrameCandidate> out;
  for (std::size_t f : touched) {
    const FrameSignature& db = index.frames()[f];
    if (!p.exclude_frame_id.empty() && db.frame_id == p.exclude_frame_id) continue;
    auto pairs = pair_segments(query, db, p);
    if (pairs.empty()) continue;
    const double denom =
        static_cast<double>(std::max(query.segments.size(), db.segments.size()));
    out.push_back({f, db.frame_id, static_cast<double>(pairs.size()) / denom, std::move(pairs)});
  }
  std::sort(out.begin(), out.end(), [](const FrameCandidate& a, const FrameCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.frame_id < b.frame_id;
  });
  if (out.size() > p.top_k) out.resize(p.top_k);
  return out;
}

// -----------------------------------------------------------------------------
// RANSAC verification
// -----------------------------------------------------------------------------

/// z -> a z + b on the complex plane: scale |a|, rotation arg(a), shift b.
struct Similarity2D {
  std::complex<double> a{1.0, 0.0};
  std::complex<double> b{0.0, 0.0};

  double scale() const { return std::abs(a); }
  double rotation_rad() const { return std::arg(a); }
  Point translation() const { return {b.real(), b.imag()}; }
  Point apply(Point p) const {
    const auto z = a * std::complex<double>(p.x, p.y) + b;
    return {z.real(), z.imag()};
  }

  static Similarity2D from_params(double scale, double rotation_rad, Point shift) {
    return {std::polar(scale, rotation_rad), {shift.x, shift.y}};
  }
};

/// Least-squares similarity mapping src onto dst (both non-empty, same size).
inline std::optional<Similarity2D> fit_similarity(std::span<const Point> src,
                                                  std::span<const Point> dst) {
  const std::size_t n = src.size();
  if (n < 2 || dst.size() != n) return std::nullopt;
  std::complex<double> ms{0, 0}, md{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    ms += std::complex<double>(src[i].x, src[i].y);
    md += std::complex<double>(dst[i].x, dst[i].y);
  }
  ms /= static_cast<double>(n);
  md /= static_cast<double>(n);
  std::complex<double> num{0, 0};
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto zs = std::complex<double>(src[i].x, src[i].y) - ms;
    const auto zd = std::complex<double>(dst[i].x, dst[i].y) - md;
    num += zd * std::conj(zs);
    den += std::norm(zs);
  }
  if (!(den > 0.0)) return std::nullopt;
  Similarity2D s;
  s.a = num / den;
  s.b = md - s.a * ms;
  return s;
}

struct RansacParams {
  std::size_t iterations = 500;
  double inlier_threshold = 0.05;  // normalized image units
  std::uint64_t seed = 0;
};

struct VerifyResult {
  bool verified = false;
  std::size_t inliers = 0;
  Similarity2D model;
  std::vector<bool> inlier_mask;
  double score = 0.0;  // inlier count, or raw pair count when unverified
};

/// Fits query centers -> database centers over the given pairs. When the
/// number of distinct 2-subsets does not exceed `iterations` they are all
/// enumerated; otherwise `iterations` random subsets are drawn from `seed`.
inline VerifyResult ransac_verify(const FrameSignature& query, const FrameSignature& db,
                                  std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                  const RansacParams& p = {}) {
  VerifyResult res;
  const std::size_t n = pairs.size();
  if (n < 2) {
    res.score = static_cast<double>(n);
    res.inlier_mask.assign(n, n == 1);
    res.inliers = n;
    return res;
  }
  std::vector<Point> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = query.segments.at(pairs[i].first).center;
    dst[i] = db.segments.at(pairs[i].second).center;
  }
  auto count = [&](const Similarity2D& m, std::vector<bool>& mask, double& residual) {
    std::size_t c = 0;
    residual = 0.0;
    mask.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = distance(m.apply(src[i]), dst[i]);
      if (e <= p.inlier_threshold) {
        mask[i] = true;
        residual += e;
        ++c;
      }
    }
    return c;
  };

  std::size_t best = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<bool> mask;
  auto consider = [&](std::size_t i, std::size_t j) {
    const Point s2[2] = {src[i], src[j]};
    const Point d2[2] = {dst[i], dst[j]};
    auto m = fit_similarity(s2, d2);
    if (!m) return;
    double r = 0.0;
    const std::size_t c = count(*m, mask, r);
    if (c > best || (c == best && r < best_residual)) {
      best = c;
      best_residual = r;
      res.model = *m;
      res.inlier_mask = mask;
    }
  };

  const std::size_t subsets = n * (n - 1) / 2;
  if (subsets <= p.iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) consider(i, j);
    }
  } else {
    std::mt19937_64 rng(p.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t it = 0; it < p.iterations; ++it) {
      const std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      while (j == i) j = pick(rng);
      consider(i, j);
    }
  }
  if (best == 0) {
    res.score = static_cast<double>(n);
    res.inlier_mask.assign(n, false);
    return res;
  }
  // Refit on the consensus set.
  std::vector<Point> is, id;
  for (std::size_t i = 0; i < n; ++i) {
    if (res.inlier_mask[i]) {
      is.push_back(src[i]);
      id.push_back(dst[i]);
    }
  }
  if (auto refit = fit_similarity(is, id)) {
    double r = 0.0;
    const std::size_t c = count(*refit, mask, r);
    if (c >= best) {
      best = c;
      res.model = *refit;
      res.inlier_mask = mask;
    }
  }
  res.verified = true;
  res.inliers = best;
  res.score = static_cast<double>(best);
  return res;
}

// -----------------------------------------------------------------------------
// Query pipeline and ground truth
// -----------------------------------------------------------------------------

struct LoopQueryResult {
  std::optional<std::size_t> frame;  // best database frame
  std::string frame_id;
  double score = -std::numeric_limits<double>::infinity();
  double vote_score = 0.0;
  bool verified = false;
};

/// Votes, verifies the top-k candidates and returns the best by verified
/// score (ties: vote score, then frame id).
inline LoopQueryResult detect_loop(const FrameSignature& query, const LcdIndex& index,
                                   const VoteParams& vp = {}, const RansacParams& rp = {}) {
  LoopQueryResult best;
  for (const FrameCandidate& c : vote_candidates(query, index, vp)) {
    const VerifyResult v = ransac_verify(query, index.frames()[c.frame], c.pairs, rp);
    const bool better = !best.frame || v.score > best.score ||
                        (v.score == best.score && (c.score > best.vote_score ||
                                                   (c.score == best.vote_score &&
                                                    c.frame_id < best.frame_id)));
    if (better) {
      best.frame = c.frame;
      best.frame_id = c.frame_id;
      best.score = v.score;
      best.vote_score = c.score;
      best.verified = v.verified;
    }
  }
  return best;
}

inline constexpr double kDefaultLoopDistance = 10.0;

/// Database frames whose position lies within `d_loop` of the query.
struct LoopGroundTruth {
  double d_loop = kDefaultLoopDistance;

  std::set<std::size_t> true_matches(const FrameSignature& query, const LcdIndex& index) const {
    if (!(d_loop > 0.0)) throw ValidationError("loop distance must be positive");
    std::set<std::size_t> out;
    if (!query.position) return out;
    for (std::size_t f = 0; f < index.frames().size(); ++f) {
      const auto& pos = index.frames()[f].position;
      if (!pos) continue;
      double d2 = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double d = (*pos)[i] - (*query.position)[i];
        d2 += d * d;
      }
      if (std::sqrt(d2) < d_loop) out.insert(f);
    }
    return out;
  }
};

/// Best-match score of one query and whether it is a correct loop.
struct ScoredQuery {
  double score = 0.0;  // -inf when the query produced no match
  bool correct = false;
  bool has_true_loop = false;
};

struct RocPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct RecallReport {
  std::vector<double> precision_levels;
  std::vector<double> recalls;
  std::vector<RocPoint> roc;  // one point per distinct finite score, descending
};

inline const std::vector<double>& default_precision_levels() {
  static const std::vector<double> levels{0.99, 0.95, 0.80};
  return levels;
}

/// Sweeps the acceptance threshold over every distinct score. R@P is the
/// highest recall among thresholds whose precision is at least P (0 if none).
inline RecallReport recall_at_precision(std::span<const ScoredQuery> queries,
                                        std::span<const double> precision_levels) {
  std::size_t positives = 0;
  for (const auto& q : queries) {
    if (q.correct && !q.has_true_loop) {
      throw ValidationError("a query marked correct has no true loop");
    }
    if (q.has_true_loop) ++positives;
  }
  if (positives == 0) throw DegenerateError("recall is undefined: no query has a true loop");

  std::vector<const ScoredQuery*> order;
  for (const auto& q : queries) {
    if (std::isfinite(q.score)) order.push_back(&q);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const ScoredQuery* a, const ScoredQuery* b) { return a->score > b->score; });

  RecallReport rep;
  rep.precision_levels.assign(precision_levels.begin(), precision_levels.end());
  std::size_t accepted = 0, correct = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = order[i]->score;
    while (i < order.size() && order[i]->score == s) {
      ++accepted;
      if (order[i]->correct) ++correct;
      ++i;
    }
    rep.roc.push_back({s, static_cast<double>(correct) / static_cast<double>(accepted),
                       static_cast<double>(correct) / static_cast<double>(positives)});
  }
  for (double level : precision_levels) {
    double r = 0.0;
    for (const auto& pt : rep.roc) {
      if (pt.precision >= level) r = std::max(r, pt.recall);
    }
    rep.recalls.push_back(r);
  }
  return rep;
}

inline RecallReport recall_at_precision(std::span<const ScoredQuery> queries) {
  return recall_at_precision(queries, default_precision_levels());
}

}  // namespace semls
