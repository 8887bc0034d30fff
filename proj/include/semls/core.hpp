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

// Semantic line segment types and the two geometric encodings
// (angle/midpoint/length and bounding box + diagonal direction).
//
// Image coordinates are in pixels with y increasing downward.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace semls {

/// Raised when an input violates a documented type invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the data is well-formed but geometrically degenerate
/// (parallel back-projection planes, empty evaluation sets, ...).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Lexicographic (x, then y) strict ordering.
constexpr bool lex_less(Point a, Point b) {
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

/// Folds an angle in degrees into [0, 180).
inline double fold_angle_deg(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0.0) a += 180.0;
  // fmod of a value just below a multiple of 180 can round up to 180.
  if (a >= 180.0) a = 0.0;
  return a;
}

inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

/// A labeled line segment. The endpoints are kept in canonical order
/// (p1 lexicographically before p2) by every constructor in this library.
struct SemLS {
  Point p1;
  Point p2;
  int category = 0;
  std::optional<double> confidence;
  std::optional<int> track_id;

  double length() const { return distance(p1, p2); }
  Point midpoint() const { return 0.5 * (p1 + p2); }
  /// Undirected angle against the positive x-axis, degrees in [0, 180).
  double angle_deg() const {
    return fold_angle_deg(std::atan2(p2.y - p1.y, p2.x - p1.x) * kRadToDeg);
  }
};

/// Orders two endpoints lexicographically by (x, y).
inline std::pair<Point, Point> canonicalize(Point p1, Point p2) {
  if (p1 == p2) {
    throw ValidationError("degenerate segment: both endpoints are (" + std::to_string(p1.x) +
                          ", " + std::to_string(p1.y) + ")");
  }
  if (lex_less(p2, p1)) return {p2, p1};
  return {p1, p2};
}

/// Builds a canonical segment; throws ValidationError on zero length or
/// non-finite coordinates.
inline SemLS make_segment(Point p1, Point p2, int category = 0,
                          std::optional<double> confidence = std::nullopt,
                          std::optional<int> track_id = std::nullopt) {
  if (!std::isfinite(p1.x) || !std::isfinite(p1.y) || !std::isfinite(p2.x) ||
      !std::isfinite(p2.y)) {
    throw ValidationError("segment endpoint is not finite");
  }
  if (category < 0) throw ValidationError("negative category index");
  if (confidence && !(*confidence >= 0.0 && *confidence <= 1.0)) {
    throw ValidationError("confidence outside [0, 1]");
  }
  auto [a, b] = canonicalize(p1, p2);
  return SemLS{a, b, category, confidence, track_id};
}

/// Re-validates and reorders an existing segment in place.
inline SemLS canonical(SemLS s) {
  auto [a, b] = canonicalize(s.p1, s.p2);
  s.p1 = a;
  s.p2 = b;
  return s;
}

// -----------------------------------------------------------------------------
// Angle / midpoint / length
// -----------------------------------------------------------------------------

struct AngMidLen {
  double alpha_deg = 0.0;  // [0, 180)
  Point mid;
  double len = 0.0;  // > 0
};

inline AngMidLen encode_angmidlen(const SemLS& s) {
  const double len = s.length();
  if (!(len > 0.0)) throw ValidationError("zero-length segment cannot be encoded");
  return AngMidLen{s.angle_deg(), s.midpoint(), len};
}

/// Returns canonical endpoints mid +- (len/2)(cos alpha, sin alpha).
inline std::pair<Point, Point> decode_angmidlen(const AngMidLen& a) {
  if (!(a.len > 0.0)) throw ValidationError("AngMidLen length must be positive");
  if (!(a.alpha_deg >= 0.0 && a.alpha_deg < 180.0)) {
    throw ValidationError("AngMidLen angle must lie in [0, 180)");
  }
  const double rad = a.alpha_deg * kDegToRad;
  const Point half{0.5 * a.len * std::cos(rad), 0.5 * a.len * std::sin(rad)};
  return canonicalize(a.mid - half, a.mid + half);
}

// -----------------------------------------------------------------------------
// General (LineAsObj) encoding
// -----------------------------------------------------------------------------

/// Diagonal direction of a segment inside its bounding box.
enum class Direction : int {
  kLeftTopToRightBottom = 0,
  kLeftBottomToRightTop = 1,
  kObjectBox = 2,
};

struct GeneralEncoding {
  double xc = 0.0;
  double yc = 0.0;
  double w = 0.0;
  double h = 0.0;
  int d_g = 0;
  int k = 0;
};

/// Axis-aligned box, (x0, y0) top-left and (x1, y1) bottom-right.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

inline Box bounding_box(const SemLS& s) {
  return Box{std::min(s.p1.x, s.p2.x), std::min(s.p1.y, s.p2.y), std::max(s.p1.x, s.p2.x),
             std::max(s.p1.y, s.p2.y)};
}

/// Horizontal and vertical segments get d_g = 0: both diagonals of the
/// degenerate box coincide.
inline GeneralEncoding encode_general(const SemLS& s) {
  const SemLS c = canonical(s);
  const Point d = c.p2 - c.p1;
  GeneralEncoding g;
  g.xc = 0.5 * (c.p1.x + c.p2.x);
  g.yc = 0.5 * (c.p1.y + c.p2.y);
  g.w = std::abs(d.x);
  g.h = std::abs(d.y);
  g.d_g = d.y >= 0.0 ? 0 : 1;
  g.k = c.category;
  return g;
}

inline GeneralEncoding encode_general(const Box& b, int category) {
  if (b.width() < 0.0 || b.height() < 0.0) throw ValidationError("inverted box");
  return GeneralEncoding{0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1), b.width(), b.height(), 2,
                         category};
}

inline void validate(const GeneralEncoding& g) {
  if (g.d_g < 0 || g.d_g > 2) {
    throw ValidationError("direction d_g=" + std::to_string(g.d_g) + " outside {0, 1, 2}");
  }
  if (g.w < 0.0 || g.h < 0.0) throw ValidationError("negative box extent");
  if (g.k < 0) throw ValidationError("negative category index");
}

/// d_g in {0, 1} yields the matching diagonal as a canonical segment;
/// d_g = 2 yields the object box.
inline std::variant<SemLS, Box> decode_general(const GeneralEncoding& g) {
  validate(g);
  const double hw = 0.5 * g.w;
  const double hh = 0.5 * g.h;
  if (g.d_g == 2) return Box{g.xc - hw, g.yc - hh, g.xc + hw, g.yc + hh};
  if (g.d_g == 0) return make_segment({g.xc - hw, g.yc - hh}, {g.xc + hw, g.yc + hh}, g.k);
  return make_segment({g.xc - hw, g.yc + hh}, {g.xc + hw, g.yc - hh}, g.k);
}

/// Convenience wrapper for callers that only accept line records.
inline SemLS decode_general_segment(const GeneralEncoding& g) {
  auto decoded = decode_general(g);
  if (auto* s = std::get_if<SemLS>(&decoded)) return *s;
  throw ValidationError("record with d_g=2 is an object box, not a segment");
}

// -----------------------------------------------------------------------------
// Categories
// -----------------------------------------------------------------------------

/// Ordered, bidirectional name <-> index map.
class CategoryRegistry {
 public:
  static constexpr std::size_t kDefaultCapacity = 14;

  explicit CategoryRegistry(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  CategoryRegistry(std::vector<std::string> names, std::size_t capacity = kDefaultCapacity)
      : capacity_(std::max(capacity, names.size())) {
    for (auto& n : names) add(std::move(n));
  }

  /// building, pole, curb, grass.
  static CategoryRegistry with_defaults() {
    return CategoryRegistry({"building", "pole", "curb", "grass"});
  }

  int add(std::string name) {
    if (name.empty()) throw ValidationError("empty category name");
    if (index_.contains(name)) throw ValidationError("duplicate category '" + name + "'");
    if (names_.size() >= capacity_) {
      throw ValidationError("category registry is full (" + std::to_string(capacity_) +
                            " slots)");
    }
    const int idx = static_cast<int>(names_.size());
    index_.emplace(name, idx);
    names_.push_back(std::move(name));
    return idx;
  }

  std::optional<int> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw ValidationError("unknown category '" + std::string(name) + "'");
  }

  const std::string& name_of(int index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= names_.size()) {
      throw ValidationError("category index " + std::to_string(index) + " out of range");
    }
    return names_[static_cast<std::size_t>(index)];
  }

  std::size_t size() const { return names_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::size_t capacity_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace semls
