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

// File formats. Every structured file is JSON Lines: one self-contained JSON
// object per line, blank lines ignored.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "semls/core.hpp"
#include "semls/geometry3d.hpp"
#include "semls/refine.hpp"
#include "semls/repeatability.hpp"

namespace semls {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf.data(), end);
}

// -----------------------------------------------------------------------------
// JSON Lines helpers
// -----------------------------------------------------------------------------

namespace detail {

using Json = nlohmann::ordered_json;

[[noreturn]] inline void fail_at(std::size_t line, const std::string& msg) {
  throw ValidationError("line " + std::to_string(line) + ": " + msg);
}

template <class Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail_at(line, std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) fail_at(line, "record is not a JSON object");
    fn(j, line);
  }
}

inline double number(const Json& j, const char* key, std::size_t line,
                     const std::string& where = {}) {
  auto it = j.find(key);
  if (it == j.end()) fail_at(line, where + "missing field '" + key + "'");
  if (!it->is_number()) fail_at(line, where + "field '" + key + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail_at(line, where + "field '" + key + "' is not finite");
  return v;
}

inline long long integer(const Json& j, const char* key, std::size_t line,
                         const std::string& where = {}) {
  auto it = j.find(key);
  if (it == j.end()) fail_at(line, where + "missing field '" + key + "'");
  if (!it->is_number_integer()) fail_at(line, where + "field '" + key + "' is not an integer");
  return it->get<long long>();
}

inline std::string string(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail_at(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) fail_at(line, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

template <std::size_t N>
std::array<double, N> number_array(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != N) {
    fail_at(line, std::string("field '") + key + "' must be an array of " + std::to_string(N) +
                      " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(*it)[i].is_number()) fail_at(line, std::string("field '") + key + "' holds a non-number");
    out[i] = (*it)[i].get<double>();
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Annotations
// -----------------------------------------------------------------------------

struct AnnotatedSegment {
  SemLS line;
  std::optional<int> d_g;  // 2 marks an object box stored as its corners

  bool is_box() const { return d_g && *d_g == 2; }
};

struct ImageAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<AnnotatedSegment> segments;

  /// Line segments only (object boxes skipped).
  std::vector<SemLS> lines() const {
    std::vector<SemLS> out;
    for (const auto& s : segments) {
      if (!s.is_box()) out.push_back(s.line);
    }
    return out;
  }
};

using AnnotationFile = std::vector<ImageAnnotation>;

struct AnnotationLoadOptions {
  /// When false, a missing category maps to index 0 (candidate files).
  bool require_category = true;
};

/// One segment object. `limits`, when given, bounds the endpoints to
/// [0, limits.x] x [0, limits.y].
inline AnnotatedSegment parse_segment_record(const detail::Json& sj, std::size_t line,
                                             const std::string& where,
                                             const CategoryRegistry& registry,
                                             bool require_category,
                                             std::optional<Point> limits = std::nullopt) {
  if (!sj.is_object()) detail::fail_at(line, where + "not an object");
  const double x1 = detail::number(sj, "x1", line, where);
  const double y1 = detail::number(sj, "y1", line, where);
  const double x2 = detail::number(sj, "x2", line, where);
  const double y2 = detail::number(sj, "y2", line, where);
  if (limits) {
    auto check = [&](double v, double hi, const char* name) {
      if (v < 0.0 || v > hi) {
        detail::fail_at(line, where + name + "=" + format_double(v) + " outside [0, " +
                                  format_double(hi) + "]");
      }
    };
    check(x1, limits->x, "x1");
    check(y1, limits->y, "y1");
    check(x2, limits->x, "x2");
    check(y2, limits->y, "y2");
  }

  AnnotatedSegment seg;
  int category = 0;
  if (auto c = sj.find("category"); c != sj.end()) {
    if (!c->is_string()) detail::fail_at(line, where + "field 'category' is not a string");
    const auto idx = registry.find(c->get<std::string>());
    if (!idx) detail::fail_at(line, where + "unknown category '" + c->get<std::string>() + "'");
    category = *idx;
  } else if (require_category) {
    detail::fail_at(line, where + "missing field 'category'");
  }
  std::optional<double> score;
  if (sj.contains("score")) {
    score = detail::number(sj, "score", line, where);
    if (*score < 0.0 || *score > 1.0) detail::fail_at(line, where + "score outside [0, 1]");
  }
  std::optional<int> track;
  if (sj.contains("track_id")) {
    track = static_cast<int>(detail::integer(sj, "track_id", line, where));
  }
  if (sj.contains("d_g")) {
    const long long d = detail::integer(sj, "d_g", line, where);
    if (d < 0 || d > 2) detail::fail_at(line, where + "d_g outside {0, 1, 2}");
    seg.d_g = static_cast<int>(d);
  }
  try {
    if (seg.is_box()) {
      seg.line = make_segment({std::min(x1, x2), std::min(y1, y2)},
                              {std::max(x1, x2), std::max(y1, y2)}, category, score, track);
    } else {
      seg.line = make_segment({x1, y1}, {x2, y2}, category, score, track);
    }
  } catch (const ValidationError& e) {
    detail::fail_at(line, where + e.what());
  }
  return seg;
}

/// Parses and validates an annotation stream. Endpoints are canonicalized.
inline AnnotationFile load_annotations(std::istream& in, const CategoryRegistry& registry,
                                       const AnnotationLoadOptions& opt = {}) {
  AnnotationFile file;
  detail::for_each_record(in, [&](const detail::Json& j, std::size_t line) {
    ImageAnnotation img;
    img.image_id = detail::string(j, "image_id", line);
    const long long w = detail::integer(j, "width", line);
    const long long h = detail::integer(j, "height", line);
    if (w <= 0 || h <= 0) detail::fail_at(line, "image size must be positive");
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    auto segs = j.find("segments");
    if (segs == j.end() || !segs->is_array()) {
      detail::fail_at(line, "field 'segments' must be an array");
    }
    for (std::size_t i = 0; i < segs->size(); ++i) {
      img.segments.push_back(parse_segment_record((*segs)[i], line,
                                                  "segment " + std::to_string(i) + ": ", registry,
                                                  opt.require_category, Point{w * 1.0, h * 1.0}));
    }
    file.push_back(std::move(img));
  });
  return file;
}

inline AnnotationFile load_annotations(const std::string& path, const CategoryRegistry& registry,
                                       const AnnotationLoadOptions& opt = {}) {
  auto in = detail::open_input(path);
  try {
    return load_annotations(in, registry, opt);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

/// Writes one record per image with keys in a fixed order and shortest
/// round-trip number formatting.
inline void save_annotations(std::ostream& out, const AnnotationFile& file,
                             const CategoryRegistry& registry) {
  for (const auto& img : file) {
    detail::Json j;
    j["image_id"] = img.image_id;
    j["width"] = img.width;
    j["height"] = img.height;
    j["segments"] = detail::Json::array();
    for (const auto& s : img.segments) {
      detail::Json sj;
      sj["x1"] = s.line.p1.x;
      sj["y1"] = s.line.p1.y;
      sj["x2"] = s.line.p2.x;
      sj["y2"] = s.line.p2.y;
      sj["category"] = registry.name_of(s.line.category);
      if (s.line.confidence) sj["score"] = *s.line.confidence;
      if (s.line.track_id) sj["track_id"] = *s.line.track_id;
      if (s.d_g) sj["d_g"] = *s.d_g;
      j["segments"].push_back(std::move(sj));
    }
    out << j.dump() << '\n';
  }
}

inline void save_annotations(const std::string& path, const AnnotationFile& file,
                             const CategoryRegistry& registry) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  save_annotations(out, file, registry);
}

/// Line segments per image id.
inline std::map<std::string, std::vector<SemLS>> to_detection_set(const AnnotationFile& file) {
  std::map<std::string, std::vector<SemLS>> out;
  for (const auto& img : file) {
    auto& v = out[img.image_id];
    for (auto& s : img.lines()) v.push_back(s);
  }
  return out;
}

// -----------------------------------------------------------------------------
// Dataset statistics
// -----------------------------------------------------------------------------

struct DatasetStats {
  std::vector<std::string> names;
  std::vector<std::size_t> per_category;
  std::size_t total = 0;
  std::size_t images = 0;
  double labels_per_image = 0.0;
};

inline DatasetStats dataset_stats(const AnnotationFile& file, const CategoryRegistry& registry) {
  if (file.empty()) throw ValidationError("annotation file holds no image");
  DatasetStats st;
  st.names = registry.names();
  st.per_category.assign(registry.size(), 0);
  for (const auto& img : file) {
    for (const auto& s : img.segments) {
      ++st.per_category.at(static_cast<std::size_t>(s.line.category));
      ++st.total;
    }
  }
  st.images = file.size();
  st.labels_per_image = static_cast<double>(st.total) / static_cast<double>(st.images);
  return st;
}

// -----------------------------------------------------------------------------
// Calibration, poses, triplets, transforms
// -----------------------------------------------------------------------------

inline constexpr double kCalibrationOrthonormalTolerance = 1e-6;

inline std::map<std::string, CameraView> load_calibration(std::istream& in) {
  std::map<std::string, CameraView> out;
  detail::for_each_record(in, [&](const detail::Json& j, std::size_t line) {
    CameraView v;
    const std::string id = detail::string(j, "image_id", line);
    v.fx = detail::number(j, "fx", line);
    v.fy = detail::number(j, "fy", line);
    v.cx = detail::number(j, "cx", line);
    v.cy = detail::number(j, "cy", line);
    const auto r = detail::number_array<9>(j, "R", line);
    const auto t = detail::number_array<3>(j, "t", line);
    v.R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
    v.t << t[0], t[1], t[2];
    try {
      validate(v, kCalibrationOrthonormalTolerance);
    } catch (const ValidationError& e) {
      detail::fail_at(line, id + ": " + e.what());
    }
    if (!out.emplace(id, v).second) detail::fail_at(line, "duplicate image_id '" + id + "'");
  });
  return out;
}

inline std::map<std::string, std::array<double, 3>> load_positions(std::istream& in) {
  std::map<std::string, std::array<double, 3>> out;
  detail::for_each_record(in, [&](const detail::Json& j, std::size_t line) {
    const std::string id = detail::string(j, "image_id", line);
    auto it = j.find("position");
    if (it == j.end() || !it->is_array() || (it->size() != 2 && it->size() != 3)) {
      detail::fail_at(line, "field 'position' must hold 2 or 3 numbers");
    }
    std::array<double, 3> p{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_number()) detail::fail_at(line, "field 'position' holds a non-number");
      p[i] = (*it)[i].get<double>();
    }
    if (!out.emplace(id, p).second) detail::fail_at(line, "duplicate image_id '" + id + "'");
  });
  return out;
}

struct TripletSpec {
  std::string left, pre, right;
};

inline std::vector<TripletSpec> load_triplets(std::istream& in) {
  std::vector<TripletSpec> out;
  detail::for_each_record(in, [&](const detail::Json& j, std::size_t line) {
    out.push_back({detail::string(j, "left", line), detail::string(j, "pre", line),
                   detail::string(j, "right", line)});
  });
  return out;
}

/// Records {"image_id"?: str, "matrix": [a, b, c, d, e, f]}. A record without
/// image_id is stored under the empty key and applies to every image.
inline std::map<std::string, AffineTransform> load_transforms(std::istream& in) {
  std::map<std::string, AffineTransform> out;
  detail::for_each_record(in, [&](const detail::Json& j, std::size_t line) {
    const std::string id = j.contains("image_id") ? detail::string(j, "image_id", line) : "";
    AffineTransform t{detail::number_array<6>(j, "matrix", line)};
    if (t.determinant() == 0.0) detail::fail_at(line, "transform is not invertible");
    if (!out.emplace(id, t).second) detail::fail_at(line, "duplicate image_id '" + id + "'");
  });
  return out;
}

// -----------------------------------------------------------------------------
// PGM (binary P5, 8-bit)
// -----------------------------------------------------------------------------

namespace detail {

inline std::size_t pgm_header_value(std::istream& in) {
  // Skips whitespace and '#' comments, then reads a decimal number.
  int c = in.peek();
  while (c != EOF) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
    c = in.peek();
  }
  std::size_t v = 0;
  bool any = false;
  while ((c = in.peek()) != EOF && std::isdigit(c)) {
    v = v * 10 + static_cast<std::size_t>(in.get() - '0');
    any = true;
  }
  if (!any) throw ValidationError("malformed PGM header");
  return v;
}

}  // namespace detail

inline GrayImage read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw ValidationError("not a binary PGM (P5)");
  const std::size_t w = detail::pgm_header_value(in);
  const std::size_t h = detail::pgm_header_value(in);
  const std::size_t maxval = detail::pgm_header_value(in);
  if (w == 0 || h == 0) throw ValidationError("PGM has zero size");
  if (maxval == 0 || maxval > 255) throw ValidationError("only 8-bit PGM is supported");
  if (!std::isspace(in.get())) throw ValidationError("malformed PGM header");
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(w * h));
  if (in.gcount() != static_cast<std::streamsize>(w * h)) {
    throw ValidationError("PGM pixel data is truncated");
  }
  return img;
}

inline GrayImage read_pgm(const std::string& path) {
  auto in = detail::open_input(path);
  return read_pgm(in);
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace semls
