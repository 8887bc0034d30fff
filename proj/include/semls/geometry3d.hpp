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

// Two-view line triangulation by plane intersection and the triplet
// line re-projection benchmark: triangulate a labeled segment from the left
// image and an earlier left image, project the 3D line into the right image,
// and measure the endpoint-to-line distance of the right-image label.
//
// Pinhole cameras without distortion; poses are world-to-camera.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semls/core.hpp"

namespace semls {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

struct CameraView {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  Mat3 R = Mat3::Identity();  // world -> camera
  Vec3 t = Vec3::Zero();

  Mat3 K() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }
  /// Camera center in world coordinates.
  Vec3 center() const { return -R.transpose() * t; }

  /// Homogeneous pixel of a world point.
  Vec3 project_h(const Vec3& X) const { return K() * (R * X + t); }

  Point project(const Vec3& X) const {
    const Vec3 p = project_h(X);
    return {p.x() / p.z(), p.y() / p.z()};
  }

  /// World-frame direction of the ray through pixel p.
  Vec3 ray(Point p) const {
    const Vec3 cam((p.x - cx) / fx, (p.y - cy) / fy, 1.0);
    return R.transpose() * cam;
  }
};

/// Checks orthonormality and det R = +1 within `tol`.
inline void validate(const CameraView& v, double tol = 1e-9) {
  if (!(v.fx > 0.0 && v.fy > 0.0)) throw ValidationError("focal lengths must be positive");
  const double ortho = (v.R.transpose() * v.R - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= tol)) throw ValidationError("rotation is not orthonormal");
  if (!(std::abs(v.R.determinant() - 1.0) <= tol)) {
    throw ValidationError("rotation determinant is not +1");
  }
}

struct Line3D {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit

  double distance_to(const Vec3& X) const { return (X - point).cross(direction).norm(); }
};

/// Plane (n, d) with n.X + d = 0, |n| = 1, through the camera center and the
/// image segment.
inline Vec4 backproject_plane(const CameraView& view, const SemLS& s) {
  const Vec3 n = view.ray(s.p1).cross(view.ray(s.p2));
  const double len = n.norm();
  if (!(len > 0.0)) throw DegenerateError("segment endpoints back-project to parallel rays");
  const Vec3 unit = n / len;
  Vec4 plane;
  plane << unit, -unit.dot(view.center());
  return plane;
}

inline constexpr double kParallelPlaneTolerance = 1e-8;

/// Intersection of the two back-projected planes. The returned point is the
/// one closest to the midpoint of the two camera centers.
inline Line3D triangulate_line(const CameraView& v1, const SemLS& s1, const CameraView& v2,
                               const SemLS& s2) {
  const Vec4 p1 = backproject_plane(v1, s1);
  const Vec4 p2 = backproject_plane(v2, s2);
  const Vec3 n1 = p1.head<3>(), n2 = p2.head<3>();
  const Vec3 dir = n1.cross(n2);
  if (dir.norm() < kParallelPlaneTolerance) {
    throw DegenerateError("back-projected planes are parallel (epipolar configuration)");
  }
  const Vec3 u = dir.normalized();
  const Vec3 mid = 0.5 * (v1.center() + v2.center());
  Mat3 A;
  A.row(0) = n1.transpose();
  A.row(1) = n2.transpose();
  A.row(2) = u.transpose();
  const Vec3 b(-p1(3), -p2(3), u.dot(mid));
  return Line3D{A.partialPivLu().solve(b), u};
}

/// Homogeneous image line (a, b, c) with a^2 + b^2 = 1.
inline Vec3 project_line(const CameraView& view, const Line3D& L) {
  const Vec3 xa = view.project_h(L.point);
  const Vec3 xb = view.project_h(L.point + L.direction);
  const Vec3 l = xa.cross(xb);
  const double ab = std::hypot(l.x(), l.y());
  if (!(ab > 1e-12 * xa.norm() * xb.norm())) {
    throw DegenerateError("3D line passes through the camera center");
  }
  return l / ab;
}

/// Mean perpendicular distance of the two endpoints to the line.
inline double endpoint_to_line_error(const SemLS& s, const Vec3& line) {
  const double ab = std::hypot(line.x(), line.y());
  if (!(ab > 0.0)) throw ValidationError("image line has zero normal");
  auto d = [&](Point p) { return std::abs(line.x() * p.x + line.y() * p.y + line.z()) / ab; };
  return 0.5 * (d(s.p1) + d(s.p2));
}

struct ViewLabel {
  CameraView view;
  SemLS segment;
};

/// One physical segment seen in the left image, an earlier left image
/// (`pre`) and the right image.
struct Triplet {
  ViewLabel left;
  ViewLabel pre;
  ViewLabel right;
  int track_id = 0;
  double baseline = 0.0;  // |center(left) - center(pre)|, meters
};

struct TripletErrorReport {
  double mean_error = 0.0;
  std::vector<std::optional<double>> per_triplet;  // empty for skipped ones
  std::size_t skipped = 0;
};

inline double triplet_error(const Triplet& t) {
  const Line3D L = triangulate_line(t.left.view, t.left.segment, t.pre.view, t.pre.segment);
  return endpoint_to_line_error(t.right.segment, project_line(t.right.view, L));
}

/// Mean right-image error over triplets; degenerate ones are skipped and
/// counted. Throws DegenerateError when nothing is left.
inline TripletErrorReport triplet_projection_error(std::span<const Triplet> triplets) {
  TripletErrorReport rep;
  double sum = 0.0;
  std::size_t n = 0;
  for (const Triplet& t : triplets) {
    try {
      const double e = triplet_error(t);
      rep.per_triplet.emplace_back(e);
      sum += e;
      ++n;
    } catch (const DegenerateError&) {
      rep.per_triplet.emplace_back(std::nullopt);
      ++rep.skipped;
    }
  }
  if (n == 0) throw DegenerateError("no valid triplet to evaluate");
  rep.mean_error = sum / static_cast<double>(n);
  return rep;
}

}  // namespace semls
