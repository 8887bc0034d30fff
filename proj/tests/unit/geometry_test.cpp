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

#include <gtest/gtest.h>

#include "scenes.hpp"
#include "semls/geometry3d.hpp"

namespace semls {
namespace {

using testing::driving_camera;
using testing::seg;

TEST(Geometry, PlaneContainsCenterAndEndpoints) {
  const CameraView cam = driving_camera({1.0, -0.5, 2.0});
  const Vec3 a(3.0, 1.0, 20.0), b(-2.0, -1.5, 25.0);
  const Vec4 plane = backproject_plane(cam, make_segment(cam.project(a), cam.project(b)));
  auto residual = [&](const Vec3& X) { return plane.head<3>().dot(X) + plane(3); };
  EXPECT_NEAR(residual(cam.center()), 0.0, 1e-12);
  EXPECT_NEAR(residual(a), 0.0, 1e-9);
  EXPECT_NEAR(residual(b), 0.0, 1e-9);
}

TEST(Geometry, HorizontalSegmentThroughPrincipalPoint) {
  CameraView cam;
  cam.fx = cam.fy = 500;
  cam.cx = 320;
  cam.cy = 240;
  const Vec4 plane = backproject_plane(cam, seg(100, 240, 500, 240));
  EXPECT_NEAR(std::abs(plane(1)), 1.0, 1e-12);
  EXPECT_NEAR(plane(3), 0.0, 1e-12);
}

TEST(Geometry, TriangulationRecoversLine) {
  const CameraView v1 = driving_camera({0, 0, 0}), v2 = driving_camera({0, 0, -8});
  const Vec3 a(4.0, 1.6, 20.0), b(4.2, -1.5, 20.3);
  const Line3D L = triangulate_line(v1, make_segment(v1.project(a), v1.project(b)), v2,
                                    make_segment(v2.project(a), v2.project(b)));
  EXPECT_LT(L.distance_to(a), 1e-6);
  EXPECT_LT(L.distance_to(b), 1e-6);
  const double angle = std::asin(std::min(1.0, L.direction.cross((b - a).normalized()).norm()));
  EXPECT_LT(angle, 1e-8);
}

TEST(Geometry, DegenerateConfigurations) {
  const CameraView v = driving_camera({0, 0, 0});
  const SemLS s = make_segment(v.project(Vec3(1, 1, 10)), v.project(Vec3(2, -1, 12)));
  EXPECT_THROW(triangulate_line(v, s, v, s), DegenerateError);
  const CameraView w = driving_camera({0, 0, -8});
  const Vec3 p(2.0, 0.0, 20.0), q(2.0, 0.0, 30.0);
  EXPECT_THROW(triangulate_line(v, make_segment(v.project(p), v.project(q)), w,
                                make_segment(w.project(p), w.project(q))),
               DegenerateError);
}

TEST(Geometry, ProjectedLineInFrontoParallelPlane) {
  CameraView cam;
  cam.fx = cam.fy = 400;
  cam.cx = 320;
  cam.cy = 240;
  const double y0 = 1.5;
  const Vec3 l = project_line(cam, Line3D{Vec3(0, y0, 5), Vec3::UnitX()});
  EXPECT_NEAR(std::hypot(l.x(), l.y()), 1.0, 1e-12);
  EXPECT_NEAR(-l.z() / l.y(), cam.cy + cam.fy * y0 / 5.0, 1e-9);
}

TEST(Geometry, EndpointDistance) {
  const Vec3 x0(1, 0, 0);
  EXPECT_DOUBLE_EQ(endpoint_to_line_error(seg(3, 0, 3, 10), x0), 3.0);
  EXPECT_DOUBLE_EQ(endpoint_to_line_error(seg(3, 0, 3, 10), 7.0 * x0), 3.0);
  EXPECT_DOUBLE_EQ(endpoint_to_line_error(seg(0, 0, 0, 10), x0), 0.0);
}

TEST(Geometry, TripletErrors) {
  const auto clean = testing::standard_triplet_scene(3, 40, 0.0);
  EXPECT_LT(triplet_projection_error(clean.triplets).mean_error, 1e-6);
  const auto noisy = testing::standard_triplet_scene(3, 40, 1.0);
  const double e = triplet_projection_error(noisy.triplets).mean_error;
  EXPECT_GT(e, 0.1);
  EXPECT_LT(e, 5.0);
}

}  // namespace
}  // namespace semls
