// Copyright 2026 The Sentry Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <cmath>
#include <random>

#include <doctest.h>

#include "sentry/camera_model.hpp"
#include "sentry/errors.hpp"

using namespace sentry;

namespace {

// Brown model written out longhand, kept apart from the library code.
Vec2 brown(double x, double y, double k1, double k2, double p1, double p2) {
  const double r2 = x * x + y * y;
  const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
  return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
          y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

double jacobian_det(const Vec2& p, const CameraIntrinsics& c) {
  const double h = 1e-6;
  const Vec2 dx = (brown(p.x() + h, p.y(), c.k1, c.k2, c.p1, c.p2) - brown(p.x() - h, p.y(), c.k1, c.k2, c.p1, c.p2)) / (2 * h);
  const Vec2 dy = (brown(p.x(), p.y() + h, c.k1, c.k2, c.p1, c.p2) - brown(p.x(), p.y() - h, c.k1, c.k2, c.p1, c.p2)) / (2 * h);
  return dx.x() * dy.y() - dx.y() * dy.x();
}

CameraIntrinsics with_distortion(double k1, double k2, double p1, double p2) {
  CameraIntrinsics c = default_intrinsics();
  c.k1 = k1;
  c.k2 = k2;
  c.p1 = p1;
  c.p2 = p2;
  return c;
}

}  // namespace

TEST_CASE("default intrinsics follow the 60 degree field of view") {
  const auto c = default_intrinsics();
  CHECK(std::abs(c.fx - 554.2563) < 1e-3);
  CHECK(c.fy == c.fx);
  CHECK(c.cx == 320.0);
  CHECK(c.cy == 240.0);
  CHECK(c.width == 640);
  CHECK(c.height == 480);
  CHECK_FALSE(c.has_distortion());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("intrinsics validation rejects broken invariants") {
  auto c = default_intrinsics();
  c.fx = 0.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = default_intrinsics();
  c.cx = 640.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = default_intrinsics();
  c.cy = -1.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("project_point examples") {
  const auto c = default_intrinsics();
  auto a = project_point({0, 0, 1}, c);
  REQUIRE(a);
  CHECK(a->x() == doctest::Approx(320.0));
  CHECK(a->y() == doctest::Approx(240.0));

  auto b = project_point({0.072, 0, 1}, c);
  REQUIRE(b);
  CHECK(b->x() == doctest::Approx(359.90645060638695).epsilon(1e-12));
  CHECK(std::abs(b->x() - 359.91) < 0.005);
  CHECK(b->y() == doctest::Approx(240.0));

  CHECK_FALSE(project_point({0, 0, -1}, c));
  CHECK_FALSE(project_point({0, 0, 1e-7}, c));
  CHECK_FALSE(project_point({10, 0, 1}, c));
}

TEST_CASE("distort_normalized examples") {
  const auto c = with_distortion(-0.2, 0.0, 0.0, 0.0);
  const Vec2 d = distort_normalized({0.1, 0.0}, c);
  CHECK(d.x() == doctest::Approx(0.0998).epsilon(1e-12));
  CHECK(d.y() == 0.0);
  CHECK(distort_normalized({0, 0}, with_distortion(0.3, -0.1, 0.01, 0.02)) == Vec2(0, 0));
  const Vec2 same = distort_normalized({0.31, -0.22}, default_intrinsics());
  CHECK(same == Vec2(0.31, -0.22));
}

TEST_CASE("distort_normalized matches the longhand Brown model") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xy(-0.6, 0.6), k1(-0.5, 0.5), k2(-0.2, 0.2), p(-0.01, 0.01);
  for (int i = 0; i < 200; ++i) {
    const auto c = with_distortion(k1(rng), k2(rng), p(rng), p(rng));
    const double x = xy(rng), y = xy(rng);
    const Vec2 lib = distort_normalized({x, y}, c);
    const Vec2 ref = brown(x, y, c.k1, c.k2, c.p1, c.p2);
    CHECK((lib - ref).norm() < 1e-15);
  }
}

TEST_CASE("undistort_normalized examples") {
  const auto c = with_distortion(-0.2, 0.05, 0.0, 0.0);
  CHECK(undistort_normalized({0, 0}, c).norm() == 0.0);
  const Vec2 d = distort_normalized({0.1, -0.05}, c);
  const Vec2 u = undistort_normalized(d, c);
  CHECK(std::abs(u.x() - 0.1) < 1e-9);
  CHECK(std::abs(u.y() + 0.05) < 1e-9);
  CHECK(undistort_normalized({0.4, -0.3}, default_intrinsics()) == Vec2(0.4, -0.3));
}

TEST_CASE("undistortion rejects inputs outside the invertible region") {
  // Strong barrel distortion folds over beyond r ~ 1.3; far points have no preimage.
  const auto c = with_distortion(-0.5, 0.0, 0.0, 0.0);
  CHECK_THROWS_AS(undistort_normalized({5.0, 5.0}, c), ModelError);
}

TEST_CASE("property: distortion round trip within 1e-9") {
  // Samples whose ray from the image center crosses a fold of the lens model
  // have two preimages; those are outside the invertible region and only the
  // forward identity distort(undistort(d)) = d is required of them.
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> xy(-0.6, 0.6), k1(-0.5, 0.5), k2(-0.2, 0.2), p(-0.01, 0.01);
  double worst = 0.0;
  double worst_forward = 0.0;
  int folded = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto c = with_distortion(k1(rng), k2(rng), p(rng), p(rng));
    const Vec2 pt(xy(rng), xy(rng));
    const Vec2 d = distort_normalized(pt, c);
    bool invertible = true;
    for (int s = 1; s <= 64 && invertible; ++s) invertible = jacobian_det(pt * (s / 64.0), c) > 0.0;
    if (!invertible) {
      ++folded;
      try {
        worst_forward = std::max(worst_forward, (distort_normalized(undistort_normalized(d, c), c) - d).norm());
      } catch (const ModelError&) {
      }
      continue;
    }
    const Vec2 back = undistort_normalized(d, c);
    worst = std::max(worst, (back - pt).cwiseAbs().maxCoeff());
    worst_forward = std::max(worst_forward, (distort_normalized(back, c) - d).norm());
  }
  CHECK(worst < 1e-9);
  CHECK(worst_forward < 1e-9);
  CHECK(folded < 100);
  MESSAGE("folded samples skipped: " << folded);
}

TEST_CASE("property: round trip holds with the defaults in use") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xy(-0.6, 0.6);
  const auto c = with_distortion(-0.2, 0.05, 0.0, 0.0);
  for (int i = 0; i < 5000; ++i) {
    const Vec2 pt(xy(rng), xy(rng));
    CHECK((undistort_normalized(distort_normalized(pt, c), c) - pt).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("pixel_ray examples") {
  const auto c = default_intrinsics();
  const Vec3 center = pixel_ray(320, 240, c);
  CHECK((center - Vec3(0, 0, 1)).norm() < 1e-15);
  const Vec3 diag = pixel_ray(874.2562584220408, 240, c);
  CHECK(diag.x() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(std::abs(diag.y()) < 1e-15);
  CHECK(diag.z() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(diag.norm() == doctest::Approx(1.0));
}

TEST_CASE("property: projection round trip within 1e-6 px") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uu(0.0, 639.999), vv(0.0, 479.999);
  for (const auto& c : {default_intrinsics(), with_distortion(-0.2, 0.05, 0.001, -0.002)}) {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double u = uu(rng), v = vv(rng);
      const Vec3 ray = pixel_ray(u, v, c);
      for (double s : {0.5, 1.0, 10.0}) {
        const auto px = project_point(ray * s, c);
        REQUIRE(px);
        worst = std::max(worst, (*px - Vec2(u, v)).norm());
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("rotation helpers") {
  const Vec3 aa(0.1, -0.2, 0.3);
  const Mat3 r = rotation_from_axis_angle(aa);
  CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0));
  CHECK((axis_angle_from_rotation(r) - aa).norm() < 1e-12);

  Mat3 noisy = r;
  noisy(0, 1) += 1e-3;
  const Mat3 fixed = nearest_rotation(noisy);
  CHECK((fixed.transpose() * fixed - Mat3::Identity()).norm() < 1e-12);
  CHECK(fixed.determinant() == doctest::Approx(1.0));

  Pose p{r, Vec3(1, 2, 3)};
  CHECK_NOTHROW(p.validate());
  const Vec3 x(0.3, -0.7, 2.0);
  CHECK((p.inverse().apply(p.apply(x)) - x).norm() < 1e-12);
  p.rotation(0, 0) += 0.01;
  CHECK_THROWS_AS(p.validate(), PreconditionError);
}

TEST_CASE("stereo rig defaults") {
  const auto rig = StereoRig::parallel(default_intrinsics());
  CHECK(rig.baseline() == doctest::Approx(0.072));
  CHECK(rig.relative_translation.x() == doctest::Approx(-0.072));
  CHECK_NOTHROW(rig.validate());
  StereoRig bad = rig;
  bad.relative_translation.setZero();
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("image buffer layout and gray conversion") {
  ImageBuffer img(4, 3, 3, 7);
  CHECK(img.pixels.size() == 36u);
  img.at(1, 2, 0) = 255;
  CHECK(img.pixels[(2 * 4 + 1) * 3] == 255);
  ImageBuffer rgb(1, 1, 3);
  rgb.at(0, 0, 0) = 200;
  rgb.at(0, 0, 1) = 100;
  rgb.at(0, 0, 2) = 50;
  // 0.299*200 + 0.587*100 + 0.114*50 = 124.2
  CHECK(to_gray(rgb).at(0, 0) == 124);
  ImageBuffer gray(2, 2, 1, 9);
  CHECK(to_gray(gray) == gray);
}
