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

#include "sentry/calibration.hpp"
#include "sentry/errors.hpp"
#include "sentry/simworld.hpp"

using namespace sentry;

namespace {

constexpr double kDeg = M_PI / 180.0;

Mat3 rot(double ax, double ay, double az) {
  Vec3 w(ax, ay, az);
  if (w.norm() == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
}

// Pinhole + Brown projection spelled out independently of the library.
Vec2 project_longhand(const CameraIntrinsics& c, const Vec3& p) {
  const double x = p.x() / p.z(), y = p.y() / p.z();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + c.k1 * r2 + c.k2 * r2 * r2;
  const double xd = x * radial + 2 * c.p1 * x * y + c.p2 * (r2 + 2 * x * x);
  const double yd = y * radial + c.p1 * (r2 + 2 * y * y) + 2 * c.p2 * x * y;
  return {c.fx * xd + c.cx, c.fy * yd + c.cy};
}

struct Truth {
  std::vector<CorrespondenceSet> views;
  std::vector<Pose> poses;
};

// Board of 9x6 inner corners, 25 mm; poses keep the board center near the axis.
Truth make_views(const CameraIntrinsics& c, int count, double noise_px = 0.0, std::uint64_t seed = 1) {
  const std::vector<Vec3> tilts = {{0.45, 0.0, 0.05},   {0.0, 0.45, -0.05}, {-0.35, 0.25, 0.1},
                                   {0.3, -0.35, -0.1},  {0.2, 0.3, 0.2},    {-0.4, -0.2, 0.0},
                                   {0.1, -0.45, 0.15},  {-0.25, 0.4, -0.2}, {0.4, 0.2, -0.15},
                                   {-0.15, -0.35, 0.25}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_px);
  Truth t;
  for (int i = 0; i < count; ++i) {
    const Vec3& a = tilts[static_cast<std::size_t>(i) % tilts.size()];
    Pose p;
    p.rotation = rot(a.x(), a.y(), a.z());
    p.translation = Vec3(0.01 * (i % 3 - 1), -0.01 * (i % 2), 0.55 + 0.02 * i) - p.rotation * Vec3(0.1, 0.0625, 0.0);
    CorrespondenceSet v;
    v.view_id = "v" + std::to_string(i);
    for (int r = 0; r < 6; ++r) {
      for (int col = 0; col < 9; ++col) {
        const Vec2 b(col * 0.025, r * 0.025);
        Vec2 px = project_longhand(c, p.apply(Vec3(b.x(), b.y(), 0.0)));
        if (noise_px > 0.0) px += Vec2(noise(rng), noise(rng));
        v.board_points.push_back(b);
        v.image_points.push_back(px);
      }
    }
    t.views.push_back(v);
    t.poses.push_back(p);
  }
  return t;
}

CameraIntrinsics make_intr(double fx, double fy, double cx, double cy, double k1 = 0, double k2 = 0) {
  CameraIntrinsics c;
  c.fx = fx;
  c.fy = fy;
  c.cx = cx;
  c.cy = cy;
  c.k1 = k1;
  c.k2 = k2;
  c.width = 640;
  c.height = 480;
  return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Mat3 normalized(const Mat3& h) { return h / h(2, 2); }

}  // namespace

TEST_CASE("homography of the unit square onto itself is the identity") {
  CorrespondenceSet c;
  c.board_points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  c.image_points = c.board_points;
  const Homography h = estimate_homography(c);
  CHECK((h.matrix - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("homography equals s*K*[r1 r2 t] for a projected board") {
  const auto intr = default_intrinsics();
  const Truth t = make_views(intr, 3);
  for (std::size_t i = 0; i < t.views.size(); ++i) {
    Mat3 expected;
    expected.col(0) = intr.matrix() * t.poses[i].rotation.col(0);
    expected.col(1) = intr.matrix() * t.poses[i].rotation.col(1);
    expected.col(2) = intr.matrix() * t.poses[i].translation;
    const Mat3 h = normalized(estimate_homography(t.views[i]).matrix);
    const Mat3 e = normalized(expected);
    CHECK((h - e).norm() / e.norm() < 1e-6);
    for (std::size_t k = 0; k < t.views[i].board_points.size(); ++k) {
      const Vec2 m = estimate_homography(t.views[i]).map(t.views[i].board_points[k]);
      CHECK((m - t.views[i].image_points[k]).norm() < 1e-6);
    }
  }
}

TEST_CASE("homography degenerate inputs") {
  CorrespondenceSet three;
  three.board_points = {{0, 0}, {1, 0}, {0, 1}};
  three.image_points = three.board_points;
  CHECK_THROWS_AS(estimate_homography(three), DegenerateInputError);

  CorrespondenceSet line;
  for (int i = 0; i < 6; ++i) {
    line.board_points.push_back({0.1 * i, 0.05 * i});
    line.image_points.push_back({10.0 * i, 3.0 * i + 1});
  }
  CHECK_THROWS_AS(estimate_homography(line), DegenerateInputError);
}

TEST_CASE("property: homography commutes with a similarity of the image") {
  const auto intr = default_intrinsics();
  const Truth t = make_views(intr, 4);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI), sc(0.3, 3.0), off(-500, 500);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = ang(rng), s = sc(rng);
    Mat3 sim;
    sim << s * std::cos(a), -s * std::sin(a), off(rng), s * std::sin(a), s * std::cos(a), off(rng), 0, 0, 1;
    const auto& view = t.views[static_cast<std::size_t>(trial) % t.views.size()];
    CorrespondenceSet moved = view;
    for (auto& p : moved.image_points) p = (sim * p.homogeneous()).hnormalized();
    const Mat3 h0 = normalized(sim * estimate_homography(view).matrix);
    const Mat3 h1 = normalized(estimate_homography(moved).matrix);
    CHECK((h0 - h1).norm() / h0.norm() < 1e-9);
  }
}

TEST_CASE("closed-form intrinsics from five noiseless views") {
  for (const auto& truth : {make_intr(554.2562584220408, 554.2562584220408, 320, 240), make_intr(600, 580, 310, 250)}) {
    const Truth t = make_views(truth, 5);
    std::vector<Homography> hs;
    for (const auto& v : t.views) hs.push_back(estimate_homography(v));
    const CameraIntrinsics got = intrinsics_from_homographies(hs, 640, 480);
    CHECK(rel(got.fx, truth.fx) < 1e-3);
    CHECK(rel(got.fy, truth.fy) < 1e-3);
    CHECK(rel(got.cx, truth.cx) < 1e-3);
    CHECK(rel(got.cy, truth.cy) < 1e-3);
    CHECK(got.k1 == 0.0);
    CHECK(got.k2 == 0.0);
    CHECK(got.p1 == 0.0);
    CHECK(got.p2 == 0.0);
  }
}

TEST_CASE("closed-form intrinsics need three views") {
  const Truth t = make_views(default_intrinsics(), 2);
  std::vector<Homography> hs;
  for (const auto& v : t.views) hs.push_back(estimate_homography(v));
  CHECK_THROWS_AS(intrinsics_from_homographies(hs, 640, 480), EstimationError);
}

TEST_CASE("extrinsics from a homography") {
  const auto intr = default_intrinsics();
  SUBCASE("identity rotation at one meter") {
    Mat3 h;
    h.col(0) = intr.matrix() * Vec3::UnitX();
    h.col(1) = intr.matrix() * Vec3::UnitY();
    h.col(2) = intr.matrix() * Vec3(0, 0, 1);
    const Pose p = extrinsics_from_homography(Homography{h}, intr);
    CHECK((p.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((p.translation - Vec3(0, 0, 1)).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("30 degree tilt, negative overall scale") {
    const Mat3 r = rot(30 * kDeg, 0, 0);
    const Vec3 tr(0.05, -0.02, 0.8);
    Mat3 h;
    h.col(0) = intr.matrix() * r.col(0);
    h.col(1) = intr.matrix() * r.col(1);
    h.col(2) = intr.matrix() * tr;
    const Pose p = extrinsics_from_homography(Homography{-3.0 * h}, intr);
    CHECK((p.rotation - r).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((p.translation - tr).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("noiseless views reproject and stay orthonormal") {
    const Truth t = make_views(intr, 5);
    for (const auto& v : t.views) {
      const Pose p = extrinsics_from_homography(estimate_homography(v), intr);
      CHECK((p.rotation.transpose() * p.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(p.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
      for (std::size_t k = 0; k < v.board_points.size(); ++k) {
        const Vec2 px = project_longhand(intr, p.apply(Vec3(v.board_points[k].x(), v.board_points[k].y(), 0)));
        CHECK((px - v.image_points[k]).norm() < 1e-4);
      }
    }
  }
}

TEST_CASE("radial distortion by linear least squares") {
  const auto truth = make_intr(554.2562584220408, 554.2562584220408, 320, 240, -0.2, 0.05);
  const Truth t = make_views(truth, 5);
  std::vector<PosedView> pv;
  for (std::size_t i = 0; i < t.views.size(); ++i) pv.push_back({t.views[i], t.poses[i]});
  const RadialDistortion d = estimate_distortion(pv, truth.without_distortion());
  CHECK(std::abs(d.k1 + 0.2) < 1e-2);
  CHECK(std::abs(d.k2 - 0.05) < 1e-2);

  const auto clean = truth.without_distortion();
  const Truth z = make_views(clean, 5);
  std::vector<PosedView> pz;
  for (std::size_t i = 0; i < z.views.size(); ++i) pz.push_back({z.views[i], z.poses[i]});
  const RadialDistortion dz = estimate_distortion(pz, clean);
  CHECK(std::abs(dz.k1) < 1e-6);
  CHECK(std::abs(dz.k2) < 1e-6);

  CHECK_THROWS_AS(estimate_distortion({pz.front()}, clean), EstimationError);
}

TEST_CASE("refinement on noiseless data converges below 1e-6 px") {
  const auto truth = make_intr(554.2562584220408, 554.2562584220408, 320, 240, -0.2, 0.05);
  const Truth t = make_views(truth, 5);
  const CalibrationResult r = calibrate_camera(t.views, 640, 480);
  CHECK(r.rms < 1e-6);
  CHECK(r.rms <= r.initial_rms);
  CHECK(rel(r.intrinsics.fx, truth.fx) < 1e-3);
  CHECK(rel(r.intrinsics.fy, truth.fy) < 1e-3);
  CHECK(rel(r.intrinsics.cx, truth.cx) < 1e-3);
  CHECK(rel(r.intrinsics.cy, truth.cy) < 1e-3);
  CHECK(std::abs(r.intrinsics.k1 - truth.k1) < 1e-2);
  CHECK(std::abs(r.intrinsics.k2 - truth.k2) < 1e-2);
}

TEST_CASE("refinement with 0.2 px corner noise over 10 views") {
  const auto truth = make_intr(554.2562584220408, 554.2562584220408, 320, 240, -0.2, 0.05);
  const Truth t = make_views(truth, 10, 0.2, 42);
  const CalibrationResult r = calibrate_camera(t.views, 640, 480);
  CHECK(r.rms >= 0.1);
  CHECK(r.rms <= 0.4);
  CHECK(rel(r.intrinsics.fx, truth.fx) < 0.01);
  CHECK(r.rms <= r.initial_rms);
}

TEST_CASE("refinement started at the optimum is a fixed point") {
  const auto truth = make_intr(554.2562584220408, 554.2562584220408, 320, 240, -0.2, 0.05);
  const Truth t = make_views(truth, 5);
  const double start = reprojection_rms(truth, t.poses, t.views);
  const CalibrationResult r = refine_calibration(truth, t.poses, t.views);
  CHECK(std::abs(r.rms - start) < 1e-12);
  CHECK(r.iterations <= 2);
}

TEST_CASE("refinement preconditions and numerical failure") {
  const auto truth = default_intrinsics();
  const Truth t = make_views(truth, 3);
  const std::vector<CorrespondenceSet> two(t.views.begin(), t.views.begin() + 2);
  const std::vector<Pose> two_poses(t.poses.begin(), t.poses.begin() + 2);
  CHECK_THROWS_AS(refine_calibration(truth, two_poses, two), PreconditionError);
  auto bad = truth;
  bad.fx = std::nan("");
  CHECK_THROWS_AS(refine_calibration(bad, t.poses, t.views), NumericalError);
  try {
    calibrate_camera(two, 640, 480);
    FAIL("expected failure");
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("needs >= 3 views") != std::string::npos);
  }
}

TEST_CASE("stereo extrinsics") {
  const auto intr = default_intrinsics();
  SUBCASE("pure 72 mm translation over six views") {
    const Truth t = make_views(intr, 6);
    std::vector<Pose> right;
    for (const auto& p : t.poses) right.push_back({p.rotation, p.translation + Vec3(-0.072, 0, 0)});
    const RelativePose rp = stereo_extrinsics(t.poses, right);
    CHECK((rp.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((rp.translation - Vec3(-0.072, 0, 0)).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("single view passes through") {
    const Mat3 rr = rot(0.01, -0.02, 0.005);
    const Vec3 tt(-0.07, 0.001, 0.002);
    const Pose l{rot(0.3, 0.1, 0), Vec3(0.1, 0, 0.6)};
    const Pose r{rr * l.rotation, rr * l.translation + tt};
    const RelativePose rp = stereo_extrinsics({l}, {r});
    CHECK((rp.rotation - rr).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((rp.translation - tt).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("one degree vergence") {
    const Truth t = make_views(intr, 6);
    const Mat3 rr = rot(0, -1.0 * kDeg, 0);
    const Vec3 tt(-0.072, 0, 0);
    std::vector<Pose> right;
    for (const auto& p : t.poses) right.push_back({rr * p.rotation, rr * p.translation + tt});
    const RelativePose rp = stereo_extrinsics(t.poses, right);
    const double angle = Eigen::AngleAxisd(rp.rotation).angle() / kDeg;
    CHECK(std::abs(angle - 1.0) < 1e-4);
  }
  CHECK_THROWS_AS(stereo_extrinsics({}, {}), PreconditionError);
}

TEST_CASE("full stereo calibration from synthetic views") {
  const auto intr = make_intr(554.2562584220408, 554.2562584220408, 320, 240, -0.2, 0.05);
  StereoRig truth = StereoRig::parallel(intr);
  truth.relative_rotation = rot(0, -0.5 * kDeg, 0);
  const auto views = generate_chessboard_views(intr, truth, standard_board_poses(6));
  const StereoCalibration sc = calibrate_stereo(views.left, views.right, 640, 480);
  CHECK(sc.left.rms < 1e-6);
  CHECK(sc.right.rms < 1e-6);
  CHECK((sc.rig.relative_rotation - truth.relative_rotation).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((sc.rig.relative_translation - truth.relative_translation).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("synthetic chessboard views agree with the longhand projection") {
  const auto intr = make_intr(600, 580, 310, 250, -0.1, 0.02);
  const auto poses = standard_board_poses(5);
  const auto views = generate_chessboard_views(intr, std::nullopt, poses);
  REQUIRE(views.left.size() == 5);
  CHECK(views.right.empty());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& v = views.left[i];
    REQUIRE(v.board_points.size() == 54);
    for (std::size_t k = 0; k < v.board_points.size(); ++k) {
      const Vec2 px = project_longhand(intr, poses[i].apply(Vec3(v.board_points[k].x(), v.board_points[k].y(), 0)));
      CHECK((px - v.image_points[k]).norm() < 1e-9);
    }
  }
}

TEST_CASE("rectification of a parallel rig is the identity") {
  const auto rig = StereoRig::parallel(default_intrinsics());
  const RectifyMaps m = compute_rectification(rig);
  CHECK((m.rot_left - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((m.rot_right - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  double worst = 0.0;
  for (int v = 0; v < 480; ++v) {
    for (int u = 0; u < 640; ++u) {
      const std::size_t i = m.remap_left.index(u, v);
      REQUIRE(m.remap_left.valid(u, v));
      const double e[] = {std::abs(m.remap_left.src_u[i] - u), std::abs(m.remap_left.src_v[i] - v),
                          std::abs(m.remap_right.src_u[i] - u), std::abs(m.remap_right.src_v[i] - v)};
      for (double x : e) worst = std::max(worst, x);
    }
  }
  CHECK(worst < 1e-6);
  CHECK(m.rectified_baseline == doctest::Approx(0.072).epsilon(1e-12));
}

TEST_CASE("rectification aligns rows of a verged, distorted rig") {
  const auto intr = make_intr(554.2562584220408, 554.2562584220408, 320, 240, -0.1, 0.0);
  StereoRig rig = StereoRig::parallel(intr);
  rig.relative_rotation = rot(0, -1.0 * kDeg, 0);
  rig.relative_translation = Vec3(-0.072, 0.0005, 0.001);
  const RectifyMaps m = compute_rectification(rig);
  CHECK(std::abs(m.rectified_baseline - rig.relative_translation.norm()) < 1e-12);
  for (const Mat3& r : {m.rot_left, m.rot_right}) {
    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> xs(-1.5, 1.5), ys(-1.0, 1.0), zs(1.0, 6.0);
  int used = 0;
  double worst = 0.0;
  while (used < 500) {
    const Vec3 p(xs(rng), ys(rng), zs(rng));
    const Vec3 pr = rig.relative_rotation * p + rig.relative_translation;
    const auto l = project_point(p, rig.left);
    const auto r = project_point(pr, rig.right);
    if (!l || !r) continue;
    const Vec2 lr = rectify_point(*l, rig.left, m.rot_left, m.new_intrinsics);
    const Vec2 rr = rectify_point(*r, rig.right, m.rot_right, m.new_intrinsics);
    worst = std::max(worst, std::abs(lr.y() - rr.y()));
    ++used;
  }
  CHECK(worst < 0.05);

  StereoRig zero = rig;
  zero.relative_translation.setZero();
  CHECK_THROWS_AS(compute_rectification(zero), PreconditionError);
}
