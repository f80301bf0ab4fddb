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
#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "sentry/config.hpp"
#include "sentry/errors.hpp"
#include "sentry/simworld.hpp"

using namespace sentry;

namespace {

SceneObject frontal_quad(double z, Texture tex, double side = 1.0, std::string label = "") {
  SceneObject o;
  o.label = std::move(label);
  o.shape = QuadShape{Vec3(0, 0, z), Vec3(side, 0, 0), Vec3(0, side, 0)};
  o.texture = tex;
  return o;
}

double median_valid(const DisparityMap& d) {
  std::vector<float> v;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (d.valid[i]) v.push_back(d.values[i]);
  }
  REQUIRE(!v.empty());
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("camera poses place the optical centers about the pivot") {
  const StereoRig rig = StereoRig::parallel(default_intrinsics());
  const CameraPoses p = camera_poses(rig, {});
  CHECK((p.left.inverse().translation - Vec3(-0.036, 0, 0)).norm() < 1e-12);
  CHECK((p.right.inverse().translation - Vec3(0.036, 0, 0)).norm() < 1e-12);
  const CameraPoses yawed = camera_poses(rig, {90, 0, 0});
  // A quarter turn right moves the left camera toward the front.
  CHECK((yawed.left.inverse().translation - Vec3(0, 0, 0.036)).norm() < 1e-12);
}

TEST_CASE("frontal quad at 1 m has exact ground-truth depth") {
  Scene scene;
  scene.objects.push_back(frontal_quad(1.0, CheckerTexture{0.1}));
  const StereoRig rig = StereoRig::parallel(default_intrinsics());
  const StereoFrame f = render_stereo(scene, rig, {}, 0.0);
  REQUIRE(f.gt_depth_left.is_valid(320, 240));
  CHECK(f.gt_depth_left.at(320, 240) == 1.0);
  CHECK(f.left.width == 640);
  CHECK(f.left.channels == 3);
  CHECK_FALSE(f.gt_depth_left.is_valid(0, 0));
  CHECK(f.left.at(2, 2) == static_cast<std::uint8_t>(std::lround(0.1 * 255)));
}

TEST_CASE("sphere on the left optical axis") {
  Scene scene;
  SceneObject s;
  s.shape = SphereShape{Vec3(-0.036, 0, 2.0), 0.1};
  scene.objects.push_back(s);
  const StereoFrame f = render_stereo(scene, StereoRig::parallel(default_intrinsics()), {}, 0.0);
  REQUIRE(f.gt_depth_left.is_valid(320, 240));
  CHECK(f.gt_depth_left.at(320, 240) == doctest::Approx(1.9).epsilon(1e-9));
}

TEST_CASE("ground-truth depth matches analytic plane depth everywhere") {
  Scene scene;
  scene.objects.push_back(frontal_quad(3.0, NoiseTexture{}, 10.0));
  const StereoFrame f = render_stereo(scene, StereoRig::parallel(default_intrinsics()), {}, 0.0);
  for (int v = 0; v < 480; v += 7) {
    for (int u = 0; u < 640; u += 7) {
      REQUIRE(f.gt_depth_left.is_valid(u, v));
      CHECK(f.gt_depth_left.at(u, v) == doctest::Approx(3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("rendered 1 m quad closes the loop through rectification and matching") {
  Scene scene;
  scene.objects.push_back(frontal_quad(1.0, NoiseTexture{3, 0.01}));
  const StereoRig rig = StereoRig::parallel(default_intrinsics());
  const StereoFrame f = render_stereo(scene, rig, {}, 0.0);
  const StereoPipeline pipe(rig);
  const auto out = pipe.process(f.left, f.right);
  const double d = median_valid(out.disparity);
  CHECK(std::abs(d - 39.91) <= 1.0);
  const DepthMap& z = out.depth;
  const auto center = region_distance(z, {280, 200, 360, 280});
  REQUIRE(center);
  CHECK(std::abs(*center - 1.0) <= 0.03);
}

TEST_CASE("rendering is deterministic") {
  const Scene scene = default_scene();
  const StereoRig rig = StereoRig::parallel(default_intrinsics());
  const StereoRenderer r(rig);
  const StereoFrame a = r.render(scene, {5, -3, 2});
  const StereoFrame b = r.render(scene, {5, -3, 2});
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
  CHECK(a.gt_depth_left.values == b.gt_depth_left.values);
  CHECK(a.gt_detections == b.gt_detections);
}

TEST_CASE("ground-truth detections") {
  Scene scene;
  scene.objects.push_back(frontal_quad(2.0, CheckerTexture{}, 0.5, "person"));
  const StereoRenderer r(StereoRig::parallel(default_intrinsics()));
  const auto dets = r.ground_truth(scene, {});
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].label == "person");
  CHECK(dets[0].confidence == 1.0);
  REQUIRE(dets[0].distance_m);
  CHECK(*dets[0].distance_m == doctest::Approx(2.0));
  // Projected corners: u = 320 + f (x + 0.036) / 2, v = 240 + f y / 2.
  const double f = default_intrinsics().fx;
  CHECK(dets[0].bbox.u_min == doctest::Approx(320 + f * (-0.25 + 0.036) / 2).epsilon(2e-3));
  CHECK(dets[0].bbox.u_max == doctest::Approx(320 + f * (0.25 + 0.036) / 2).epsilon(2e-3));
  CHECK(dets[0].bbox.v_min == doctest::Approx(240 - f * 0.25 / 2).epsilon(2e-3));
  CHECK(r.render(scene, {}).gt_detections == dets);

  // Mostly hidden behind a nearer unlabeled occluder: dropped.
  scene.objects.push_back(frontal_quad(1.0, CheckerTexture{}, 0.4));
  CHECK(r.ground_truth(scene, {}).empty());

  // Turned away from the object: not in view.
  Scene alone;
  alone.objects.push_back(frontal_quad(2.0, CheckerTexture{}, 0.5, "person"));
  CHECK(r.ground_truth(alone, {90, 0, 0}).empty());
}

TEST_CASE("scene stepping") {
  Scene scene = default_scene();
  CHECK(step_scene(scene, 0.0) == scene);
  const Scene later = step_scene(scene, 0.5);
  CHECK(later.time == doctest::Approx(0.5));
  CHECK_FALSE(later == scene);

  SceneObject orb;
  orb.label = "person";
  orb.shape = SphereShape{Vec3(0, 0, 2), 0.1};
  orb.trajectory = OrbitTrajectory{Vec3::Zero(), 2.0, 20.0, 0.0, 0.0, 0.0};
  Scene s;
  s.objects.push_back(orb);
  const Scene s1 = step_scene(s, 1.5);
  const Vec3 c = s1.objects[0].center();
  CHECK(std::atan2(c.x(), c.z()) * 180.0 / M_PI == doctest::Approx(30.0));
  CHECK(std::hypot(c.x(), c.z()) == doctest::Approx(2.0));

  // Bounce between the arc limits.
  std::get<OrbitTrajectory>(s.objects[0].trajectory).arc_min_deg = -10;
  std::get<OrbitTrajectory>(s.objects[0].trajectory).arc_max_deg = 10;
  for (int i = 0; i < 500; ++i) {
    s = step_scene(s, 0.02);
    const Vec3 p = s.objects[0].center();
    const double bearing = std::atan2(p.x(), p.z()) * 180.0 / M_PI;
    CHECK(bearing >= -10.0 - 1e-9);
    CHECK(bearing <= 10.0 + 1e-9);
  }

  SceneObject walker;
  walker.shape = SphereShape{Vec3(0, 0, 3), 0.1};
  walker.trajectory = WaypointTrajectory{{Vec3(0, 0, 3), Vec3(1, 0, 3)}, 0.5, false, 0.0};
  Scene w;
  w.objects.push_back(walker);
  CHECK((step_scene(w, 1.0).objects[0].center() - Vec3(0.5, 0, 3)).norm() < 1e-12);
  CHECK((step_scene(w, 10.0).objects[0].center() - Vec3(1, 0, 3)).norm() < 1e-12);
}

TEST_CASE("default scene contents") {
  const Scene s = default_scene();
  int people = 0;
  for (const auto& o : s.objects) {
    CHECK_NOTHROW(o.validate());
    if (o.label == "person") {
      ++people;
      CHECK(o.center().norm() == doctest::Approx(2.0));
    }
  }
  CHECK(people == 1);
}

TEST_CASE("scene JSON round-trip and errors") {
  const Scene s = step_scene(default_scene(), 0.3);
  const Scene back = scene_from_json(scene_to_json(s));
  CHECK(back == s);
  CHECK_THROWS_AS(scene_from_json("{"), ParseError);
  CHECK_THROWS_AS(scene_from_json(R"({"objects":[{"shape":{"type":"cone"}}]})"), PreconditionError);
  CHECK_THROWS_AS(scene_from_json(R"({"objects":[{"shape":{"type":"sphere","center":[0,0,1],"radius":-1}}]})"),
                  PreconditionError);
}

TEST_CASE("low-light degradation is deterministic and darkens") {
  ImageBuffer a(64, 64, 3, 200);
  ImageBuffer b = a;
  degrade_low_light(a, 0.3, 4.0, 9);
  degrade_low_light(b, 0.3, 4.0, 9);
  CHECK(a == b);
  double mean = 0;
  for (auto p : a.pixels) mean += p;
  mean /= static_cast<double>(a.pixels.size());
  CHECK(mean == doctest::Approx(60.0).epsilon(0.05));
}
