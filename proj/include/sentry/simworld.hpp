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
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <string>
#include <variant>
#include <vector>

#include "sentry/calibration.hpp"
#include "sentry/camera_model.hpp"
#include "sentry/detect.hpp"
#include "sentry/gimbal.hpp"
#include "sentry/stereo.hpp"

namespace sentry {

// World frame: origin at the gimbal pivot, axes matching the head (and left
// camera) at zero angles: x right, y down, z forward.

/// Planar rectangle: corners at center +- edge_u/2 +- edge_v/2.
struct QuadShape {
  Vec3 center = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();
  bool operator==(const QuadShape&) const = default;
};

struct SphereShape {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
  bool operator==(const SphereShape&) const = default;
};

using Shape = std::variant<QuadShape, SphereShape>;

struct CheckerTexture {
  double cell = 0.1;  // meters
  bool operator==(const CheckerTexture&) const = default;
};

/// Three-octave lattice value noise; `scale` is the coarsest cell in meters.
struct NoiseTexture {
  std::uint64_t seed = 1;
  double scale = 0.04;
  bool operator==(const NoiseTexture&) const = default;
};

using Texture = std::variant<NoiseTexture, CheckerTexture>;

/// Piecewise-linear motion through `points` at constant speed.
struct WaypointTrajectory {
  std::vector<Vec3> points;
  double speed = 1.0;  // m/s
  bool loop = false;
  double travelled = 0.0;  // meters along the path
  bool operator==(const WaypointTrajectory&) const = default;
};

/// Circular motion about the vertical axis through `pivot`. angle 0 is
/// straight ahead (+z), positive angles toward +x. When `arc_min_deg` <
/// `arc_max_deg` the motion bounces between the two bearings.
struct OrbitTrajectory {
  Vec3 pivot = Vec3::Zero();
  double radius = 2.0;
  double rate_deg_s = 20.0;
  double angle_deg = 0.0;
  double arc_min_deg = 0.0;
  double arc_max_deg = 0.0;
  bool operator==(const OrbitTrajectory&) const = default;
};

using Trajectory = std::variant<std::monostate, WaypointTrajectory, OrbitTrajectory>;

struct SceneObject {
  std::string label;  // empty for unlabeled scenery
  Shape shape;
  Texture texture;
  Vec3 color = Vec3::Ones();  // linear RGB in [0, 1]
  Trajectory trajectory;
  bool billboard = false;  // quads turn about the vertical to face the origin

  Vec3 center() const;
  void validate() const;
  bool operator==(const SceneObject&) const = default;
};

struct Scene {
  std::vector<SceneObject> objects;
  double time = 0.0;
  double background = 0.1;
  Vec3 light = Vec3(-0.3, -0.6, -1.0).normalized();  // direction toward the light

  bool operator==(const Scene&) const = default;
};

Scene scene_from_json(const std::string& text);
std::string scene_to_json(const Scene& scene);

/// Advance every trajectory by dt seconds. dt = 0 returns an identical scene.
Scene step_scene(const Scene& scene, double dt);

struct StereoFrame {
  ImageBuffer left;
  ImageBuffer right;
  DepthMap gt_depth_left;
  std::vector<Detection> gt_detections;
  double sim_time = 0.0;
  GimbalAngles gimbal_angles;
};

struct CameraPoses {
  Pose left;   // world -> left camera
  Pose right;  // world -> right camera
};

/// Head rotation composed with the two camera mounts; the pivot sits midway
/// between the optical centers.
CameraPoses camera_poses(const StereoRig& rig, const GimbalAngles& angles);

/// Ray caster with per-pixel viewing rays cached for the rig's lenses.
class StereoRenderer {
 public:
  explicit StereoRenderer(const StereoRig& rig);

  StereoFrame render(const Scene& scene, const GimbalAngles& angles) const;

  /// Left-camera ground-truth detections only; skips shading.
  std::vector<Detection> ground_truth(const Scene& scene, const GimbalAngles& angles) const;

  const StereoRig& rig() const { return rig_; }

 private:
  static constexpr int kTile = 16;

  struct RayField {
    std::vector<Vec3> rays;
    int tiles_u = 0, tiles_v = 0;
    std::vector<Vec3> tile_axis;        // unit mean ray per tile
    std::vector<double> tile_half_angle;  // max angle from the axis, radians
  };

  void render_camera(const Scene& scene, const Pose& world_to_cam, const RayField& field,
                     ImageBuffer& image, DepthMap* depth, std::vector<Detection>* detections) const;

  struct TextureRaster;
  using RasterKey = std::tuple<std::uint64_t, double, double, double>;
  std::shared_ptr<const TextureRaster> raster_for(const NoiseTexture& tex, double len_u, double len_v) const;

  StereoRig rig_;
  RayField rays_left_;
  RayField rays_right_;
  mutable std::mutex raster_mutex_;
  mutable std::map<RasterKey, std::shared_ptr<const TextureRaster>> rasters_;
};

/// Scene evaluated at time t (stepped forward from scene.time when later).
StereoFrame render_stereo(const Scene& scene, const StereoRig& rig, const GimbalAngles& angles, double t);

/// Darken and add gaussian noise (low-light emulation).
void degrade_low_light(ImageBuffer& img, double brightness, double noise_sigma, std::uint64_t seed);

struct ChessboardViews {
  std::vector<CorrespondenceSet> left;
  std::vector<CorrespondenceSet> right;
};

/// Exact corner projections through the (distorted) camera model. With a rig,
/// `poses` are board->left-camera and matched right views are emitted too.
ChessboardViews generate_chessboard_views(const CameraIntrinsics& intr, const std::optional<StereoRig>& rig,
                                          const std::vector<Pose>& poses, const ChessboardSpec& board = {});

/// `count` tilted board poses that keep a default board in view of a
/// 640x480, 60 degree camera (and its 72 mm stereo partner).
std::vector<Pose> standard_board_poses(int count);

}  // namespace sentry
