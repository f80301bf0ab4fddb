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

#include <string>
#include <vector>

#include "sentry/camera_model.hpp"

namespace sentry {

/// Board corners (meters, board plane Z = 0) paired with their image pixels.
struct CorrespondenceSet {
  std::string view_id;
  std::vector<Vec2> board_points;
  std::vector<Vec2> image_points;
};

/// Board-plane to image-plane homography, scaled so that H(2,2) = 1 when it
/// is nonzero.
struct Homography {
  Mat3 matrix = Mat3::Identity();

  Vec2 map(const Vec2& p) const;
};

struct ChessboardSpec {
  int cols = 9;  // inner corners along X
  int rows = 6;  // inner corners along Y
  double square = 0.025;

  std::vector<Vec2> corners() const;
};

/// Normalized DLT. Throws DegenerateInputError for fewer than 4 points or
/// collinear board points.
Homography estimate_homography(const CorrespondenceSet& c);

/// Closed-form pinhole intrinsics (zero skew, zero distortion) from at least
/// three board homographies.
CameraIntrinsics intrinsics_from_homographies(const std::vector<Homography>& hs, int width, int height);

/// Board pose for one view; the rotation is projected onto SO(3).
Pose extrinsics_from_homography(const Homography& h, const CameraIntrinsics& intr);

struct RadialDistortion {
  double k1 = 0.0;
  double k2 = 0.0;
};

struct PosedView {
  CorrespondenceSet points;
  Pose pose;
};

/// Linear least-squares (k1, k2) with tangential terms held at zero.
RadialDistortion estimate_distortion(const std::vector<PosedView>& views, const CameraIntrinsics& intr);

struct RefineOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-10;
  double initial_damping = 1e-3;
};

struct CalibrationResult {
  CameraIntrinsics intrinsics;
  std::vector<Pose> poses;
  double initial_rms = 0.0;
  double rms = 0.0;
  int iterations = 0;
};

/// RMS pixel reprojection error of `views` under the given model.
double reprojection_rms(const CameraIntrinsics& intr, const std::vector<Pose>& poses,
                        const std::vector<CorrespondenceSet>& views);

/// Levenberg-damped Gauss-Newton over fx, fy, cx, cy, k1, k2, p1, p2 and one
/// axis-angle pose per view. The returned RMS never exceeds the initial RMS.
CalibrationResult refine_calibration(const CameraIntrinsics& initial, const std::vector<Pose>& initial_poses,
                                     const std::vector<CorrespondenceSet>& views,
                                     const RefineOptions& options = {});

/// Homographies, closed form, per-view extrinsics, radial distortion, then
/// refinement.
CalibrationResult calibrate_camera(const std::vector<CorrespondenceSet>& views, int width, int height,
                                   const RefineOptions& options = {});

struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Left-to-right transform averaged over views (chordal mean of rotations).
RelativePose stereo_extrinsics(const std::vector<Pose>& poses_left, const std::vector<Pose>& poses_right);

struct StereoCalibration {
  StereoRig rig;
  CalibrationResult left;
  CalibrationResult right;
};

/// Views are paired by index; both lists must describe the same board poses.
StereoCalibration calibrate_stereo(const std::vector<CorrespondenceSet>& left,
                                   const std::vector<CorrespondenceSet>& right, int width, int height,
                                   const RefineOptions& options = {});

/// Per-destination-pixel source coordinates. NaN marks destinations with no
/// valid source.
struct RemapField {
  int width = 0;
  int height = 0;
  std::vector<float> src_u;
  std::vector<float> src_v;

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  bool valid(int u, int v) const;
};

struct RectifyMaps {
  Mat3 rot_left = Mat3::Identity();
  Mat3 rot_right = Mat3::Identity();
  CameraIntrinsics new_intrinsics;
  RemapField remap_left;
  RemapField remap_right;
  double rectified_baseline = 0.0;
};

/// Splits the relative rotation in half between the cameras and aligns the
/// rectified x axis with the baseline.
RectifyMaps compute_rectification(const StereoRig& rig);

/// Forward map from an original (distorted) pixel to rectified pixel
/// coordinates. `rot` and `new_intr` come from RectifyMaps.
Vec2 rectify_point(const Vec2& uv, const CameraIntrinsics& original, const Mat3& rot,
                   const CameraIntrinsics& new_intr);

}  // namespace sentry
