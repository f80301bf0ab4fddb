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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sentry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kDefaultWidth = 640;
inline constexpr int kDefaultHeight = 480;
inline constexpr double kDefaultFovDeg = 60.0;
inline constexpr double kDefaultBaseline = 0.072;

// Camera frame: x right, y down, z forward. Pixel origin is the top-left
// corner of the image, u grows rightward and v downward.

/// Pinhole intrinsics with Brown radial (k1, k2) and tangential (p1, p2)
/// distortion. Skew is always zero.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  int width = 0;
  int height = 0;

  /// Square pixels, principal point at the image center, horizontal field
  /// of view `hfov_deg`, no distortion.
  static CameraIntrinsics from_fov(int width, int height, double hfov_deg);

  /// Throws PreconditionError if any invariant is broken.
  void validate() const;

  bool has_distortion() const { return k1 != 0.0 || k2 != 0.0 || p1 != 0.0 || p2 != 0.0; }
  CameraIntrinsics without_distortion() const;
  Mat3 matrix() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// 640x480 with a 60 degree horizontal field of view (fx = fy ~ 554.2563).
CameraIntrinsics default_intrinsics();

/// Rigid world->camera transform: x_cam = rotation * x_world + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Pose inverse() const;
  /// Throws PreconditionError unless rotation is orthonormal with det +1.
  void validate(double tol = 1e-9) const;
};

/// Two-camera geometry. x_right = relative_rotation * x_left + relative_translation.
struct StereoRig {
  CameraIntrinsics left;
  CameraIntrinsics right;
  Mat3 relative_rotation = Mat3::Identity();
  Vec3 relative_translation = Vec3(-kDefaultBaseline, 0.0, 0.0);

  double baseline() const { return relative_translation.norm(); }
  void validate() const;

  /// Identical cameras, parallel axes, right camera `baseline` meters to the right.
  static StereoRig parallel(const CameraIntrinsics& intr, double baseline = kDefaultBaseline);
};

/// Row-major 8-bit image, 1 (gray) or 3 (RGB) interleaved channels.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, std::uint8_t fill = 0);

  std::size_t index(int u, int v, int c = 0) const {
    return (static_cast<std::size_t>(v) * width + u) * channels + c;
  }
  std::uint8_t& at(int u, int v, int c = 0) { return pixels[index(u, v, c)]; }
  std::uint8_t at(int u, int v, int c = 0) const { return pixels[index(u, v, c)]; }
  std::span<const std::uint8_t> row(int v) const {
    return {pixels.data() + index(0, v), static_cast<std::size_t>(width) * channels};
  }
  bool empty() const { return pixels.empty(); }

  bool operator==(const ImageBuffer&) const = default;
};

/// Luma conversion (Rec. 601 weights, rounded). Gray input is returned as is.
ImageBuffer to_gray(const ImageBuffer& img);

/// Pixel coordinates, or nullopt if the point is behind the camera
/// (z <= 1e-6) or lands outside [0,width) x [0,height).
std::optional<Vec2> project_point(const Vec3& p, const CameraIntrinsics& intr);

/// Same projection without the image-bounds test. Requires p.z() > 0.
Vec2 project_unbounded(const Vec3& p, const CameraIntrinsics& intr);

Vec2 distort_normalized(const Vec2& xy, const CameraIntrinsics& intr);

/// Inverse of distort_normalized. Throws ModelError when the iteration does
/// not converge within 20 steps.
Vec2 undistort_normalized(const Vec2& xy_distorted, const CameraIntrinsics& intr);

/// Unit-length viewing ray through pixel (u, v), camera frame.
Vec3 pixel_ray(double u, double v, const CameraIntrinsics& intr);

/// Closest rotation in the Frobenius sense (SVD, U*V^T with det fixed to +1).
Mat3 nearest_rotation(const Mat3& m);

Mat3 rotation_from_axis_angle(const Vec3& axis_angle);
Vec3 axis_angle_from_rotation(const Mat3& r);

}  // namespace sentry
