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
#include "sentry/camera_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "sentry/errors.hpp"

namespace sentry {

namespace {

constexpr double kMinDepth = 1e-6;
constexpr int kUndistortIterations = 20;
constexpr double kUndistortStep = 1e-12;

// Jacobian of distort_normalized with respect to (x, y).
Eigen::Matrix2d distortion_jacobian(const Vec2& xy, const CameraIntrinsics& in) {
  const double x = xy.x();
  const double y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + in.k1 * r2 + in.k2 * r2 * r2;
  const double dradial_dr2 = in.k1 + 2.0 * in.k2 * r2;
  Eigen::Matrix2d j;
  j(0, 0) = radial + 2.0 * x * x * dradial_dr2 + 2.0 * in.p1 * y + 6.0 * in.p2 * x;
  j(0, 1) = 2.0 * x * y * dradial_dr2 + 2.0 * in.p1 * x + 2.0 * in.p2 * y;
  j(1, 0) = 2.0 * x * y * dradial_dr2 + 2.0 * in.p1 * x + 2.0 * in.p2 * y;
  j(1, 1) = radial + 2.0 * y * y * dradial_dr2 + 6.0 * in.p1 * y + 2.0 * in.p2 * x;
  return j;
}

}  // namespace

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double hfov_deg) {
  CameraIntrinsics in;
  const double half = hfov_deg * std::numbers::pi / 360.0;
  in.fx = (width / 2.0) / std::tan(half);
  in.fy = in.fx;
  in.cx = width / 2.0;
  in.cy = height / 2.0;
  in.width = width;
  in.height = height;
  return in;
}

void CameraIntrinsics::validate() const {
  auto fail = [](const std::string& what) { throw PreconditionError("invalid intrinsics: " + what); };
  if (width <= 0 || height <= 0) fail("non-positive image size");
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) fail("focal length must be positive");
  if (!(cx >= 0.0 && cx < width)) fail("cx outside [0, width)");
  if (!(cy >= 0.0 && cy < height)) fail("cy outside [0, height)");
  for (double c : {k1, k2, p1, p2}) {
    if (!std::isfinite(c)) fail("non-finite distortion coefficient");
  }
}

CameraIntrinsics CameraIntrinsics::without_distortion() const {
  CameraIntrinsics in = *this;
  in.k1 = in.k2 = in.p1 = in.p2 = 0.0;
  return in;
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics default_intrinsics() {
  return CameraIntrinsics::from_fov(kDefaultWidth, kDefaultHeight, kDefaultFovDeg);
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

void Pose::validate(double tol) const {
  if (((rotation.transpose() * rotation) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
    throw PreconditionError("pose rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > tol) {
    throw PreconditionError("pose rotation determinant is not +1");
  }
  if (!translation.allFinite()) throw PreconditionError("pose translation is not finite");
}

void StereoRig::validate() const {
  left.validate();
  right.validate();
  Pose{relative_rotation, relative_translation}.validate(1e-6);
  if (!(baseline() > 0.0)) throw PreconditionError("stereo rig baseline must be positive");
}

StereoRig StereoRig::parallel(const CameraIntrinsics& intr, double baseline) {
  StereoRig rig;
  rig.left = intr;
  rig.right = intr;
  rig.relative_rotation = Mat3::Identity();
  rig.relative_translation = Vec3(-baseline, 0.0, 0.0);
  return rig;
}

ImageBuffer::ImageBuffer(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c) {
  if (w < 0 || h < 0 || (c != 1 && c != 3)) {
    throw PreconditionError("image must have non-negative size and 1 or 3 channels");
  }
  pixels.assign(static_cast<std::size_t>(w) * h * c, fill);
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  ImageBuffer out(img.width, img.height, 1);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  const std::uint8_t* src = img.pixels.data();
  for (std::size_t i = 0; i < n; ++i, src += 3) {
    // 299/587/114 in 1/1000 units, rounded.
    out.pixels[i] = static_cast<std::uint8_t>((299 * src[0] + 587 * src[1] + 114 * src[2] + 500) / 1000);
  }
  return out;
}

Vec2 distort_normalized(const Vec2& xy, const CameraIntrinsics& in) {
  const double x = xy.x();
  const double y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + in.k1 * r2 + in.k2 * r2 * r2;
  return {x * radial + 2.0 * in.p1 * x * y + in.p2 * (r2 + 2.0 * x * x),
          y * radial + in.p1 * (r2 + 2.0 * y * y) + 2.0 * in.p2 * x * y};
}

namespace {

double radial_factor(const Vec2& x, const CameraIntrinsics& in) {
  const double r2 = x.squaredNorm();
  return 1.0 + in.k1 * r2 + in.k2 * r2 * r2;
}

}  // namespace

Vec2 undistort_normalized(const Vec2& target, const CameraIntrinsics& in) {
  if (!in.has_distortion()) return target;
  // Newton's method on distort(x) = target, seeded at the distorted point.
  Vec2 x = target;
  for (int it = 0; it < kUndistortIterations; ++it) {
    const Vec2 residual = distort_normalized(x, in) - target;
    const Eigen::Matrix2d j = distortion_jacobian(x, in);
    const double det = j.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) break;
    const Vec2 step = j.inverse() * residual;
    x -= step;
    if (!x.allFinite()) break;
    if (step.norm() < kUndistortStep) break;
  }
  // Only preimages on the unfolded sheet of the lens model are accepted.
  if (x.allFinite() && (distort_normalized(x, in) - target).norm() < 1e-12 &&
      radial_factor(x, in) > 0.0 && distortion_jacobian(x, in).determinant() > 0.0) {
    return x;
  }
  throw ModelError("undistortion did not converge: point outside the invertible lens region");
}

Vec2 project_unbounded(const Vec3& p, const CameraIntrinsics& in) {
  const Vec2 d = distort_normalized(Vec2(p.x() / p.z(), p.y() / p.z()), in);
  return {in.fx * d.x() + in.cx, in.fy * d.y() + in.cy};
}

std::optional<Vec2> project_point(const Vec3& p, const CameraIntrinsics& in) {
  if (!(p.z() > kMinDepth)) return std::nullopt;
  const Vec2 uv = project_unbounded(p, in);
  if (!(uv.x() >= 0.0 && uv.x() < in.width && uv.y() >= 0.0 && uv.y() < in.height)) {
    return std::nullopt;
  }
  return uv;
}

Vec3 pixel_ray(double u, double v, const CameraIntrinsics& in) {
  const Vec2 xy = undistort_normalized(Vec2((u - in.cx) / in.fx, (v - in.cy) / in.fy), in);
  return Vec3(xy.x(), xy.y(), 1.0).normalized();
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 rotation_from_axis_angle(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Vec3 axis_angle_from_rotation(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

}  // namespace sentry
