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
#include "sentry/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "sentry/errors.hpp"

namespace sentry {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Similarity taking a point set to zero centroid and mean distance sqrt(2).
Mat3 hartley_normalizer(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw DegenerateInputError("homography: all points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return t;
}

bool collinear(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double hi = es.eigenvalues()(1);
  return !(hi > 0.0) || es.eigenvalues()(0) <= 1e-12 * hi;
}

Vec2 apply_h(const Mat3& h, const Vec2& p) {
  const Vec3 q = h * Vec3(p.x(), p.y(), 1.0);
  return q.head<2>() / q.z();
}

// Row vector v_ij of the absolute-conic constraint for homography columns i, j.
Eigen::Matrix<double, 1, 6> conic_row(const Mat3& h, int i, int j) {
  Eigen::Matrix<double, 1, 6> v;
  v << h(0, i) * h(0, j), h(0, i) * h(1, j) + h(1, i) * h(0, j), h(1, i) * h(1, j),
      h(2, i) * h(0, j) + h(0, i) * h(2, j), h(2, i) * h(1, j) + h(1, i) * h(2, j), h(2, i) * h(2, j);
  return v;
}

// Parameter layout for refinement.
constexpr int kIntrinsicParams = 8;
constexpr int kPoseParams = 6;

VectorXd pack(const CameraIntrinsics& in, const std::vector<Pose>& poses) {
  VectorXd p(kIntrinsicParams + kPoseParams * static_cast<int>(poses.size()));
  p.head<kIntrinsicParams>() << in.fx, in.fy, in.cx, in.cy, in.k1, in.k2, in.p1, in.p2;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const int o = kIntrinsicParams + kPoseParams * static_cast<int>(i);
    p.segment<3>(o) = axis_angle_from_rotation(poses[i].rotation);
    p.segment<3>(o + 3) = poses[i].translation;
  }
  return p;
}

CameraIntrinsics unpack_intrinsics(const VectorXd& p, const CameraIntrinsics& shape) {
  CameraIntrinsics in = shape;
  in.fx = p(0);
  in.fy = p(1);
  in.cx = p(2);
  in.cy = p(3);
  in.k1 = p(4);
  in.k2 = p(5);
  in.p1 = p(6);
  in.p2 = p(7);
  return in;
}

Pose unpack_pose(const VectorXd& p, std::size_t view) {
  const int o = kIntrinsicParams + kPoseParams * static_cast<int>(view);
  return Pose{rotation_from_axis_angle(p.segment<3>(o)), p.segment<3>(o + 3)};
}

void view_residuals(const CameraIntrinsics& in, const Pose& pose, const CorrespondenceSet& view,
                    double* out) {
  for (std::size_t k = 0; k < view.board_points.size(); ++k) {
    const Vec3 xc = pose.apply(Vec3(view.board_points[k].x(), view.board_points[k].y(), 0.0));
    Vec2 uv;
    if (xc.z() > 0.0) {
      uv = project_unbounded(xc, in);
    } else {
      uv.setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    out[2 * k] = uv.x() - view.image_points[k].x();
    out[2 * k + 1] = uv.y() - view.image_points[k].y();
  }
}

struct Problem {
  const CameraIntrinsics& shape;
  const std::vector<CorrespondenceSet>& views;
  std::vector<int> offsets;  // residual offset per view
  int residual_count = 0;

  Problem(const CameraIntrinsics& s, const std::vector<CorrespondenceSet>& v) : shape(s), views(v) {
    for (const auto& view : views) {
      offsets.push_back(residual_count);
      residual_count += 2 * static_cast<int>(view.board_points.size());
    }
  }

  VectorXd residuals(const VectorXd& p) const {
    VectorXd r(residual_count);
    const CameraIntrinsics in = unpack_intrinsics(p, shape);
    for (std::size_t i = 0; i < views.size(); ++i) {
      view_residuals(in, unpack_pose(p, i), views[i], r.data() + offsets[i]);
    }
    return r;
  }

  // Central differences. Pose parameters only touch their own view's rows.
  MatrixXd jacobian(const VectorXd& p) const {
    MatrixXd j = MatrixXd::Zero(residual_count, p.size());
    for (int c = 0; c < kIntrinsicParams; ++c) {
      const double h = 1e-6 * std::max(1.0, std::abs(p(c)));
      VectorXd hi = p;
      VectorXd lo = p;
      hi(c) += h;
      lo(c) -= h;
      j.col(c) = (residuals(hi) - residuals(lo)) / (2.0 * h);
    }
    const CameraIntrinsics in = unpack_intrinsics(p, shape);
    for (std::size_t i = 0; i < views.size(); ++i) {
      const int rows = 2 * static_cast<int>(views[i].board_points.size());
      VectorXd rhi(rows);
      VectorXd rlo(rows);
      for (int k = 0; k < kPoseParams; ++k) {
        const int c = kIntrinsicParams + kPoseParams * static_cast<int>(i) + k;
        const double h = 1e-7 * std::max(1.0, std::abs(p(c)));
        VectorXd hi = p;
        VectorXd lo = p;
        hi(c) += h;
        lo(c) -= h;
        view_residuals(in, unpack_pose(hi, i), views[i], rhi.data());
        view_residuals(in, unpack_pose(lo, i), views[i], rlo.data());
        j.block(offsets[i], c, rows, 1) = (rhi - rlo) / (2.0 * h);
      }
    }
    return j;
  }
};

double rms_of(const VectorXd& r) {
  return r.size() == 0 ? 0.0 : std::sqrt(r.squaredNorm() / (r.size() / 2));
}

void check_views(const std::vector<CorrespondenceSet>& views) {
  for (const auto& v : views) {
    if (v.board_points.size() != v.image_points.size()) {
      throw PreconditionError("view '" + v.view_id + "': board and image point counts differ");
    }
  }
}

}  // namespace

Vec2 Homography::map(const Vec2& p) const { return apply_h(matrix, p); }

std::vector<Vec2> ChessboardSpec::corners() const {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) pts.emplace_back(c * square, r * square);
  }
  return pts;
}

Homography estimate_homography(const CorrespondenceSet& c) {
  const std::size_t n = c.board_points.size();
  if (n != c.image_points.size()) throw PreconditionError("homography: point counts differ");
  if (n < 4) throw DegenerateInputError("homography needs at least 4 correspondences, got " + std::to_string(n));
  if (collinear(c.board_points)) throw DegenerateInputError("homography: board points are collinear");

  const Mat3 tb = hartley_normalizer(c.board_points);
  const Mat3 ti = hartley_normalizer(c.image_points);
  MatrixXd a(2 * n, 9);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 b = apply_h(tb, c.board_points[k]);
    const Vec2 m = apply_h(ti, c.image_points[k]);
    a.row(2 * k) << -b.x(), -b.y(), -1.0, 0.0, 0.0, 0.0, m.x() * b.x(), m.x() * b.y(), m.x();
    a.row(2 * k + 1) << 0.0, 0.0, 0.0, -b.x(), -b.y(), -1.0, m.y() * b.x(), m.y() * b.y(), m.y();
  }
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  // A second null direction means the solution is not unique.
  if (sv.size() >= 8 && sv(7) <= 1e-10 * sv(0)) throw DegenerateInputError("homography: degenerate configuration");
  const VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Homography out;
  out.matrix = ti.inverse() * hn * tb;
  if (std::abs(out.matrix(2, 2)) > 1e-15) out.matrix /= out.matrix(2, 2);
  return out;
}

CameraIntrinsics intrinsics_from_homographies(const std::vector<Homography>& hs, int width, int height) {
  if (hs.size() < 3) {
    throw EstimationError("intrinsics need at least 3 views, got " + std::to_string(hs.size()));
  }
  // Work in a pixel frame scaled to unit size for conditioning; K = N^-1 K'.
  const double s = std::max(width, height);
  Mat3 norm;
  norm << 1.0 / s, 0.0, -0.5 * width / s, 0.0, 1.0 / s, -0.5 * height / s, 0.0, 0.0, 1.0;

  MatrixXd v(2 * hs.size() + 1, 6);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    Mat3 h = norm * hs[i].matrix;
    h /= h.col(0).norm();
    v.row(2 * i) = conic_row(h, 0, 1);
    v.row(2 * i + 1) = conic_row(h, 0, 0) - conic_row(h, 1, 1);
  }
  // Zero skew: B12 = 0.
  v.row(2 * hs.size()) << 0.0, 1.0, 0.0, 0.0, 0.0, 0.0;

  Eigen::JacobiSVD<MatrixXd> svd(v, Eigen::ComputeFullV);
  VectorXd b = svd.matrixV().col(5);
  if (b(0) < 0.0) b = -b;
  const double b11 = b(0), b12 = b(1), b22 = b(2), b13 = b(3), b23 = b(4), b33 = b(5);
  const double den = b11 * b22 - b12 * b12;
  if (!(b11 > 0.0) || !(den > 0.0)) throw EstimationError("absolute conic estimate is not positive definite");
  const double v0 = (b12 * b13 - b11 * b23) / den;
  const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
  if (!(lambda / b11 > 0.0)) throw EstimationError("absolute conic estimate is not positive definite");
  const double alpha = std::sqrt(lambda / b11);
  const double beta = std::sqrt(lambda * b11 / den);
  const double u0 = -b13 * alpha * alpha / lambda;

  Mat3 kn;
  kn << alpha, 0.0, u0, 0.0, beta, v0, 0.0, 0.0, 1.0;
  const Mat3 k = norm.inverse() * kn;

  CameraIntrinsics in;
  in.fx = k(0, 0) / k(2, 2);
  in.fy = k(1, 1) / k(2, 2);
  in.cx = k(0, 2) / k(2, 2);
  in.cy = k(1, 2) / k(2, 2);
  in.width = width;
  in.height = height;
  if (!std::isfinite(in.fx) || !std::isfinite(in.fy) || !std::isfinite(in.cx) || !std::isfinite(in.cy)) {
    throw EstimationError("closed-form intrinsics are not finite");
  }
  return in;
}

Pose extrinsics_from_homography(const Homography& h, const CameraIntrinsics& intr) {
  const Mat3 k = intr.matrix();
  if (!(std::abs(k.determinant()) > 1e-12)) throw EstimationError("camera matrix is singular");
  const Mat3 kinv = k.inverse();
  const Vec3 a1 = kinv * h.matrix.col(0);
  const Vec3 a2 = kinv * h.matrix.col(1);
  const Vec3 a3 = kinv * h.matrix.col(2);
  double lambda = 1.0 / a1.norm();
  if (lambda * a3.z() < 0.0) lambda = -lambda;  // board in front of the camera

  Mat3 r;
  r.col(0) = lambda * a1;
  r.col(1) = lambda * a2;
  r.col(2) = r.col(0).cross(r.col(1));
  return Pose{nearest_rotation(r), lambda * a3};
}

RadialDistortion estimate_distortion(const std::vector<PosedView>& views, const CameraIntrinsics& intr) {
  if (views.size() < 2) {
    throw EstimationError("distortion needs at least 2 views, got " + std::to_string(views.size()));
  }
  std::size_t n = 0;
  for (const auto& v : views) n += v.points.board_points.size();
  MatrixXd a(2 * n, 2);
  VectorXd rhs(2 * n);
  std::size_t row = 0;
  for (const auto& v : views) {
    for (std::size_t k = 0; k < v.points.board_points.size(); ++k) {
      const Vec2& b = v.points.board_points[k];
      const Vec3 xc = v.pose.apply(Vec3(b.x(), b.y(), 0.0));
      const double x = xc.x() / xc.z();
      const double y = xc.y() / xc.z();
      const double r2 = x * x + y * y;
      const double u = intr.fx * x + intr.cx;
      const double vv = intr.fy * y + intr.cy;
      a.row(row) << (u - intr.cx) * r2, (u - intr.cx) * r2 * r2;
      rhs(row++) = v.points.image_points[k].x() - u;
      a.row(row) << (vv - intr.cy) * r2, (vv - intr.cy) * r2 * r2;
      rhs(row++) = v.points.image_points[k].y() - vv;
    }
  }
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-9 * sv(0)) throw EstimationError("distortion system is rank deficient");
  const VectorXd k = svd.solve(rhs);
  return {k(0), k(1)};
}

double reprojection_rms(const CameraIntrinsics& intr, const std::vector<Pose>& poses,
                        const std::vector<CorrespondenceSet>& views) {
  if (poses.size() != views.size()) throw PreconditionError("one pose per view required");
  check_views(views);
  const Problem problem(intr, views);
  return rms_of(problem.residuals(pack(intr, poses)));
}

CalibrationResult refine_calibration(const CameraIntrinsics& initial, const std::vector<Pose>& initial_poses,
                                     const std::vector<CorrespondenceSet>& views, const RefineOptions& options) {
  if (views.size() < 3) throw PreconditionError("refinement needs at least 3 views");
  if (initial_poses.size() != views.size()) throw PreconditionError("one initial pose per view required");
  check_views(views);

  const Problem problem(initial, views);
  VectorXd params = pack(initial, initial_poses);
  if (!params.allFinite()) throw NumericalError("initial parameters are not finite", 0);
  VectorXd r = problem.residuals(params);
  if (!r.allFinite()) throw NumericalError("non-finite reprojection residuals", 0);

  CalibrationResult result;
  result.initial_rms = rms_of(r);
  double cost = r.squaredNorm();
  double lambda = options.initial_damping;
  int it = 0;
  while (it < options.max_iterations && cost > 0.0) {
    ++it;
    const MatrixXd j = problem.jacobian(params);
    if (!j.allFinite()) throw NumericalError("non-finite Jacobian", it);
    const MatrixXd jtj = j.transpose() * j;
    const VectorXd g = j.transpose() * r;
    bool accepted = false;
    double new_cost = cost;
    while (lambda < 1e16) {
      MatrixXd damped = jtj;
      damped.diagonal().array() += lambda;
      const VectorXd step = damped.ldlt().solve(-g);
      if (!step.allFinite()) throw NumericalError("non-finite update step", it);
      const VectorXd trial = params + step;
      const VectorXd trial_r = problem.residuals(trial);
      const double trial_cost = trial_r.allFinite() ? trial_r.squaredNorm() : std::numeric_limits<double>::infinity();
      if (trial_cost < cost) {
        params = trial;
        r = trial_r;
        new_cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    const double old_rms = std::sqrt(cost);
    const double new_rms = std::sqrt(new_cost);
    cost = new_cost;
    if ((old_rms - new_rms) < options.relative_tolerance * old_rms) break;
  }

  result.intrinsics = unpack_intrinsics(params, initial);
  result.poses.reserve(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) result.poses.push_back(unpack_pose(params, i));
  result.rms = rms_of(r);
  result.iterations = it;
  return result;
}

CalibrationResult calibrate_camera(const std::vector<CorrespondenceSet>& views, int width, int height,
                                   const RefineOptions& options) {
  if (views.size() < 3) {
    throw EstimationError("calibration needs >= 3 views, got " + std::to_string(views.size()));
  }
  check_views(views);
  std::vector<Homography> hs;
  hs.reserve(views.size());
  for (const auto& v : views) {
    try {
      hs.push_back(estimate_homography(v));
    } catch (const Error& e) {
      throw EstimationError("view '" + v.view_id + "': " + e.what());
    }
  }
  CameraIntrinsics intr = intrinsics_from_homographies(hs, width, height);
  std::vector<PosedView> posed;
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < views.size(); ++i) {
    poses.push_back(extrinsics_from_homography(hs[i], intr));
    posed.push_back({views[i], poses.back()});
  }
  const RadialDistortion dist = estimate_distortion(posed, intr);
  intr.k1 = dist.k1;
  intr.k2 = dist.k2;
  return refine_calibration(intr, poses, views, options);
}

RelativePose stereo_extrinsics(const std::vector<Pose>& poses_left, const std::vector<Pose>& poses_right) {
  if (poses_left.empty() || poses_right.empty()) throw PreconditionError("stereo extrinsics need at least one view");
  if (poses_left.size() != poses_right.size()) throw PreconditionError("left and right pose lists differ in length");
  Mat3 rot_sum = Mat3::Zero();
  Vec3 t_sum = Vec3::Zero();
  std::vector<Mat3> rots;
  for (std::size_t i = 0; i < poses_left.size(); ++i) {
    const Mat3 r = poses_right[i].rotation * poses_left[i].rotation.transpose();
    rot_sum += r;
    t_sum += poses_right[i].translation - r * poses_left[i].translation;
  }
  RelativePose out;
  out.rotation = nearest_rotation(rot_sum);
  out.translation = t_sum / static_cast<double>(poses_left.size());
  return out;
}

StereoCalibration calibrate_stereo(const std::vector<CorrespondenceSet>& left,
                                   const std::vector<CorrespondenceSet>& right, int width, int height,
                                   const RefineOptions& options) {
  if (left.size() != right.size()) throw PreconditionError("left and right view counts differ");
  StereoCalibration out;
  out.left = calibrate_camera(left, width, height, options);
  out.right = calibrate_camera(right, width, height, options);
  const RelativePose rel = stereo_extrinsics(out.left.poses, out.right.poses);
  out.rig.left = out.left.intrinsics;
  out.rig.right = out.right.intrinsics;
  out.rig.relative_rotation = rel.rotation;
  out.rig.relative_translation = rel.translation;
  return out;
}

bool RemapField::valid(int u, int v) const {
  const std::size_t i = index(u, v);
  return std::isfinite(src_u[i]) && std::isfinite(src_v[i]);
}

namespace {

// Radial distortion stays one-to-one while d(r * radial(r))/dr > 0.
bool inside_monotonic_region(const Vec2& xy, const CameraIntrinsics& in) {
  const double r2 = xy.squaredNorm();
  return 1.0 + 3.0 * in.k1 * r2 + 5.0 * in.k2 * r2 * r2 > 0.0;
}

RemapField build_remap(const CameraIntrinsics& original, const Mat3& rot, const CameraIntrinsics& rect) {
  RemapField f;
  f.width = rect.width;
  f.height = rect.height;
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
  f.src_u.assign(n, std::numeric_limits<float>::quiet_NaN());
  f.src_v.assign(n, std::numeric_limits<float>::quiet_NaN());
  const Mat3 back = rot.transpose();
  for (int v = 0; v < f.height; ++v) {
    for (int u = 0; u < f.width; ++u) {
      const Vec3 x = back * Vec3((u - rect.cx) / rect.fx, (v - rect.cy) / rect.fy, 1.0);
      if (!(x.z() > 1e-6)) continue;
      const Vec2 xy(x.x() / x.z(), x.y() / x.z());
      if (!inside_monotonic_region(xy, original)) continue;
      const Vec2 d = distort_normalized(xy, original);
      const double su = original.fx * d.x() + original.cx;
      const double sv = original.fy * d.y() + original.cy;
      if (su < 0.0 || sv < 0.0 || su > original.width - 1 || sv > original.height - 1) continue;
      f.src_u[f.index(u, v)] = static_cast<float>(su);
      f.src_v[f.index(u, v)] = static_cast<float>(sv);
    }
  }
  return f;
}

}  // namespace

RectifyMaps compute_rectification(const StereoRig& rig) {
  if (!(rig.baseline() > 0.0)) throw PreconditionError("rectification needs a positive baseline");
  rig.validate();

  // x_r = R x_l + T with R = H * H. Rotating the left camera by H and the
  // right by H^T leaves the two frames parallel, offset by t = H^T T.
  const Mat3 half = rotation_from_axis_angle(0.5 * axis_angle_from_rotation(rig.relative_rotation));
  const Vec3 t = half.transpose() * rig.relative_translation;

  // Rows of w: new x along -t (right camera sits at +x), y close to old y.
  const Vec3 e1 = -t.normalized();
  Vec3 e2 = Vec3::UnitZ().cross(e1);
  if (e2.norm() < 1e-9) throw PreconditionError("baseline is parallel to the optical axis");
  e2.normalize();
  const Vec3 e3 = e1.cross(e2);
  Mat3 w;
  w.row(0) = e1.transpose();
  w.row(1) = e2.transpose();
  w.row(2) = e3.transpose();

  RectifyMaps maps;
  maps.rot_left = w * half;
  maps.rot_right = w * half.transpose();
  CameraIntrinsics in;
  in.fx = 0.5 * (rig.left.fx + rig.right.fx);
  in.fy = 0.5 * (rig.left.fy + rig.right.fy);
  in.cx = 0.5 * (rig.left.cx + rig.right.cx);
  in.cy = 0.5 * (rig.left.cy + rig.right.cy);
  in.width = rig.left.width;
  in.height = rig.left.height;
  maps.new_intrinsics = in;
  maps.remap_left = build_remap(rig.left, maps.rot_left, in);
  maps.remap_right = build_remap(rig.right, maps.rot_right, in);
  maps.rectified_baseline = t.norm();
  return maps;
}

Vec2 rectify_point(const Vec2& uv, const CameraIntrinsics& original, const Mat3& rot,
                   const CameraIntrinsics& new_intr) {
  const Vec3 ray = rot * pixel_ray(uv.x(), uv.y(), original);
  return project_unbounded(ray, new_intr);
}

}  // namespace sentry
