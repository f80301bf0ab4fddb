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
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sentry/calibration.hpp"
#include "sentry/config.hpp"
#include "sentry/errors.hpp"
#include "sentry/gimbal.hpp"
#include "sentry/pipeline.hpp"
#include "sentry/service.hpp"
#include "sentry/simworld.hpp"
#include "sentry/stereo.hpp"

namespace py = pybind11;
using namespace sentry;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::array_t<std::uint8_t> image_to_array(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{img.height, img.width};
  if (img.channels > 1) shape.push_back(img.channels);
  py::array_t<std::uint8_t> out(shape);
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

ImageBuffer array_to_image(const U8Array& a) {
  if (a.ndim() != 2 && !(a.ndim() == 3 && (a.shape(2) == 1 || a.shape(2) == 3))) {
    throw PreconditionError("image must be HxW or HxWx{1,3} uint8");
  }
  const int channels = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  ImageBuffer img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), channels);
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

template <typename T>
py::array_t<T> masked(const std::vector<T>& values, const std::vector<std::uint8_t>& valid, int w, int h, T invalid) {
  py::array_t<T> out({h, w});
  T* dst = out.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) dst[i] = valid[i] ? values[i] : invalid;
  return out;
}

py::array_t<float> disparity_array(const DisparityMap& d) {
  return masked(d.values, d.valid, d.width, d.height, std::numeric_limits<float>::quiet_NaN());
}

py::array_t<double> depth_array(const DepthMap& d) {
  return masked(d.values, d.valid, d.width, d.height, std::numeric_limits<double>::quiet_NaN());
}

py::dict detection_dict(const Detection& d) {
  py::dict out;
  out["label"] = d.label;
  out["confidence"] = d.confidence;
  out["bbox"] = py::make_tuple(d.bbox.u_min, d.bbox.v_min, d.bbox.u_max, d.bbox.v_max);
  out["distance_m"] = d.distance_m ? py::cast(*d.distance_m) : py::none();
  return out;
}

CorrespondenceSet correspondence_from(const py::handle& view, std::size_t index) {
  CorrespondenceSet c;
  c.view_id = "view" + std::to_string(index);
  const auto pair = view.cast<std::pair<Eigen::MatrixX2d, Eigen::MatrixX2d>>();
  if (pair.first.rows() != pair.second.rows()) throw PreconditionError("board and image point counts differ");
  for (Eigen::Index i = 0; i < pair.first.rows(); ++i) {
    c.board_points.emplace_back(pair.first(i, 0), pair.first(i, 1));
    c.image_points.emplace_back(pair.second(i, 0), pair.second(i, 1));
  }
  return c;
}

py::tuple correspondence_to(const CorrespondenceSet& c) {
  Eigen::MatrixX2d board(c.board_points.size(), 2), image(c.image_points.size(), 2);
  for (std::size_t i = 0; i < c.board_points.size(); ++i) {
    board.row(static_cast<Eigen::Index>(i)) = c.board_points[i].transpose();
    image.row(static_cast<Eigen::Index>(i)) = c.image_points[i].transpose();
  }
  return py::make_tuple(board, image);
}

}  // namespace

PYBIND11_MODULE(sentry_native, m) {
  m.doc() = "Stereo telepresence gimbal simulation: camera model, calibration, depth, gimbal and tracking.";

  auto base = py::register_exception<Error>(m, "SentryError", PyExc_RuntimeError);
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", base.ptr());
  py::register_exception<InvalidCommandError>(m, "InvalidCommandError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.attr("ANGLE_LIMIT_DEG") = kAngleLimitDeg;
  m.attr("MAX_RATE_DEG_PER_SEC") = kMaxRateDegPerSec;
  m.attr("CONTROL_TICK_SEC") = kControlTickSec;

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("k1", &CameraIntrinsics::k1)
      .def_readwrite("k2", &CameraIntrinsics::k2)
      .def_readwrite("p1", &CameraIntrinsics::p1)
      .def_readwrite("p2", &CameraIntrinsics::p2)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def_static("from_fov", &CameraIntrinsics::from_fov, py::arg("width"), py::arg("height"), py::arg("hfov_deg"))
      .def("matrix", &CameraIntrinsics::matrix)
      .def("validate", &CameraIntrinsics::validate)
      .def(py::self == py::self)
      .def("__repr__", [](const CameraIntrinsics& c) {
        return "CameraIntrinsics(fx=" + std::to_string(c.fx) + ", fy=" + std::to_string(c.fy) +
               ", cx=" + std::to_string(c.cx) + ", cy=" + std::to_string(c.cy) + ", k1=" + std::to_string(c.k1) +
               ", k2=" + std::to_string(c.k2) + ")";
      });
  m.def("default_intrinsics", &default_intrinsics);
  m.def("project_point", &project_point, py::arg("point"), py::arg("intrinsics"),
        "Pixel of a camera-frame point, or None behind the camera / outside the valid lens region.");
  m.def("pixel_ray", &pixel_ray, py::arg("u"), py::arg("v"), py::arg("intrinsics"));
  m.def("distort_normalized", &distort_normalized, py::arg("xy"), py::arg("intrinsics"));
  m.def("undistort_normalized", &undistort_normalized, py::arg("xy"), py::arg("intrinsics"));

  py::class_<StereoRig>(m, "StereoRig")
      .def(py::init<>())
      .def_readwrite("left", &StereoRig::left)
      .def_readwrite("right", &StereoRig::right)
      .def_readwrite("relative_rotation", &StereoRig::relative_rotation)
      .def_readwrite("relative_translation", &StereoRig::relative_translation)
      .def("baseline", &StereoRig::baseline)
      .def_static("parallel", &StereoRig::parallel, py::arg("intrinsics"), py::arg("baseline") = kDefaultBaseline);
  m.def("default_rig", [] { return load_rig_for(RunConfig{}); });

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("intrinsics", &CalibrationResult::intrinsics)
      .def_readonly("initial_rms", &CalibrationResult::initial_rms)
      .def_readonly("rms", &CalibrationResult::rms)
      .def_readonly("iterations", &CalibrationResult::iterations);
  m.def(
      "chessboard_views",
      [](const CameraIntrinsics& intr, int count) {
        py::list out;
        for (const auto& v : generate_chessboard_views(intr, std::nullopt, standard_board_poses(count)).left) {
          out.append(correspondence_to(v));
        }
        return out;
      },
      py::arg("intrinsics"), py::arg("count") = 5,
      "Synthetic noiseless (board_points, image_points) pairs, each an Nx2 array.");
  m.def(
      "calibrate_camera",
      [](const py::list& views, int width, int height) {
        std::vector<CorrespondenceSet> sets;
        for (std::size_t i = 0; i < views.size(); ++i) sets.push_back(correspondence_from(views[i], i));
        py::gil_scoped_release release;
        return calibrate_camera(sets, width, height);
      },
      py::arg("views"), py::arg("width") = kDefaultWidth, py::arg("height") = kDefaultHeight);

  py::class_<MatchParams>(m, "MatchParams")
      .def(py::init<>())
      .def_readwrite("block", &MatchParams::block)
      .def_readwrite("min_d", &MatchParams::min_d)
      .def_readwrite("max_d", &MatchParams::max_d)
      .def_readwrite("uniqueness_ratio", &MatchParams::uniqueness_ratio)
      .def_readwrite("lr_tolerance", &MatchParams::lr_tolerance);
  m.def(
      "match_disparity",
      [](const U8Array& left, const U8Array& right, const MatchParams& params) {
        const ImageBuffer l = array_to_image(left), r = array_to_image(right);
        py::gil_scoped_release release;
        DisparityMap d = match_disparity(l, r, params);
        py::gil_scoped_acquire acquire;
        return disparity_array(d);
      },
      py::arg("left"), py::arg("right"), py::arg("params") = MatchParams{},
      "Disparity in pixels of rectified gray images; NaN where invalid.");
  m.def(
      "depth_from_disparity",
      [](double disparity, double focal_px, double baseline_m) {
        DisparityMap d;
        d.width = d.height = 1;
        d.values = {static_cast<float>(disparity)};
        d.valid = {1};
        const DepthMap z = depth_from_disparity(d, focal_px, baseline_m);
        return z.valid[0] ? py::cast(z.values[0]) : py::none();
      },
      py::arg("disparity"), py::arg("focal_px"), py::arg("baseline_m"));

  py::class_<StereoPipeline>(m, "StereoPipeline")
      .def(py::init<const StereoRig&, MatchParams>(), py::arg("rig"), py::arg("params") = MatchParams{})
      .def(
          "process",
          [](const StereoPipeline& p, const U8Array& left, const U8Array& right) {
            const ImageBuffer l = array_to_image(left), r = array_to_image(right);
            StereoPipeline::Output out;
            {
              py::gil_scoped_release release;
              out = p.process(l, r);
            }
            py::dict d;
            d["rectified_left"] = image_to_array(out.left.image);
            d["rectified_right"] = image_to_array(out.right.image);
            d["disparity"] = disparity_array(out.disparity);
            d["depth"] = depth_array(out.depth);
            d["jet"] = image_to_array(colorize_jet(out.disparity));
            return d;
          },
          py::arg("left"), py::arg("right"));

  m.def("default_scene_json", [] { return scene_to_json(default_scene()); });
  m.def(
      "render_stereo",
      [](const std::string& scene_json, const StereoRig& rig, double yaw, double pitch, double roll, double t) {
        const Scene scene = scene_from_json(scene_json);
        StereoFrame f;
        {
          py::gil_scoped_release release;
          f = render_stereo(scene, rig, {clip_angle(yaw), clip_angle(pitch), clip_angle(roll)}, t);
        }
        py::dict d;
        d["left"] = image_to_array(f.left);
        d["right"] = image_to_array(f.right);
        d["gt_depth_left"] = depth_array(f.gt_depth_left);
        py::list dets;
        for (const auto& det : f.gt_detections) dets.append(detection_dict(det));
        d["detections"] = dets;
        return d;
      },
      py::arg("scene_json"), py::arg("rig"), py::arg("yaw") = 0.0, py::arg("pitch") = 0.0, py::arg("roll") = 0.0,
      py::arg("t") = 0.0);

  py::class_<GimbalAngles>(m, "GimbalAngles")
      .def(py::init<double, double, double>(), py::arg("yaw") = 0.0, py::arg("pitch") = 0.0, py::arg("roll") = 0.0)
      .def_readwrite("yaw", &GimbalAngles::yaw)
      .def_readwrite("pitch", &GimbalAngles::pitch)
      .def_readwrite("roll", &GimbalAngles::roll)
      .def(py::self == py::self);
  py::class_<GimbalState>(m, "GimbalState")
      .def(py::init<>())
      .def_readwrite("current", &GimbalState::current)
      .def_readwrite("target", &GimbalState::target)
      .def("at_target", &GimbalState::at_target);
  m.def("set_target", &set_target, py::arg("state"), py::arg("yaw"), py::arg("pitch"), py::arg("roll"));
  m.def("tick", &tick, py::arg("state"), py::arg("dt") = kControlTickSec);
  m.def(
      "encode_command",
      [](std::uint64_t seq, double yaw, double pitch, double roll) {
        return encode_command({seq, yaw, pitch, roll});
      },
      py::arg("seq"), py::arg("yaw"), py::arg("pitch"), py::arg("roll"));
  m.def(
      "parse_command",
      [](const std::string& line) {
        const ParsedCommand p = parse_command(line);
        py::dict d;
        d["seq"] = p.command.seq;
        d["yaw"] = p.command.yaw;
        d["pitch"] = p.command.pitch;
        d["roll"] = p.command.roll;
        d["clipped"] = p.clipped;
        return d;
      },
      py::arg("line"));

  m.def(
      "format_mjpeg_part",
      [](const py::bytes& jpeg, std::uint64_t seq, std::int64_t capture_ms) {
        return py::bytes(format_mjpeg_part(std::string(jpeg), seq, capture_ms));
      },
      py::arg("jpeg"), py::arg("seq"), py::arg("capture_ms"));

  m.def(
      "simulate_tracking",
      [](const std::string& scene_json, const std::string& label, double duration_s, double transient_s,
         std::uint64_t seed, double jitter_px) {
        const Scene scene = scene_from_json(scene_json);
        OracleConfig oracle;
        oracle.seed = seed;
        oracle.jitter_px = jitter_px;
        TrackingRun run;
        {
          py::gil_scoped_release release;
          run = simulate_tracking(scene, load_rig_for(RunConfig{}), label, {}, oracle, duration_s, transient_s);
        }
        py::dict d;
        d["frames"] = run.frames;
        d["centered"] = run.centered;
        d["fraction"] = run.fraction;
        py::list yaw;
        for (const auto& g : run.gimbal) yaw.append(g.yaw);
        d["yaw"] = yaw;
        return d;
      },
      py::arg("scene_json"), py::arg("label") = "person", py::arg("duration_s") = 10.0, py::arg("transient_s") = 2.0,
      py::arg("seed") = 1, py::arg("jitter_px") = 0.0);
}
