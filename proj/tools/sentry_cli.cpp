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
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sentry/bench.hpp"
#include "sentry/calibration.hpp"
#include "sentry/config.hpp"
#include "sentry/errors.hpp"
#include "sentry/io.hpp"
#include "sentry/pipeline.hpp"
#include "sentry/simworld.hpp"
#include "sentry/stereo.hpp"

namespace fs = std::filesystem;
using namespace sentry;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct UsageError : Error {
  using Error::Error;
};

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + ": file not found: " + path);
}

struct ServiceOverrides {
  std::string config;
  std::optional<int> port;
  std::optional<double> fps;
  std::optional<int> jpeg_quality;
  std::optional<int> serial_port;
  std::optional<std::uint64_t> seed;
  std::string console_dir;
};

RunConfig resolve_config(const ServiceOverrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.port) {
    cfg.port = *o.port;
  } else if (const char* env = std::getenv("SENTRY_PORT")) {
    try {
      cfg.port = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError("SENTRY_PORT", std::string("not an integer: ") + env);
    }
  }
  if (o.fps) cfg.fps = *o.fps;
  if (o.jpeg_quality) cfg.jpeg_quality = *o.jpeg_quality;
  if (o.serial_port) cfg.serial_port = *o.serial_port;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.detector.oracle.seed = *o.seed;
  }
  if (!o.console_dir.empty()) cfg.console_dir = o.console_dir;
  cfg.validate();
  return cfg;
}

void add_service_flags(CLI::App* cmd, ServiceOverrides& o) {
  cmd->add_option("--config", o.config, "Run configuration JSON");
  cmd->add_option("--port", o.port, "HTTP port (env SENTRY_PORT; 0 picks a free port)");
  cmd->add_option("--fps", o.fps, "Stream frame rate");
  cmd->add_option("--jpeg-quality", o.jpeg_quality, "JPEG quality 1-100");
  cmd->add_option("--serial-port", o.serial_port, "Servo command TCP port");
  cmd->add_option("--seed", o.seed, "Detector seed");
  cmd->add_option("--console-dir", o.console_dir, "Static files served at /");
}

int cmd_run(const ServiceOverrides& o) {
  RunConfig cfg = resolve_config(o);
  Runtime runtime(cfg);
  runtime.start();
  const std::string host = cfg.host == "0.0.0.0" ? "localhost" : cfg.host;
  std::cout << "serving on http://" << host << ":" << runtime.http_port() << "/" << std::endl;
  if (runtime.serial_port() > 0) std::cout << "servo commands on tcp://127.0.0.1:" << runtime.serial_port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  runtime.stop();
  std::cout << "stopped" << std::endl;
  return kExitOk;
}

struct CalibrateArgs {
  std::string input;
  std::string output;
  int width = kDefaultWidth;
  int height = kDefaultHeight;
};

std::string view_list(const std::vector<CorrespondenceSet>& views) {
  std::string s;
  for (const auto& v : views) s += (s.empty() ? "" : ", ") + v.view_id + " (" + std::to_string(v.board_points.size()) + " pts)";
  return s;
}

int cmd_calibrate(const CalibrateArgs& a) {
  require_file(a.input, "--input");
  io::CorrespondenceFile file;
  try {
    file = io::correspondences_from_json(io::read_file(a.input));
  } catch (const Error& e) {
    throw UsageError(std::string("--input: ") + e.what());
  }
  auto report = [](const char* name, const CalibrationResult& r) {
    std::cout << name << ": rms " << r.rms << " px (initial " << r.initial_rms << " px, " << r.poses.size()
              << " views, " << r.iterations << " iterations)\n";
  };
  try {
    if (!file.right.empty()) {
      StereoCalibration sc = calibrate_stereo(file.left, file.right, a.width, a.height);
      report("left", sc.left);
      report("right", sc.right);
      std::cout << "baseline: " << sc.rig.baseline() << " m\n";
      io::save_rig(a.output, sc.rig);
    } else {
      CalibrationResult r = calibrate_camera(file.left, a.width, a.height);
      report("left", r);
      io::write_file(a.output, io::intrinsics_to_json(r.intrinsics));
    }
  } catch (const Error& e) {
    std::cerr << "calibration failed: " << e.what() << "\n  left views: " << view_list(file.left) << "\n";
    if (!file.right.empty()) std::cerr << "  right views: " << view_list(file.right) << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << a.output << std::endl;
  return kExitOk;
}

struct DepthArgs {
  std::string left;
  std::string right;
  std::string rig = kSyntheticRig;
  std::string outdir;
  MatchParams match;
};

int cmd_depth(const DepthArgs& a) {
  require_file(a.left, "--left");
  require_file(a.right, "--right");
  StereoRig rig = StereoRig::parallel(default_intrinsics(), kDefaultBaseline);
  if (a.rig != kSyntheticRig) {
    require_file(a.rig, "--rig");
    try {
      rig = io::load_rig(a.rig);
    } catch (const Error& e) {
      throw UsageError(std::string("--rig: ") + e.what());
    }
  }
  const ImageBuffer left = io::read_pnm(a.left);
  const ImageBuffer right = io::read_pnm(a.right);
  if (left.width != right.width || left.height != right.height) {
    std::cerr << "image sizes differ: " << left.width << "x" << left.height << " vs " << right.width << "x"
              << right.height << "\n";
    return kExitRuntime;
  }
  if (left.width != rig.left.width || left.height != rig.left.height) {
    std::cerr << "image size " << left.width << "x" << left.height << " does not match the rig ("
              << rig.left.width << "x" << rig.left.height << ")\n";
    return kExitRuntime;
  }
  fs::create_directories(a.outdir);
  const StereoPipeline pipeline(rig, a.match);
  const auto out = pipeline.process(left, right);
  const fs::path dir(a.outdir);
  io::write_pnm(dir / "rectified_left.ppm", out.left.image);
  io::write_pnm(dir / "rectified_right.ppm", out.right.image);
  io::write_pnm(dir / "disparity.pgm", io::disparity_to_pgm(out.disparity));
  io::write_file(dir / "disparity.json", io::disparity_sidecar(out.disparity));
  io::write_pnm(dir / "disparity_jet.ppm", colorize_jet(out.disparity));

  std::vector<double> depths;
  std::vector<double> disparities;
  for (std::size_t i = 0; i < out.depth.values.size(); ++i) {
    if (out.depth.valid[i]) {
      depths.push_back(out.depth.values[i]);
      disparities.push_back(out.disparity.values[i]);
    }
  }
  nlohmann::ordered_json stats;
  stats["valid_pixels"] = depths.size();
  stats["valid_fraction"] = static_cast<double>(depths.size()) / static_cast<double>(out.depth.values.size());
  stats["focal_px"] = out.depth.focal_px;
  stats["baseline_m"] = out.depth.baseline_m;
  if (!depths.empty()) {
    stats["median_m"] = percentile(depths, 50.0);
    stats["p05_m"] = percentile(depths, 5.0);
    stats["p95_m"] = percentile(depths, 95.0);
    stats["min_m"] = *std::min_element(depths.begin(), depths.end());
    stats["max_m"] = *std::max_element(depths.begin(), depths.end());
    stats["median_disparity_px"] = percentile(disparities, 50.0);
  } else {
    stats["median_m"] = nullptr;
  }
  io::write_file(dir / "depth_stats.json", stats.dump(2) + "\n");
  std::cout << stats.dump(2) << std::endl;
  return kExitOk;
}

int cmd_bench(const ServiceOverrides& o, double duration, const std::string& output) {
  if (!(duration > 0.0)) throw UsageError("--duration must be positive");
  RunConfig cfg = resolve_config(o);
  const BenchReport r = run_bench(cfg, duration);
  const std::string text = bench_report_json(r);
  std::cout << text << std::endl;
  if (!output.empty()) io::write_file(output, text + "\n");
  return kExitOk;
}

struct RenderArgs {
  std::string scene;
  std::string rig = kSyntheticRig;
  std::string outdir;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double time = 0.0;
};

int cmd_render(const RenderArgs& a) {
  RunConfig cfg;
  cfg.scene_path = a.scene;
  cfg.rig = a.rig;
  const Scene scene = load_scene(cfg);
  const StereoRig rig = load_rig_for(cfg);
  GimbalAngles angles{clip_angle(a.yaw), clip_angle(a.pitch), clip_angle(a.roll)};
  const StereoFrame f = render_stereo(scene, rig, angles, scene.time + a.time);
  fs::create_directories(a.outdir);
  io::write_pnm(fs::path(a.outdir) / "left.ppm", f.left);
  io::write_pnm(fs::path(a.outdir) / "right.ppm", f.right);
  nlohmann::ordered_json dets = nlohmann::ordered_json::array();
  for (const auto& d : f.gt_detections) {
    dets.push_back({{"label", d.label},
                    {"bbox", {d.bbox.u_min, d.bbox.v_min, d.bbox.u_max, d.bbox.v_max}},
                    {"distance_m", d.distance_m ? nlohmann::ordered_json(*d.distance_m) : nullptr}});
  }
  io::write_file(fs::path(a.outdir) / "ground_truth.json", dets.dump(2) + "\n");
  std::cout << "wrote " << a.outdir << std::endl;
  return kExitOk;
}

struct ChessboardArgs {
  std::string output;
  int views = 5;
  bool stereo = false;
  std::string rig = kSyntheticRig;
};

int cmd_chessboard(const ChessboardArgs& a) {
  if (a.views < 1) throw UsageError("--views must be >= 1");
  RunConfig cfg;
  cfg.rig = a.rig;
  const StereoRig rig = load_rig_for(cfg);
  const auto views = generate_chessboard_views(rig.left, a.stereo ? std::optional<StereoRig>(rig) : std::nullopt,
                                               standard_board_poses(a.views));
  io::write_file(a.output, io::correspondences_to_json({views.left, views.right}));
  std::cout << "wrote " << a.views << (a.stereo ? " stereo" : "") << " views to " << a.output << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentry: simulated stereo telepresence gimbal"};
  app.require_subcommand(1);

  ServiceOverrides run_opts;
  auto* run = app.add_subcommand("run", "Run the simulation, pipeline and HTTP service");
  add_service_flags(run, run_opts);

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a camera or stereo rig from correspondences");
  calibrate->add_option("--input", cal.input, "Correspondence JSON")->required();
  calibrate->add_option("--output", cal.output, "Output rig (or camera) JSON")->required();
  calibrate->add_option("--width", cal.width, "Image width")->check(CLI::PositiveNumber);
  calibrate->add_option("--height", cal.height, "Image height")->check(CLI::PositiveNumber);

  DepthArgs dep;
  auto* depth = app.add_subcommand("depth", "Rectify, match and triangulate one image pair");
  depth->add_option("--left", dep.left, "Left PPM/PGM")->required();
  depth->add_option("--right", dep.right, "Right PPM/PGM")->required();
  depth->add_option("--rig", dep.rig, "Rig JSON or synthetic-default");
  depth->add_option("--out", dep.outdir, "Output directory")->required();
  depth->add_option("--block", dep.match.block, "SAD block size (odd)");
  depth->add_option("--max-disparity", dep.match.max_d, "Largest disparity searched");

  ServiceOverrides bench_opts;
  double duration = 10.0;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Measure frame rate and latency over loopback");
  add_service_flags(bench, bench_opts);
  bench->add_option("--duration", duration, "Seconds to run");
  bench->add_option("--output", bench_out, "Also write the report here");

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Render one stereo pair of a scene");
  render->add_option("--scene", ren.scene, "Scene JSON (default: built-in scene)");
  render->add_option("--rig", ren.rig, "Rig JSON or synthetic-default");
  render->add_option("--out", ren.outdir, "Output directory")->required();
  render->add_option("--yaw", ren.yaw);
  render->add_option("--pitch", ren.pitch);
  render->add_option("--roll", ren.roll);
  render->add_option("--time", ren.time, "Seconds to advance the scene");

  ChessboardArgs cb;
  auto* chess = app.add_subcommand("chessboard", "Write synthetic chessboard correspondences");
  chess->add_option("--output", cb.output, "Correspondence JSON")->required();
  chess->add_option("--views", cb.views, "Number of board poses");
  chess->add_flag("--stereo", cb.stereo, "Emit right-camera views too");
  chess->add_option("--rig", cb.rig, "Rig JSON or synthetic-default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*calibrate) return cmd_calibrate(cal);
    if (*depth) return cmd_depth(dep);
    if (*bench) return cmd_bench(bench_opts, duration, bench_out);
    if (*render) {
      if (!ren.scene.empty()) require_file(ren.scene, "--scene");
      return cmd_render(ren);
    }
    if (*chess) return cmd_chessboard(cb);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
