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

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sentry/config.hpp"
#include "sentry/control.hpp"
#include "sentry/frame_bus.hpp"
#include "sentry/gimbal.hpp"
#include "sentry/mailbox.hpp"
#include "sentry/service.hpp"
#include "sentry/simworld.hpp"
#include "sentry/stereo.hpp"

namespace sentry {

/// Sliding sample window with nearest-rank percentiles.
class LatencyWindow {
 public:
  explicit LatencyWindow(std::size_t capacity = 512) : capacity_(capacity) {}
  void add(double v);
  /// p in [0, 100]; 0 when empty.
  double percentile(double p) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::size_t capacity_;
  std::deque<double> samples_;
};

/// Nearest-rank percentile of an unsorted sample; 0 when empty.
double percentile(std::vector<double> samples, double p);

/// Events per second over the trailing second.
class RateMeter {
 public:
  void mark(double now_ms);
  double rate(double now_ms) const;

 private:
  mutable std::mutex mutex_;
  std::deque<double> stamps_;
};

struct RuntimeStats {
  std::uint64_t frames = 0;
  double fps_1s = 0.0;
  double depth_fps = 0.0;
  double pipeline_p50_ms = 0.0;
  double pipeline_p95_ms = 0.0;
  std::uint64_t depth_frames = 0;
};

/// The live system: 50 Hz control tick, render/encode loop at the configured
/// frame rate, a background depth worker, the serial bridge and HTTP service.
class Runtime final : public ServiceBackend {
 public:
  /// Loads scene and rig. Throws ConfigError.
  explicit Runtime(RunConfig cfg);
  ~Runtime() override;
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Starts threads and binds ports. Throws Error when a port is taken.
  void start();
  void stop();

  int http_port() const;
  int serial_port() const;
  RuntimeStats stats() const;
  const RunConfig& config() const { return cfg_; }

  StatusSnapshot status() const override;
  TelemetryResult submit_head_pose(const HeadPose& pose) override;
  void set_mode(const ControlMode& mode) override;
  bool label_known(const std::string& label) const override;
  void set_zoom(double zoom) override;
  const FrameBus& frames() const override { return bus_; }

 private:
  void control_loop();
  void render_loop();
  void depth_loop();
  void attach_distances(std::vector<Detection>& dets) const;

  RunConfig cfg_;
  StereoRig rig_;
  LabelVocabulary vocabulary_;
  StereoRenderer renderer_;
  std::unique_ptr<Detector> detector_;
  std::unique_ptr<StereoPipeline> depth_pipeline_;
  Controller controller_;
  SerialBridge serial_;
  FrameBus bus_;
  std::unique_ptr<Service> service_;

  Scene scene_;  // render thread only

  mutable std::mutex gimbal_mutex_;
  GimbalState gimbal_;

  mutable std::mutex shared_mutex_;
  std::shared_ptr<const DepthMap> depth_;
  std::vector<Detection> detections_;
  std::atomic<double> zoom_{1.0};

  struct StereoPair {
    ImageBuffer left;
    ImageBuffer right;
  };
  Mailbox<std::shared_ptr<const StereoPair>> depth_inbox_;

  LatencyWindow pipeline_ms_;
  RateMeter frame_rate_;
  RateMeter depth_rate_;
  std::atomic<std::uint64_t> depth_frames_{0};

  std::atomic<bool> running_{false};
  std::thread control_thread_;
  std::thread render_thread_;
  std::thread depth_thread_;
};

struct TrackingRun {
  int frames = 0;           // evaluated ticks after the transient
  int centered = 0;         // ticks with the target inside the central window
  double fraction = 0.0;
  std::vector<GimbalAngles> gimbal;      // per tick, all ticks
  std::vector<std::optional<Vec2>> centers;  // target bbox center per tick
};

/// Offline closed loop at the control tick: ground truth -> oracle ->
/// controller -> gimbal slew -> scene step. Deterministic for a given seed.
TrackingRun simulate_tracking(Scene scene, const StereoRig& rig, const std::string& label, TrackerGains gains,
                              OracleConfig oracle, double duration_s, double transient_s,
                              double central_fraction = 0.2);

}  // namespace sentry
