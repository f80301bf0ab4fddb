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
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sentry/camera_model.hpp"
#include "sentry/control.hpp"
#include "sentry/detect.hpp"
#include "sentry/frame_bus.hpp"

namespace sentry {

inline constexpr double kMinZoom = 1.0;
inline constexpr double kMaxZoom = 1.6;
inline constexpr const char* kBoundary = "frame";
inline constexpr int kDefaultHttpPort = 8080;

/// Side-by-side RGB frame with a centered digital zoom per eye.
/// zoom is clipped to [1, 1.6]; 1.0 copies the eyes verbatim.
ImageBuffer compose_frame(const ImageBuffer& left, const ImageBuffer& right, double zoom);

/// One multipart chunk: boundary, headers, JPEG bytes, trailing CRLF.
std::string format_mjpeg_part(const std::string& jpeg, std::uint64_t seq, std::int64_t capture_ms);

struct StatusSnapshot {
  std::uint64_t seq = 0;
  ControlMode mode;
  GimbalAngles gimbal;
  double fps_1s = 0.0;
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
  std::vector<Detection> detections;

  double depth_fps = 0.0;
  double zoom = 1.0;
  ControlStatus control;
  std::vector<std::string> vocabulary;
};

/// Compact JSON. Keys seq, mode, target, gimbal, fps_1s, latency_ms_p50_p95,
/// detections come first, followed by depth_fps, zoom, telemetry, vocabulary.
std::string status_json(const StatusSnapshot& s);

/// Hooks the HTTP layer needs from the running system.
class ServiceBackend {
 public:
  virtual ~ServiceBackend() = default;
  virtual StatusSnapshot status() const = 0;
  virtual TelemetryResult submit_head_pose(const HeadPose& pose) = 0;
  virtual void set_mode(const ControlMode& mode) = 0;
  virtual bool label_known(const std::string& label) const = 0;
  virtual void set_zoom(double zoom) = 0;
  virtual const FrameBus& frames() const = 0;
};

/// Parsed POST /telemetry body; throws RequestError with a reason.
HeadPose parse_telemetry(const std::string& body);

struct ModeRequest {
  ControlMode mode;
  std::optional<double> zoom;
};

/// Parsed POST /mode body; throws RequestError with a reason.
ModeRequest parse_mode_request(const std::string& body);

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = kDefaultHttpPort;  // 0 picks a free port
  std::string console_dir;      // empty or missing: placeholder page at /
  int send_buffer_bytes = 256 * 1024;
};

/// HTTP control plane on a background thread.
class Service {
 public:
  Service(ServiceBackend& backend, ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving. Throws Error if the port cannot be bound.
  void start();
  void stop();
  int port() const { return port_; }
  bool running() const { return running_; }

 private:
  struct Impl;
  ServiceBackend& backend_;
  ServiceConfig cfg_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  int port_ = 0;
};

}  // namespace sentry
