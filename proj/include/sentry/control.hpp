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
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sentry/camera_model.hpp"
#include "sentry/detect.hpp"
#include "sentry/gimbal.hpp"
#include "sentry/mailbox.hpp"

namespace sentry {

/// Operator head orientation in the gimbal convention, degrees.
struct HeadPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  std::uint64_t seq = 0;
  std::int64_t client_time_ms = 0;
};

struct ControlMode {
  enum class Kind { VrHead, AutoTrack };
  Kind kind = Kind::VrHead;
  std::string target_label;  // AutoTrack only

  static ControlMode vr() { return {}; }
  static ControlMode track(std::string label) { return {Kind::AutoTrack, std::move(label)}; }
  bool tracking() const { return kind == Kind::AutoTrack; }
  bool operator==(const ControlMode&) const = default;
};

struct TrackerGains {
  double kp = 0.5;
  double deadband_deg = 1.0;
  int loss_timeout_frames = 30;

  void validate() const;
};

struct TrackerState {
  std::optional<Detection> locked;
  int frames_since_seen = 0;
  TrackerGains gains;
  std::optional<GimbalAngles> targets;  // last emitted targets
};

/// Direct 1:1 mapping, clipped to +-90.
GimbalAngles head_to_gimbal(const HeadPose& pose);

/// True when `label` is `wanted` or a qualified identity "wanted:detail".
bool label_matches(const std::string& label, const std::string& wanted);

/// Sticky association: nearest center to the locked box when locked,
/// otherwise highest confidence, then larger area, then leftmost center.
std::optional<Detection> select_target(const std::vector<Detection>& detections, const std::string& wanted,
                                       const TrackerState& prev);

struct TrackStep {
  GimbalAngles targets;
  TrackerState state;
};

/// Proportional bearing control toward the chosen box center. Roll is held at
/// zero; losing the target for `loss_timeout_frames` re-centers the head.
TrackStep track_step(TrackerState state, const std::optional<Detection>& chosen, const CameraIntrinsics& intr,
                     const GimbalAngles& current);

enum class TelemetryResult { Applied, Ignored, Stale };

struct ControlStatus {
  ControlMode mode;
  std::optional<Detection> locked;
  std::uint64_t last_seq = 0;
  std::uint64_t telemetry_applied = 0;
  std::uint64_t telemetry_stale = 0;
  std::uint64_t telemetry_in_track_mode = 0;
};

/// Mode logic. Writers (HTTP handlers) post through latest-wins mailboxes;
/// the simulation thread calls step() once per control tick.
class Controller {
 public:
  Controller(const CameraIntrinsics& intr, TrackerGains gains = {});

  void set_mode(const ControlMode& mode);
  ControlMode mode() const;

  /// Stale when seq <= last accepted seq. Ignored (but accepted) outside VR mode.
  TelemetryResult submit_head_pose(const HeadPose& pose);

  /// A fresh detector output; consumed by the next step().
  void submit_detections(std::vector<Detection> detections);

  /// Gimbal targets for this tick.
  GimbalAngles step(const GimbalAngles& current);

  ControlStatus status() const;

 private:
  CameraIntrinsics intr_;
  TrackerGains gains_;

  mutable std::mutex mutex_;  // guards mode_, status counters, last_seq_
  ControlMode mode_;
  std::uint64_t mode_version_ = 0;
  std::uint64_t last_seq_ = 0;
  bool any_seq_ = false;
  std::uint64_t applied_ = 0;
  std::uint64_t stale_ = 0;
  std::uint64_t in_track_ = 0;

  Mailbox<HeadPose> head_;
  Mailbox<std::vector<Detection>> detections_;

  // Owned by the stepping thread.
  std::uint64_t seen_mode_version_ = 0;
  ControlMode active_mode_;
  TrackerState tracker_;
  std::optional<HeadPose> last_head_;
  std::optional<GimbalAngles> held_;
  std::optional<Detection> published_lock_;
};

}  // namespace sentry
