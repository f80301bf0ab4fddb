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
#include "sentry/control.hpp"

#include <cmath>
#include <numbers>

#include "sentry/errors.hpp"

namespace sentry {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double center_distance2(const Detection& a, const Detection& b) {
  return (a.bbox.center() - b.bbox.center()).squaredNorm();
}

// Strict "a is preferred over b" for unlocked selection.
bool preferred(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.bbox.area() != b.bbox.area()) return a.bbox.area() > b.bbox.area();
  return a.bbox.center().x() < b.bbox.center().x();
}

}  // namespace

void TrackerGains::validate() const {
  if (!(kp > 0.0 && kp <= 1.0)) throw PreconditionError("tracker kp must lie in (0, 1]");
  if (!(deadband_deg >= 0.0)) throw PreconditionError("tracker deadband_deg must be >= 0");
  if (loss_timeout_frames < 0) throw PreconditionError("tracker loss_timeout_frames must be >= 0");
}

GimbalAngles head_to_gimbal(const HeadPose& pose) {
  return {clip_angle(pose.yaw), clip_angle(pose.pitch), clip_angle(pose.roll)};
}

bool label_matches(const std::string& label, const std::string& wanted) {
  if (label == wanted) return true;
  return label.size() > wanted.size() && label.compare(0, wanted.size(), wanted) == 0 && label[wanted.size()] == ':';
}

std::optional<Detection> select_target(const std::vector<Detection>& detections, const std::string& wanted,
                                       const TrackerState& prev) {
  const Detection* best = nullptr;
  for (const auto& d : detections) {
    if (!label_matches(d.label, wanted)) continue;
    if (!best) {
      best = &d;
      continue;
    }
    if (prev.locked) {
      const double da = center_distance2(d, *prev.locked);
      const double db = center_distance2(*best, *prev.locked);
      if (da < db || (da == db && preferred(d, *best))) best = &d;
    } else if (preferred(d, *best)) {
      best = &d;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

TrackStep track_step(TrackerState state, const std::optional<Detection>& chosen, const CameraIntrinsics& intr,
                     const GimbalAngles& current) {
  GimbalAngles targets = state.targets.value_or(current);
  if (chosen) {
    const Vec2 c = chosen->bbox.center();
    const double err_yaw = std::atan((c.x() - intr.cx) / intr.fx) * kRadToDeg;
    const double err_pitch = -std::atan((c.y() - intr.cy) / intr.fy) * kRadToDeg;
    const double kp = state.gains.kp;
    const double db = state.gains.deadband_deg;
    targets.yaw = std::abs(err_yaw) < db ? current.yaw : clip_angle(current.yaw + kp * err_yaw);
    targets.pitch = std::abs(err_pitch) < db ? current.pitch : clip_angle(current.pitch + kp * err_pitch);
    targets.roll = 0.0;
    state.locked = chosen;
    state.frames_since_seen = 0;
  } else {
    ++state.frames_since_seen;
    if (state.frames_since_seen >= state.gains.loss_timeout_frames) {
      targets = GimbalAngles{};
      state.locked.reset();
    }
  }
  state.targets = targets;
  return {targets, std::move(state)};
}

Controller::Controller(const CameraIntrinsics& intr, TrackerGains gains) : intr_(intr), gains_(gains) {
  gains_.validate();
  tracker_.gains = gains_;
}

void Controller::set_mode(const ControlMode& mode) {
  std::lock_guard lock(mutex_);
  mode_ = mode;
  ++mode_version_;
}

ControlMode Controller::mode() const {
  std::lock_guard lock(mutex_);
  return mode_;
}

TelemetryResult Controller::submit_head_pose(const HeadPose& pose) {
  std::lock_guard lock(mutex_);
  if (any_seq_ && pose.seq <= last_seq_) {
    ++stale_;
    return TelemetryResult::Stale;
  }
  any_seq_ = true;
  last_seq_ = pose.seq;
  if (mode_.tracking()) {
    ++in_track_;
    return TelemetryResult::Ignored;
  }
  head_.put(pose);
  ++applied_;
  return TelemetryResult::Applied;
}

void Controller::submit_detections(std::vector<Detection> detections) { detections_.put(std::move(detections)); }

GimbalAngles Controller::step(const GimbalAngles& current) {
  bool switched = false;
  {
    std::lock_guard lock(mutex_);
    if (mode_version_ != seen_mode_version_) {
      seen_mode_version_ = mode_version_;
      switched = !(active_mode_ == mode_);
      active_mode_ = mode_;
    }
  }
  if (switched) {
    held_ = current;
    tracker_ = TrackerState{};
    tracker_.gains = gains_;
    tracker_.targets = current;
    std::lock_guard lock(mutex_);
    published_lock_.reset();
  }

  if (!active_mode_.tracking()) {
    if (auto pose = head_.take()) {
      last_head_ = *pose;
      held_ = head_to_gimbal(*pose);
    }
    return held_.value_or(current);
  }

  if (auto dets = detections_.take()) {
    const auto chosen = select_target(*dets, active_mode_.target_label, tracker_);
    TrackStep s = track_step(std::move(tracker_), chosen, intr_, current);
    tracker_ = std::move(s.state);
    held_ = s.targets;
    std::lock_guard lock(mutex_);
    published_lock_ = tracker_.locked;
  }
  return held_.value_or(current);
}

ControlStatus Controller::status() const {
  std::lock_guard lock(mutex_);
  ControlStatus s;
  s.mode = mode_;
  s.locked = published_lock_;
  s.last_seq = last_seq_;
  s.telemetry_applied = applied_;
  s.telemetry_stale = stale_;
  s.telemetry_in_track_mode = in_track_;
  return s;
}

}  // namespace sentry
