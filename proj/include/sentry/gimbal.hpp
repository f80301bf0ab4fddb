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
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sentry/camera_model.hpp"

namespace sentry {

inline constexpr double kAngleLimitDeg = 90.0;
inline constexpr double kMaxRateDegPerSec = 60.0 / 0.2;  // servo speed 0.2 s per 60 degrees
inline constexpr double kControlTickSec = 0.020;

struct GimbalAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  bool operator==(const GimbalAngles&) const = default;
};

/// Head orientation (head frame -> world) for the given angles: yaw about
/// the vertical axis, then pitch about the yawed horizontal axis, then roll
/// about the viewing axis. Positive yaw turns the view right, positive pitch
/// turns it up, positive roll turns the camera clockwise as seen from
/// behind it.
Mat3 head_rotation(const GimbalAngles& a);

double clip_angle(double deg);

struct GimbalState {
  GimbalAngles current;
  GimbalAngles target;
  double limit_deg = kAngleLimitDeg;
  double max_rate_deg_s = kMaxRateDegPerSec;
  double tick_s = kControlTickSec;

  bool at_target() const { return current == target; }
};

/// Targets are clipped to +-limit. Throws InvalidCommandError on NaN/inf.
GimbalState set_target(GimbalState state, double yaw, double pitch, double roll);

/// Slew every axis toward its target by at most max_rate * dt.
GimbalState tick(GimbalState state, double dt = kControlTickSec);

struct ServoCommand {
  std::uint64_t seq = 0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  bool operator==(const ServoCommand&) const = default;
};

/// `G <seq> Y<yaw> P<pitch> R<roll>\n`, one decimal, clipped to +-90.0.
std::string encode_command(const ServoCommand& cmd);

struct ParsedCommand {
  ServoCommand command;
  bool clipped = false;  // an angle was outside +-90 and has been clipped
};

/// Throws ParseError (with byte offset) on malformed input. A trailing
/// "\r\n", "\n" or "\r" is accepted.
ParsedCommand parse_command(std::string_view line);

/// Broadcasts servo command lines to TCP subscribers, one command per line.
/// Subscribers that stop reading are dropped.
class SerialBridge {
 public:
  SerialBridge() = default;
  SerialBridge(const SerialBridge&) = delete;
  SerialBridge& operator=(const SerialBridge&) = delete;
  ~SerialBridge();

  /// Binds 127.0.0.1:`port` (0 picks a free port) and starts accepting.
  void start(int port);
  void stop();
  int port() const { return port_; }
  std::size_t subscriber_count() const;
  void publish(const std::string& line);

 private:
  void accept_loop();

  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  mutable std::mutex mutex_;
  std::vector<int> clients_;
};

}  // namespace sentry
