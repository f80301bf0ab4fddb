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
#include "sentry/gimbal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "sentry/errors.hpp"

namespace sentry {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double step_axis(double current, double target, double max_step) {
  const double delta = target - current;
  if (std::abs(delta) <= max_step) return target;
  return current + std::copysign(max_step, delta);
}

// Round to one decimal and fold -0.0 into 0.0 so the encoding is canonical.
double tenths(double deg) {
  const double r = std::round(clip_angle(deg) * 10.0) / 10.0;
  return r == 0.0 ? 0.0 : r;
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= s_.size(); }

  void expect(char c, const char* what) {
    if (done() || s_[pos_] != c) throw ParseError(std::string("servo command: expected ") + what, pos_);
    ++pos_;
  }

  std::uint64_t unsigned_int() {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc() || ptr == s_.data() + pos_) throw ParseError("servo command: expected sequence number", pos_);
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }

  double number() {
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v, std::chars_format::fixed);
    if (ec != std::errc() || ptr == s_.data() + pos_) throw ParseError("servo command: expected angle", pos_);
    if (!std::isfinite(v)) throw ParseError("servo command: angle is not finite", pos_);
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

double clip_angle(double deg) { return std::clamp(deg, -kAngleLimitDeg, kAngleLimitDeg); }

Mat3 head_rotation(const GimbalAngles& a) {
  return (Eigen::AngleAxisd(a.yaw * kDegToRad, Vec3::UnitY()) *
          Eigen::AngleAxisd(a.pitch * kDegToRad, Vec3::UnitX()) *
          Eigen::AngleAxisd(a.roll * kDegToRad, Vec3::UnitZ()))
      .toRotationMatrix();
}

GimbalState set_target(GimbalState state, double yaw, double pitch, double roll) {
  if (!std::isfinite(yaw) || !std::isfinite(pitch) || !std::isfinite(roll)) {
    throw InvalidCommandError("gimbal target angles must be finite");
  }
  const double lim = state.limit_deg;
  state.target = {std::clamp(yaw, -lim, lim), std::clamp(pitch, -lim, lim), std::clamp(roll, -lim, lim)};
  return state;
}

GimbalState tick(GimbalState state, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("gimbal tick needs dt > 0");
  const double max_step = state.max_rate_deg_s * dt;
  state.current.yaw = step_axis(state.current.yaw, state.target.yaw, max_step);
  state.current.pitch = step_axis(state.current.pitch, state.target.pitch, max_step);
  state.current.roll = step_axis(state.current.roll, state.target.roll, max_step);
  return state;
}

std::string encode_command(const ServoCommand& cmd) {
  char buf[96];
  const int n = std::snprintf(buf, sizeof(buf), "G %llu Y%.1f P%.1f R%.1f\n",
                              static_cast<unsigned long long>(cmd.seq), tenths(cmd.yaw), tenths(cmd.pitch),
                              tenths(cmd.roll));
  return std::string(buf, static_cast<std::size_t>(n));
}

ParsedCommand parse_command(std::string_view line) {
  if (line.ends_with('\n')) line.remove_suffix(1);
  if (line.ends_with('\r')) line.remove_suffix(1);
  Cursor c(line);
  ParsedCommand out;
  c.expect('G', "'G' tag");
  c.expect(' ', "space after tag");
  out.command.seq = c.unsigned_int();
  c.expect(' ', "space before yaw");
  c.expect('Y', "'Y' field");
  double yaw = c.number();
  c.expect(' ', "space before pitch");
  c.expect('P', "'P' field");
  double pitch = c.number();
  c.expect(' ', "space before roll");
  c.expect('R', "'R' field");
  double roll = c.number();
  if (!c.done()) throw ParseError("servo command: trailing characters", c.pos());

  for (double* a : {&yaw, &pitch, &roll}) {
    if (std::abs(*a) > kAngleLimitDeg) {
      *a = clip_angle(*a);
      out.clipped = true;
    }
  }
  out.command.yaw = yaw;
  out.command.pitch = pitch;
  out.command.roll = roll;
  return out;
}

SerialBridge::~SerialBridge() { stop(); }

void SerialBridge::start(int port) {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error("serial bridge: socket() failed");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error("serial bridge: cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void SerialBridge::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(mutex_);
  for (int fd : clients_) ::close(fd);
  clients_.clear();
}

std::size_t SerialBridge::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

void SerialBridge::publish(const std::string& line) {
  std::lock_guard lock(mutex_);
  std::erase_if(clients_, [&](int fd) {
    const ssize_t n = ::send(fd, line.data(), line.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n == static_cast<ssize_t>(line.size())) return false;
    ::close(fd);
    return true;
  });
}

void SerialBridge::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    std::lock_guard lock(mutex_);
    clients_.push_back(fd);
  }
}

}  // namespace sentry
