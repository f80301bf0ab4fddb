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
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <doctest.h>

#include "sentry/errors.hpp"
#include "sentry/gimbal.hpp"

using namespace sentry;

TEST_CASE("slew rate and tick constants") {
  CHECK(kMaxRateDegPerSec == doctest::Approx(300.0));
  CHECK(kControlTickSec == 0.020);
  CHECK(kAngleLimitDeg == 90.0);
}

TEST_CASE("set_target clips and leaves current angles alone") {
  GimbalState s;
  s = set_target(s, 120, -200, 45);
  CHECK(s.target == GimbalAngles{90, -90, 45});
  CHECK(s.current == GimbalAngles{});
  GimbalState z = set_target(GimbalState{}, 0, 0, 0);
  CHECK(z.current == GimbalAngles{});
  CHECK(z.target == GimbalAngles{});
  CHECK_THROWS_AS(set_target(s, std::nan(""), 0, 0), InvalidCommandError);
  CHECK_THROWS_AS(set_target(s, 0, std::numeric_limits<double>::infinity(), 0), InvalidCommandError);
}

TEST_CASE("one tick moves 6 degrees and a full step takes 15 ticks") {
  GimbalState s = set_target(GimbalState{}, 90, 0, 0);
  s = tick(s);
  CHECK(s.current.yaw == doctest::Approx(6.0).epsilon(1e-12));
  int ticks = 1;
  while (!s.at_target()) {
    s = tick(s);
    ++ticks;
    REQUIRE(ticks < 100);
  }
  CHECK(ticks == 15);
  CHECK(s.current.yaw == 90.0);

  GimbalState small = set_target(GimbalState{}, 3, 0, 0);
  small = tick(small);
  CHECK(small.current.yaw == 3.0);
  CHECK(small.at_target());
}

TEST_CASE("tick is a fixed point at target") {
  GimbalState s = set_target(GimbalState{}, 12.5, -7.25, 3);
  for (int i = 0; i < 20; ++i) s = tick(s);
  REQUIRE(s.at_target());
  const GimbalState again = tick(s);
  CHECK(again.current == s.current);
  CHECK(again.target == s.target);
}

TEST_CASE("property: fuzzed commands keep angles in range and rate-limited") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> angle(-400.0, 400.0);
  std::uniform_real_distribution<double> dt(0.0, 0.05);
  GimbalState s;
  for (int i = 0; i < 20000; ++i) {
    s = set_target(s, angle(rng), angle(rng), angle(rng));
    const double step = dt(rng);
    const GimbalState next = tick(s, step);
    const double bound = s.max_rate_deg_s * step + 1e-9;
    CHECK(std::abs(next.current.yaw - s.current.yaw) <= bound);
    CHECK(std::abs(next.current.pitch - s.current.pitch) <= bound);
    CHECK(std::abs(next.current.roll - s.current.roll) <= bound);
    for (double a : {next.current.yaw, next.current.pitch, next.current.roll}) {
      CHECK(a >= -90.0);
      CHECK(a <= 90.0);
    }
    s = next;
  }
}

TEST_CASE("head rotation sign conventions") {
  const Vec3 fwd = Vec3::UnitZ();
  CHECK((head_rotation({10, 0, 0}) * fwd).x() > 0.1);
  CHECK((head_rotation({0, 10, 0}) * fwd).y() < -0.1);
  CHECK((head_rotation({0, 0, 10}) * Vec3::UnitX()).y() > 0.1);
  CHECK((head_rotation({0, 0, 10}) * fwd - fwd).norm() < 1e-12);
  const Mat3 r = head_rotation({33, -21, 12});
  CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0));
  // Yaw about world vertical first: pitch does not change the heading.
  const Vec3 d = head_rotation({30, 20, 0}) * fwd;
  CHECK(std::atan2(d.x(), d.z()) * 180.0 / M_PI == doctest::Approx(30.0));
}

TEST_CASE("servo command encoding") {
  CHECK(encode_command({12, 10, -5.5, 0}) == "G 12 Y10.0 P-5.5 R0.0\n");
  CHECK(encode_command({1, 120, 0, 0}) == "G 1 Y90.0 P0.0 R0.0\n");
  CHECK(encode_command({2, -0.04, 0, -95}) == "G 2 Y0.0 P0.0 R-90.0\n");
}

TEST_CASE("servo command parsing") {
  const ParsedCommand p = parse_command("G 12 Y10.0 P-5.5 R0.0\n");
  CHECK(p.command == ServoCommand{12, 10.0, -5.5, 0.0});
  CHECK_FALSE(p.clipped);
  CHECK(parse_command("G 12 Y10.0 P-5.5 R0.0\r\n").command == p.command);
  CHECK(parse_command("G 12 Y10.0 P-5.5 R0.0").command == p.command);
  CHECK_THROWS_AS(parse_command("G 12 Y10.0\n"), ParseError);
  CHECK_THROWS_AS(parse_command("X 1 Y0 P0 R0\n"), ParseError);
  CHECK_THROWS_AS(parse_command("G -1 Y0 P0 R0\n"), ParseError);
  CHECK_THROWS_AS(parse_command("G 1 Y0 P0 R0 extra\n"), ParseError);
  const ParsedCommand wide = parse_command("G 3 Y120.0 P0.0 R0.0\n");
  CHECK(wide.clipped);
  CHECK(wide.command.yaw == 90.0);
  try {
    parse_command("X 1 Y0 P0 R0\n");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte 0") != std::string::npos);
  }
}

TEST_CASE("property: servo codec round-trips") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> tenths(-900, 900);
  std::uniform_int_distribution<std::uint64_t> seq(0, 1'000'000'000ULL);
  for (int i = 0; i < 1000; ++i) {
    const ServoCommand c{seq(rng), tenths(rng) / 10.0, tenths(rng) / 10.0, tenths(rng) / 10.0};
    const ParsedCommand p = parse_command(encode_command(c));
    CHECK(p.command == c);
    CHECK_FALSE(p.clipped);
  }
}

TEST_CASE("serial bridge broadcasts lines to subscribers") {
  SerialBridge bridge;
  bridge.start(0);
  REQUIRE(bridge.port() > 0);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(bridge.port()));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  for (int i = 0; i < 200 && bridge.subscriber_count() == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  REQUIRE(bridge.subscriber_count() == 1);
  const std::string line = encode_command({7, 1.5, -2, 0});
  bridge.publish(line);
  std::string got;
  char buf[64];
  while (got.find('\n') == std::string::npos) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    REQUIRE(n > 0);
    got.append(buf, static_cast<std::size_t>(n));
  }
  CHECK(got == line);
  ::close(fd);
  bridge.stop();
}
