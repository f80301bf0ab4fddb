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
#include "sentry/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <charconv>
#include <chrono>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sentry/errors.hpp"
#include "sentry/pipeline.hpp"

namespace sentry {

MultipartReader::MultipartReader(std::string boundary, Callback on_part)
    : delimiter_("--" + std::move(boundary) + "\r\n"), on_part_(std::move(on_part)) {}

void MultipartReader::feed(std::string_view bytes) {
  buffer_.append(bytes);
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) { throw ParseError("multipart: " + what, consumed_ + pos); };
  while (true) {
    if (state_ == State::Boundary) {
      if (buffer_.size() - pos < delimiter_.size()) {
        if (delimiter_.compare(0, buffer_.size() - pos, buffer_, pos, std::string::npos) != 0) {
          fail("expected boundary");
        }
        break;
      }
      if (buffer_.compare(pos, delimiter_.size(), delimiter_) != 0) fail("expected boundary");
      pos += delimiter_.size();
      current_ = {};
      state_ = State::Headers;
    } else if (state_ == State::Headers) {
      const std::size_t eol = buffer_.find("\r\n", pos);
      if (eol == std::string::npos) break;
      if (eol == pos) {
        pos += 2;
        auto it = current_.headers.find("content-length");
        if (it == current_.headers.end()) fail("part without Content-Length");
        std::size_t n = 0;
        const auto& v = it->second;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec != std::errc() || p != v.data() + v.size()) fail("bad Content-Length");
        body_length_ = n;
        state_ = State::Body;
        continue;
      }
      const std::string line = buffer_.substr(pos, eol - pos);
      const std::size_t colon = line.find(':');
      if (colon == std::string::npos || colon == 0) fail("malformed header line");
      std::string name = line.substr(0, colon);
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      std::size_t vstart = colon + 1;
      while (vstart < line.size() && line[vstart] == ' ') ++vstart;
      current_.headers[name] = line.substr(vstart);
      pos = eol + 2;
    } else if (state_ == State::Body) {
      if (buffer_.size() - pos < body_length_) break;
      current_.body = buffer_.substr(pos, body_length_);
      pos += body_length_;
      state_ = State::Trailer;
    } else {
      if (buffer_.size() - pos < 2) break;
      if (buffer_.compare(pos, 2, "\r\n") != 0) fail("part not terminated by CRLF");
      pos += 2;
      ++parts_;
      state_ = State::Boundary;
      on_part_(std::move(current_));
    }
  }
  buffer_.erase(0, pos);
  consumed_ += pos;
}

std::string bench_report_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  auto pct = [](const Percentiles& p) { return nlohmann::ordered_json{{"p50", p.p50}, {"p95", p.p95}}; };
  j["duration_s"] = r.duration_s;
  j["fps"] = r.fps;
  j["depth_fps"] = r.depth_fps;
  j["frames"] = r.frames;
  j["telemetry_posts"] = r.telemetry_posts;
  j["pipeline_ms"] = pct(r.pipeline_ms);
  j["glass_to_glass_ms"] = pct(r.glass_to_glass_ms);
  j["telemetry_rtt_ms"] = pct(r.telemetry_rtt_ms);
  return j.dump(2);
}

BenchReport run_bench(RunConfig cfg, double duration_s) {
  if (!(duration_s > 0.0)) throw PreconditionError("bench duration must be positive");
  cfg.host = "127.0.0.1";
  cfg.port = 0;
  cfg.serial_port = 0;
  Runtime runtime(cfg);
  runtime.start();
  const int port = runtime.http_port();
  const RuntimeStats before = runtime.stats();
  const double started = monotonic_ms_precise();

  std::atomic<bool> done{false};
  std::vector<double> g2g;
  std::vector<double> rtt;
  std::uint64_t frames = 0;
  std::string stream_error;
  double stream_start = 0.0;
  double stream_end = 0.0;

  std::thread viewer([&] {
    httplib::Client cli("127.0.0.1", port);
    cli.set_tcp_nodelay(true);
    cli.set_read_timeout(5, 0);
    MultipartReader reader("frame", [&](MultipartPart&& part) {
      const double now = monotonic_ms_precise();
      const double capture = std::stod(part.headers.at("x-capture-ms"));
      if (frames == 0) stream_start = now;
      stream_end = now;
      ++frames;
      g2g.push_back(now - capture);
    });
    try {
      cli.Get("/stream", [&](const char* data, std::size_t n) {
        reader.feed({data, n});
        return !done.load();
      });
    } catch (const std::exception& e) {
      stream_error = e.what();
    }
  });

  std::uint64_t posts = 0;
  std::thread poster([&] {
    httplib::Client cli("127.0.0.1", port);
    cli.set_tcp_nodelay(true);
    cli.set_keep_alive(true);
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::microseconds(33333);
    auto next = clock::now();
    std::uint64_t seq = 0;
    while (!done) {
      ++seq;
      const double yaw = 10.0 * std::sin(0.5 * static_cast<double>(seq) / 30.0);
      nlohmann::json body{{"yaw", yaw}, {"pitch", 0.0}, {"roll", 0.0}, {"seq", seq}, {"t_ms", monotonic_ms()}};
      const double t0 = monotonic_ms_precise();
      auto res = cli.Post("/telemetry", body.dump(), "application/json");
      const double t1 = monotonic_ms_precise();
      if (res && res->status == 204) {
        rtt.push_back(t1 - t0);
        ++posts;
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  });

  std::this_thread::sleep_for(std::chrono::duration<double>(duration_s));
  const RuntimeStats stats = runtime.stats();
  const double elapsed_s = (monotonic_ms_precise() - started) / 1000.0;
  done = true;
  poster.join();
  viewer.join();
  runtime.stop();
  if (!stream_error.empty()) throw Error("bench stream client: " + stream_error);
  if (frames == 0) throw Error("bench stream client received no frames");

  BenchReport r;
  r.duration_s = duration_s;
  r.frames = frames;
  r.fps = frames > 1 ? (frames - 1) * 1000.0 / std::max(1.0, stream_end - stream_start) : 0.0;
  r.depth_fps = static_cast<double>(stats.depth_frames - before.depth_frames) / elapsed_s;
  r.telemetry_posts = posts;
  r.pipeline_ms = {stats.pipeline_p50_ms, stats.pipeline_p95_ms};
  r.glass_to_glass_ms = {percentile(g2g, 50.0), percentile(g2g, 95.0)};
  r.telemetry_rtt_ms = {percentile(rtt, 50.0), percentile(rtt, 95.0)};
  return r;
}

}  // namespace sentry
