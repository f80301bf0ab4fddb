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
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "sentry/config.hpp"

namespace sentry {

struct MultipartPart {
  std::map<std::string, std::string> headers;  // names lower-cased
  std::string body;
};

/// Incremental reader for a multipart/x-mixed-replace body. Every part must
/// carry Content-Length. Throws ParseError on a grammar violation.
class MultipartReader {
 public:
  using Callback = std::function<void(MultipartPart&&)>;
  MultipartReader(std::string boundary, Callback on_part);

  void feed(std::string_view bytes);
  std::uint64_t parts() const { return parts_; }

 private:
  enum class State { Boundary, Headers, Body, Trailer };
  std::string delimiter_;
  Callback on_part_;
  State state_ = State::Boundary;
  std::string buffer_;
  MultipartPart current_;
  std::size_t body_length_ = 0;
  std::uint64_t consumed_ = 0;
  std::uint64_t parts_ = 0;
};

struct Percentiles {
  double p50 = 0.0;
  double p95 = 0.0;
};

struct BenchReport {
  double duration_s = 0.0;
  double fps = 0.0;          // frames received by the loopback client per second
  double depth_fps = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t telemetry_posts = 0;
  Percentiles pipeline_ms;
  Percentiles glass_to_glass_ms;
  Percentiles telemetry_rtt_ms;
};

std::string bench_report_json(const BenchReport& r);

/// Runs the full stack on a free loopback port with an in-process stream
/// client and a 30 Hz telemetry poster. Throws Error on runtime failure.
BenchReport run_bench(RunConfig cfg, double duration_s);

}  // namespace sentry
