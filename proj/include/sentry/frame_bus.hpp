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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sentry/camera_model.hpp"
#include "sentry/control.hpp"
#include "sentry/detect.hpp"
#include "sentry/gimbal.hpp"

namespace sentry {

/// One side-by-side frame as handed to stream clients.
struct ComposedFrame {
  std::uint64_t seq = 0;
  std::int64_t capture_time_ms = 0;  // monotonic clock
  ImageBuffer image;                 // left|right, RGB
  std::string jpeg;
  std::string part;  // ready-to-send multipart chunk
  ControlMode mode;
  GimbalAngles gimbal;
  std::vector<Detection> detections;
};

using FramePtr = std::shared_ptr<const ComposedFrame>;

/// Latest-wins single slot. Readers wait for a seq newer than the one they
/// last saw, so they can skip frames but never see one twice.
class FrameBus {
 public:
  /// Throws PreconditionError if seq does not increase.
  void publish(FramePtr frame);

  FramePtr latest() const;

  /// Next frame with seq > after_seq, or nullptr on timeout / close.
  FramePtr wait_next(std::uint64_t after_seq, std::chrono::milliseconds timeout) const;

  /// Wakes all waiters; later waits return nullptr immediately.
  void close();
  void reopen();
  bool closed() const;

  class Subscription {
   public:
    explicit Subscription(const FrameBus& bus);
    ~Subscription();
    Subscription(const Subscription&) = delete;
    Subscription& operator=(const Subscription&) = delete;

    /// Next unseen frame; nullptr on timeout or close.
    FramePtr next(std::chrono::milliseconds timeout);
    std::uint64_t cursor() const { return cursor_; }

   private:
    const FrameBus& bus_;
    std::uint64_t cursor_ = 0;
  };

  std::size_t subscriber_count() const;
  std::uint64_t published() const;

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  FramePtr latest_;
  std::uint64_t published_ = 0;
  mutable std::size_t subscribers_ = 0;
  bool closed_ = false;
};

/// Monotonic milliseconds shared by capture stamps and clients in-process.
std::int64_t monotonic_ms();
double monotonic_ms_precise();

}  // namespace sentry
