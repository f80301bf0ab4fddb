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
#include <mutex>
#include <optional>

namespace sentry {

/// Single-slot, latest-wins handoff: a new value replaces any unread one.
template <typename T>
class Mailbox {
 public:
  void put(T value) {
    {
      std::lock_guard lock(mutex_);
      slot_ = std::move(value);
      ++version_;
    }
    cv_.notify_all();
  }

  /// Removes and returns the pending value, if any.
  std::optional<T> take() {
    std::lock_guard lock(mutex_);
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }

  /// Latest value without consuming it.
  std::optional<T> peek() const {
    std::lock_guard lock(mutex_);
    return slot_;
  }

  std::uint64_t version() const {
    std::lock_guard lock(mutex_);
    return version_;
  }

  /// Waits until a value is pending or the timeout expires.
  template <typename Rep, typename Period>
  std::optional<T> take_wait(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return slot_.has_value(); });
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<T> slot_;
  std::uint64_t version_ = 0;
};

}  // namespace sentry
