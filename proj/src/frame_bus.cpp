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
#include "sentry/frame_bus.hpp"

#include "sentry/errors.hpp"

namespace sentry {

void FrameBus::publish(FramePtr frame) {
  if (!frame) throw PreconditionError("cannot publish an empty frame");
  {
    std::lock_guard lock(mutex_);
    if (latest_ && frame->seq <= latest_->seq) {
      throw PreconditionError("frame seq must increase");
    }
    latest_ = std::move(frame);
    ++published_;
  }
  cv_.notify_all();
}

FramePtr FrameBus::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

FramePtr FrameBus::wait_next(std::uint64_t after_seq, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  const bool ready = cv_.wait_for(lock, timeout, [&] {
    return closed_ || (latest_ && latest_->seq > after_seq);
  });
  if (!ready || closed_) return nullptr;
  return latest_;
}

void FrameBus::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

void FrameBus::reopen() {
  std::lock_guard lock(mutex_);
  closed_ = false;
}

bool FrameBus::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t FrameBus::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_;
}

std::uint64_t FrameBus::published() const {
  std::lock_guard lock(mutex_);
  return published_;
}

FrameBus::Subscription::Subscription(const FrameBus& bus) : bus_(bus) {
  std::lock_guard lock(bus_.mutex_);
  ++bus_.subscribers_;
}

FrameBus::Subscription::~Subscription() {
  std::lock_guard lock(bus_.mutex_);
  --bus_.subscribers_;
}

FramePtr FrameBus::Subscription::next(std::chrono::milliseconds timeout) {
  FramePtr f = bus_.wait_next(cursor_, timeout);
  if (f) cursor_ = f->seq;
  return f;
}

std::int64_t monotonic_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

double monotonic_ms_precise() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace sentry
