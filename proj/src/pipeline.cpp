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
#include "sentry/pipeline.hpp"

#include <sys/resource.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sentry/errors.hpp"
#include "sentry/jpeg.hpp"

namespace sentry {

namespace {

void lower_thread_priority(int nice_value) {
  const auto tid = static_cast<id_t>(::syscall(SYS_gettid));
  ::setpriority(PRIO_PROCESS, tid, nice_value);
}

}  // namespace

void LatencyWindow::add(double v) {
  std::lock_guard lock(mutex_);
  samples_.push_back(v);
  while (samples_.size() > capacity_) samples_.pop_front();
}

double LatencyWindow::percentile(double p) const {
  std::vector<double> copy;
  {
    std::lock_guard lock(mutex_);
    copy.assign(samples_.begin(), samples_.end());
  }
  return sentry::percentile(std::move(copy), p);
}

std::size_t LatencyWindow::size() const {
  std::lock_guard lock(mutex_);
  return samples_.size();
}

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double rank = std::ceil(std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(samples.size()));
  const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return samples[std::min(idx, samples.size() - 1)];
}

void RateMeter::mark(double now_ms) {
  std::lock_guard lock(mutex_);
  stamps_.push_back(now_ms);
  while (!stamps_.empty() && stamps_.front() <= now_ms - 1000.0) stamps_.pop_front();
}

double RateMeter::rate(double now_ms) const {
  std::lock_guard lock(mutex_);
  return static_cast<double>(
      std::count_if(stamps_.begin(), stamps_.end(), [&](double t) { return t > now_ms - 1000.0; }));
}

Runtime::Runtime(RunConfig cfg)
    : cfg_(std::move(cfg)),
      rig_(load_rig_for(cfg_)),
      vocabulary_(vocabulary_for(cfg_)),
      renderer_(rig_),
      detector_(make_detector(cfg_, rig_.left.width, rig_.left.height)),
      controller_(rig_.left, cfg_.control),
      scene_(load_scene(cfg_)) {
  cfg_.validate();
  if (cfg_.depth) depth_pipeline_ = std::make_unique<StereoPipeline>(rig_, cfg_.match);
  renderer_.render(scene_, {});  // builds texture caches
  zoom_ = cfg_.zoom;
  ServiceConfig sc;
  sc.host = cfg_.host;
  sc.port = cfg_.port;
  sc.console_dir = cfg_.console_dir;
  service_ = std::make_unique<Service>(*this, sc);
}

Runtime::~Runtime() { stop(); }

void Runtime::start() {
  if (running_) return;
  bus_.reopen();
  if (cfg_.serial_port) serial_.start(*cfg_.serial_port);
  try {
    service_->start();
  } catch (...) {
    serial_.stop();
    throw;
  }
  running_ = true;
  control_thread_ = std::thread([this] { control_loop(); });
  render_thread_ = std::thread([this] { render_loop(); });
  if (depth_pipeline_) depth_thread_ = std::thread([this] { depth_loop(); });
}

void Runtime::stop() {
  if (!running_.exchange(false)) return;
  bus_.close();
  service_->stop();
  for (auto* t : {&control_thread_, &render_thread_, &depth_thread_}) {
    if (t->joinable()) t->join();
  }
  serial_.stop();
}

int Runtime::http_port() const { return service_->port(); }

int Runtime::serial_port() const { return serial_.port(); }

RuntimeStats Runtime::stats() const {
  const double now = monotonic_ms_precise();
  RuntimeStats s;
  s.frames = bus_.published();
  s.fps_1s = frame_rate_.rate(now);
  s.depth_fps = depth_rate_.rate(now);
  s.pipeline_p50_ms = pipeline_ms_.percentile(50.0);
  s.pipeline_p95_ms = pipeline_ms_.percentile(95.0);
  s.depth_frames = depth_frames_;
  return s;
}

StatusSnapshot Runtime::status() const {
  StatusSnapshot s;
  const RuntimeStats st = stats();
  if (auto f = bus_.latest()) s.seq = f->seq;
  s.control = controller_.status();
  s.mode = s.control.mode;
  {
    std::lock_guard lock(gimbal_mutex_);
    s.gimbal = gimbal_.current;
  }
  s.fps_1s = st.fps_1s;
  s.depth_fps = st.depth_fps;
  s.latency_p50_ms = st.pipeline_p50_ms;
  s.latency_p95_ms = st.pipeline_p95_ms;
  {
    std::lock_guard lock(shared_mutex_);
    s.detections = detections_;
  }
  s.zoom = zoom_;
  s.vocabulary = vocabulary_.labels();
  return s;
}

TelemetryResult Runtime::submit_head_pose(const HeadPose& pose) { return controller_.submit_head_pose(pose); }

void Runtime::set_mode(const ControlMode& mode) {
  if (mode.tracking() && !vocabulary_.contains(mode.target_label)) {
    throw PreconditionError("target \"" + mode.target_label + "\" is not in the vocabulary");
  }
  controller_.set_mode(mode);
}

bool Runtime::label_known(const std::string& label) const { return vocabulary_.contains(label); }

void Runtime::set_zoom(double zoom) {
  if (!std::isfinite(zoom)) return;
  zoom_ = std::clamp(zoom, kMinZoom, kMaxZoom);
}

void Runtime::control_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(kControlTickSec));
  auto next = clock::now();
  std::uint64_t serial_seq = 0;
  std::optional<GimbalAngles> last_sent;
  while (running_) {
    GimbalAngles current;
    {
      std::lock_guard lock(gimbal_mutex_);
      current = gimbal_.current;
    }
    const GimbalAngles targets = controller_.step(current);
    {
      std::lock_guard lock(gimbal_mutex_);
      gimbal_ = tick(set_target(gimbal_, targets.yaw, targets.pitch, targets.roll));
    }
    if (!last_sent || !(*last_sent == targets)) {
      serial_.publish(encode_command({++serial_seq, targets.yaw, targets.pitch, targets.roll}));
      last_sent = targets;
    }
    next += period;
    const auto now = clock::now();
    if (next < now - period) next = now;
    std::this_thread::sleep_until(next);
  }
}

void Runtime::attach_distances(std::vector<Detection>& dets) const {
  std::shared_ptr<const DepthMap> depth;
  {
    std::lock_guard lock(shared_mutex_);
    depth = depth_;
  }
  for (auto& d : dets) {
    d.distance_m.reset();
    if (!depth || !depth_pipeline_) continue;
    const auto& maps = depth_pipeline_->maps();
    const Vec2 a = rectify_point({d.bbox.u_min, d.bbox.v_min}, rig_.left, maps.rot_left, maps.new_intrinsics);
    const Vec2 b = rectify_point({d.bbox.u_max, d.bbox.v_max}, rig_.left, maps.rot_left, maps.new_intrinsics);
    const BBox box{std::min(a.x(), b.x()), std::min(a.y(), b.y()), std::max(a.x(), b.x()), std::max(a.y(), b.y())};
    try {
      d.distance_m = region_distance(*depth, box);
    } catch (const Error&) {
    }
  }
}

void Runtime::render_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / cfg_.fps));
  auto next = clock::now();
  auto last = clock::now();
  std::uint64_t seq = 0;
  while (running_) {
    const double t0 = monotonic_ms_precise();
    const auto wall = clock::now();
    const double dt = std::chrono::duration<double>(wall - last).count();
    last = wall;
    scene_ = step_scene(scene_, std::clamp(dt, 0.0, 0.5));

    GimbalAngles angles;
    {
      std::lock_guard lock(gimbal_mutex_);
      angles = gimbal_.current;
    }
    StereoFrame frame = renderer_.render(scene_, angles);
    std::vector<Detection> dets = detector_->detect(frame.left, frame.gt_detections, seq + 1);
    attach_distances(dets);
    controller_.submit_detections(dets);

    auto composed = std::make_shared<ComposedFrame>();
    composed->seq = ++seq;
    composed->capture_time_ms = static_cast<std::int64_t>(std::floor(t0));
    composed->image = compose_frame(frame.left, frame.right, zoom_);
    composed->jpeg = encode_jpeg(composed->image, cfg_.jpeg_quality);
    composed->part = format_mjpeg_part(composed->jpeg, composed->seq, composed->capture_time_ms);
    composed->mode = controller_.mode();
    composed->gimbal = angles;
    composed->detections = dets;
    const double t1 = monotonic_ms_precise();
    pipeline_ms_.add(t1 - t0);
    {
      std::lock_guard lock(shared_mutex_);
      detections_ = std::move(dets);
    }
    bus_.publish(std::move(composed));
    frame_rate_.mark(t1);

    if (depth_pipeline_) {
      depth_inbox_.put(std::make_shared<const StereoPair>(StereoPair{std::move(frame.left), std::move(frame.right)}));
    }

    next += period;
    const auto now = clock::now();
    if (next < now - period) next = now;
    std::this_thread::sleep_until(next);
  }
}

void Runtime::depth_loop() {
  lower_thread_priority(19);
  while (running_) {
    auto pair = depth_inbox_.take_wait(std::chrono::milliseconds(100));
    if (!pair || !*pair) continue;
    auto depth = std::make_shared<const DepthMap>(depth_pipeline_->depth((*pair)->left, (*pair)->right));
    {
      std::lock_guard lock(shared_mutex_);
      depth_ = std::move(depth);
    }
    ++depth_frames_;
    depth_rate_.mark(monotonic_ms_precise());
  }
}

TrackingRun simulate_tracking(Scene scene, const StereoRig& rig, const std::string& label, TrackerGains gains,
                              OracleConfig oracle, double duration_s, double transient_s,
                              double central_fraction) {
  if (duration_s <= 0.0 || transient_s < 0.0) throw PreconditionError("durations must be positive");
  const StereoRenderer renderer(rig);
  Controller controller(rig.left, gains);
  controller.set_mode(ControlMode::track(label));
  oracle.image_width = rig.left.width;
  oracle.image_height = rig.left.height;
  GimbalState gimbal;

  const int transient_ticks = static_cast<int>(std::lround(transient_s / kControlTickSec));
  const int total_ticks = transient_ticks + static_cast<int>(std::lround(duration_s / kControlTickSec));
  const double half_w = 0.5 * central_fraction * rig.left.width;
  const double half_h = 0.5 * central_fraction * rig.left.height;
  const Vec2 principal(rig.left.width / 2.0, rig.left.height / 2.0);

  TrackingRun run;
  for (int i = 0; i < total_ticks; ++i) {
    const auto gt = renderer.ground_truth(scene, gimbal.current);
    std::optional<Vec2> center;
    for (const auto& d : gt) {
      if (d.label == label) {
        center = d.bbox.center();
        break;
      }
    }
    run.centers.push_back(center);
    run.gimbal.push_back(gimbal.current);
    if (i >= transient_ticks) {
      ++run.frames;
      if (center && std::abs(center->x() - principal.x()) <= half_w &&
          std::abs(center->y() - principal.y()) <= half_h) {
        ++run.centered;
      }
    }
    controller.submit_detections(detect_oracle(gt, oracle, static_cast<std::uint64_t>(i)));
    const GimbalAngles t = controller.step(gimbal.current);
    gimbal = tick(set_target(gimbal, t.yaw, t.pitch, t.roll));
    scene = step_scene(scene, kControlTickSec);
  }
  run.fraction = run.frames > 0 ? static_cast<double>(run.centered) / run.frames : 0.0;
  return run;
}

}  // namespace sentry
