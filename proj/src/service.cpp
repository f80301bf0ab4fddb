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
#include "sentry/service.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <httplib.h>
#include <json.hpp>

#include "sentry/errors.hpp"

namespace sentry {

using ojson = nlohmann::ordered_json;

namespace {

void zoom_eye(const ImageBuffer& src, double zoom, ImageBuffer& out, int x_offset) {
  const int w = src.width;
  const int h = src.height;
  const int c = src.channels;
  if (zoom == 1.0) {
    for (int v = 0; v < h; ++v) {
      std::copy_n(src.pixels.data() + src.index(0, v), static_cast<std::size_t>(w) * c,
                  out.pixels.data() + out.index(x_offset, v));
    }
    return;
  }
  const double crop_w = w / zoom;
  const double crop_h = h / zoom;
  const double x0 = (w - crop_w) / 2.0;
  const double y0 = (h - crop_h) / 2.0;
  const double sx = crop_w / w;
  const double sy = crop_h / h;

  std::vector<int> xi0(w), xi1(w);
  std::vector<int> fx(w);
  for (int x = 0; x < w; ++x) {
    double s = std::clamp(x0 + (x + 0.5) * sx - 0.5, 0.0, w - 1.0);
    int i = static_cast<int>(s);
    xi0[x] = i;
    xi1[x] = std::min(i + 1, w - 1);
    fx[x] = static_cast<int>(std::lround((s - i) * 256.0));
  }
  for (int y = 0; y < h; ++y) {
    double s = std::clamp(y0 + (y + 0.5) * sy - 0.5, 0.0, h - 1.0);
    int j = static_cast<int>(s);
    int j1 = std::min(j + 1, h - 1);
    int fy = static_cast<int>(std::lround((s - j) * 256.0));
    const std::uint8_t* r0 = src.pixels.data() + src.index(0, j);
    const std::uint8_t* r1 = src.pixels.data() + src.index(0, j1);
    std::uint8_t* dst = out.pixels.data() + out.index(x_offset, y);
    for (int x = 0; x < w; ++x) {
      const int a = xi0[x] * c;
      const int b = xi1[x] * c;
      const int wx = fx[x];
      for (int k = 0; k < c; ++k) {
        int top = r0[a + k] * (256 - wx) + r0[b + k] * wx;
        int bot = r1[a + k] * (256 - wx) + r1[b + k] * wx;
        int val = top * (256 - fy) + bot * fy;
        dst[x * c + k] = static_cast<std::uint8_t>((val + (1 << 15)) >> 16);
      }
    }
  }
}

ojson angles_json(const GimbalAngles& a) { return ojson{{"yaw", a.yaw}, {"pitch", a.pitch}, {"roll", a.roll}}; }

std::string error_body(const std::string& msg) { return ojson{{"error", msg}}.dump(); }

}  // namespace

ImageBuffer compose_frame(const ImageBuffer& left, const ImageBuffer& right, double zoom) {
  if (left.empty() || left.width != right.width || left.height != right.height ||
      left.channels != right.channels) {
    throw PreconditionError("compose_frame needs two non-empty images of equal size");
  }
  if (!std::isfinite(zoom)) zoom = kMinZoom;
  zoom = std::clamp(zoom, kMinZoom, kMaxZoom);
  ImageBuffer out(left.width * 2, left.height, left.channels);
  zoom_eye(left, zoom, out, 0);
  zoom_eye(right, zoom, out, left.width);
  return out;
}

std::string format_mjpeg_part(const std::string& jpeg, std::uint64_t seq, std::int64_t capture_ms) {
  char head[256];
  const int n = std::snprintf(head, sizeof(head),
                              "--%s\r\nContent-Type: image/jpeg\r\nContent-Length: %zu\r\n"
                              "X-Seq: %llu\r\nX-Capture-Ms: %lld\r\n\r\n",
                              kBoundary, jpeg.size(), static_cast<unsigned long long>(seq),
                              static_cast<long long>(capture_ms));
  std::string part;
  part.reserve(static_cast<std::size_t>(n) + jpeg.size() + 2);
  part.append(head, static_cast<std::size_t>(n));
  part.append(jpeg);
  part.append("\r\n");
  return part;
}

std::string status_json(const StatusSnapshot& s) {
  ojson dets = ojson::array();
  for (const auto& d : s.detections) {
    ojson j{{"label", d.label},
            {"confidence", d.confidence},
            {"bbox", ojson::array({d.bbox.u_min, d.bbox.v_min, d.bbox.u_max, d.bbox.v_max})}};
    j["distance_m"] = d.distance_m ? ojson(*d.distance_m) : ojson(nullptr);
    dets.push_back(std::move(j));
  }
  ojson j;
  j["seq"] = s.seq;
  j["mode"] = s.mode.tracking() ? "track" : "vr";
  j["target"] = s.mode.tracking() ? ojson(s.mode.target_label) : ojson(nullptr);
  j["gimbal"] = angles_json(s.gimbal);
  j["fps_1s"] = s.fps_1s;
  j["latency_ms_p50_p95"] = ojson::array({s.latency_p50_ms, s.latency_p95_ms});
  j["detections"] = std::move(dets);
  j["depth_fps"] = s.depth_fps;
  j["zoom"] = s.zoom;
  j["telemetry"] = ojson{{"last_seq", s.control.last_seq},
                         {"applied", s.control.telemetry_applied},
                         {"stale", s.control.telemetry_stale},
                         {"in_track_mode", s.control.telemetry_in_track_mode}};
  j["vocabulary"] = s.vocabulary;
  return j.dump();
}

HeadPose parse_telemetry(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw RequestError("telemetry body is not valid JSON");
  if (!j.is_object()) throw RequestError("telemetry body must be an object");
  HeadPose p;
  auto angle = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw RequestError(std::string(key) + " must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) throw RequestError(std::string(key) + " must be finite");
    return v;
  };
  p.yaw = angle("yaw");
  p.pitch = angle("pitch");
  p.roll = angle("roll");
  auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_unsigned()) {
    throw RequestError("seq must be a non-negative integer");
  }
  p.seq = seq->get<std::uint64_t>();
  auto t = j.find("t_ms");
  if (t != j.end()) {
    if (!t->is_number_integer()) throw RequestError("t_ms must be an integer");
    p.client_time_ms = t->get<std::int64_t>();
  }
  return p;
}

ModeRequest parse_mode_request(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw RequestError("mode body must be a JSON object");
  auto m = j.find("mode");
  if (m == j.end() || !m->is_string()) throw RequestError("mode must be \"vr\" or \"track\"");
  ModeRequest req;
  const auto name = m->get<std::string>();
  auto target = j.find("target");
  if (name == "vr") {
    req.mode = ControlMode::vr();
  } else if (name == "track") {
    if (target == j.end() || !target->is_string() || target->get<std::string>().empty()) {
      throw RequestError("track mode needs a target label");
    }
    req.mode = ControlMode::track(target->get<std::string>());
  } else {
    throw RequestError("unknown mode \"" + name + "\"");
  }
  auto z = j.find("zoom");
  if (z != j.end()) {
    if (!z->is_number() || !std::isfinite(z->get<double>())) throw RequestError("zoom must be a number");
    req.zoom = z->get<double>();
  }
  return req;
}

struct Service::Impl {
  httplib::Server server;
};

Service::Service(ServiceBackend& backend, ServiceConfig cfg)
    : backend_(backend), cfg_(std::move(cfg)), impl_(std::make_unique<Impl>()) {}

Service::~Service() { stop(); }

void Service::start() {
  if (running_) return;
  stopping_ = false;
  auto& svr = impl_->server;
  const int sndbuf = cfg_.send_buffer_bytes;
  svr.set_socket_options([sndbuf](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    if (sndbuf > 0) setsockopt(sock, SOL_SOCKET, SO_SNDBUF, &sndbuf, sizeof(sndbuf));
  });
  svr.set_tcp_nodelay(true);
  svr.set_keep_alive_max_count(100000);
  svr.new_task_queue = [] { return new httplib::ThreadPool(16); };

  svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  svr.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    res.set_header("Cache-Control", "no-store");
    res.set_content(status_json(backend_.status()), "application/json");
  });

  svr.Post("/telemetry", [this](const httplib::Request& req, httplib::Response& res) {
    HeadPose pose;
    try {
      pose = parse_telemetry(req.body);
    } catch (const RequestError& e) {
      res.status = 400;
      res.set_content(error_body(e.what()), "application/json");
      return;
    }
    if (backend_.submit_head_pose(pose) == TelemetryResult::Stale) {
      res.status = 409;
      res.set_content(error_body("stale seq"), "application/json");
      return;
    }
    res.status = 204;
  });

  svr.Post("/mode", [this](const httplib::Request& req, httplib::Response& res) {
    ModeRequest mr;
    try {
      mr = parse_mode_request(req.body);
    } catch (const RequestError& e) {
      res.status = 400;
      res.set_content(error_body(e.what()), "application/json");
      return;
    }
    if (mr.mode.tracking() && !backend_.label_known(mr.mode.target_label)) {
      res.status = 400;
      res.set_content(error_body("target \"" + mr.mode.target_label + "\" is not in the vocabulary"),
                      "application/json");
      return;
    }
    if (mr.zoom) backend_.set_zoom(*mr.zoom);
    backend_.set_mode(mr.mode);
    res.status = 204;
  });

  svr.Get("/stream", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.has_param("zoom")) {
      try {
        backend_.set_zoom(std::stod(req.get_param_value("zoom")));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(error_body("zoom must be a number"), "application/json");
        return;
      }
    }
    res.set_header("Cache-Control", "no-cache, no-store");
    res.set_header("Pragma", "no-cache");
    auto sub = std::make_shared<FrameBus::Subscription>(backend_.frames());
    res.set_content_provider(std::string("multipart/x-mixed-replace; boundary=") + kBoundary,
                             [this, sub](std::size_t, httplib::DataSink& sink) {
                               if (stopping_) return false;
                               FramePtr f = sub->next(std::chrono::milliseconds(200));
                               if (!f) return !stopping_ && !backend_.frames().closed();
                               return sink.write(f->part.data(), f->part.size());
                             });
  });

  if (!cfg_.console_dir.empty() && std::filesystem::is_directory(cfg_.console_dir)) {
    svr.set_mount_point("/", cfg_.console_dir);
  } else {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          "<!doctype html><html><head><title>sentry</title></head><body>"
          "<h1>sentry</h1><img src=\"/stream\" alt=\"stereo stream\" style=\"max-width:100%\">"
          "<p><a href=\"/status\">status</a></p></body></html>",
          "text/html");
    });
  }

  if (cfg_.port == 0) {
    port_ = svr.bind_to_any_port(cfg_.host);
    if (port_ <= 0) throw Error("cannot bind HTTP server on " + cfg_.host);
  } else {
    if (!svr.bind_to_port(cfg_.host, cfg_.port)) {
      throw Error("cannot bind HTTP server on " + cfg_.host + ":" + std::to_string(cfg_.port));
    }
    port_ = cfg_.port;
  }
  running_ = true;
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::stop() {
  if (!running_) return;
  stopping_ = true;
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
  running_ = false;
}

}  // namespace sentry
