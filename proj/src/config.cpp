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
#include "sentry/config.hpp"

#include <cmath>

#include <json.hpp>

#include "sentry/errors.hpp"
#include "sentry/io.hpp"

namespace sentry {

using json = nlohmann::json;

namespace {

template <typename T>
T get_field(const json& obj, const char* key, const std::string& path, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const std::string field = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(field, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(field, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(field, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned()) throw ConfigError(field, "expected a non-negative integer");
      }
    } else {
      if (!it->is_number()) throw ConfigError(field, "expected a number");
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_object()) throw ConfigError(key, "expected an object");
  return *it;
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || p == kSyntheticRig) return p;
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (base / path).lexically_normal().string();
}

void check(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

void RunConfig::validate() const {
  check(detector.type == "oracle" || detector.type == "blob", "detector.type", "expected \"oracle\" or \"blob\"");
  check(detector.oracle.jitter_px >= 0.0, "detector.jitter_px", "must be >= 0");
  check(detector.oracle.dropout_prob >= 0.0 && detector.oracle.dropout_prob <= 1.0, "detector.dropout_prob",
        "must be in [0, 1]");
  check(detector.oracle.false_positive_rate >= 0.0, "detector.false_positive_rate", "must be >= 0");
  check(detector.blob.min_area_px >= 1, "detector.min_area_px", "must be >= 1");
  check(!detector.blob.label.empty(), "detector.label", "must not be empty");
  check(control.kp > 0.0 && control.kp <= 1.0, "control.kp", "must be in (0, 1]");
  check(control.deadband_deg >= 0.0, "control.deadband_deg", "must be >= 0");
  check(control.loss_timeout_frames >= 1, "control.loss_timeout_frames", "must be >= 1");
  check(port >= 0 && port <= 65535, "service.port", "must be in [0, 65535]");
  check(std::isfinite(fps) && fps > 0.0 && fps <= 60.0, "service.fps", "must be in (0, 60]");
  check(jpeg_quality >= 1 && jpeg_quality <= 100, "service.jpeg_quality", "must be in [1, 100]");
  check(std::isfinite(zoom) && zoom >= 1.0 && zoom <= 1.6, "service.zoom", "must be in [1, 1.6]");
  check(!serial_port || (*serial_port >= 0 && *serial_port <= 65535), "serial_port", "must be in [0, 65535]");
  check(match.block >= 3 && match.block % 2 == 1, "stereo.block_size", "must be odd and >= 3");
  check(match.min_d >= 0 && match.max_d > match.min_d, "stereo.max_disparity",
        "must exceed min_disparity");
  check(match.uniqueness_ratio > 0.0 && match.uniqueness_ratio <= 1.0, "stereo.uniqueness", "must be in (0, 1]");
  if (!scene_path.empty()) {
    check(std::filesystem::is_regular_file(scene_path), "scene", "file not found: " + scene_path);
  }
  if (rig != kSyntheticRig) {
    check(std::filesystem::is_regular_file(rig), "rig", "file not found: " + rig);
  }
  try {
    vocabulary_for(*this);
  } catch (const PreconditionError& e) {
    throw ConfigError("detector.vocabulary", e.what());
  }
}

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config", "not valid JSON");
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");

  RunConfig c;
  c.scene_path = resolve(get_field<std::string>(j, "scene", "", ""), base_dir);
  c.rig = resolve(get_field<std::string>(j, "rig", "", kSyntheticRig), base_dir);
  c.seed = get_field<std::uint64_t>(j, "seed", "", c.seed);
  if (j.contains("serial_port") && j.at("serial_port").is_null()) {
    c.serial_port.reset();
  } else {
    c.serial_port = get_field<int>(j, "serial_port", "", kDefaultSerialPort);
  }

  const json& d = section(j, "detector");
  c.detector.type = get_field<std::string>(d, "type", "detector", c.detector.type);
  auto& o = c.detector.oracle;
  o.jitter_px = get_field<double>(d, "jitter_px", "detector", o.jitter_px);
  o.dropout_prob = get_field<double>(d, "dropout_prob", "detector", o.dropout_prob);
  o.false_positive_rate = get_field<double>(d, "false_positive_rate", "detector", o.false_positive_rate);
  o.seed = get_field<std::uint64_t>(d, "seed", "detector", c.seed);
  auto& b = c.detector.blob;
  b.hue_min_deg = get_field<double>(d, "hue_min_deg", "detector", b.hue_min_deg);
  b.hue_max_deg = get_field<double>(d, "hue_max_deg", "detector", b.hue_max_deg);
  b.min_saturation = get_field<double>(d, "min_saturation", "detector", b.min_saturation);
  b.min_value = get_field<double>(d, "min_value", "detector", b.min_value);
  b.min_area_px = get_field<int>(d, "min_area_px", "detector", b.min_area_px);
  b.label = get_field<std::string>(d, "label", "detector", b.label);
  if (auto it = d.find("vocabulary"); it != d.end()) {
    if (!it->is_array()) throw ConfigError("detector.vocabulary", "expected a list of strings");
    for (const auto& v : *it) {
      if (!v.is_string()) throw ConfigError("detector.vocabulary", "expected a list of strings");
      c.detector.vocabulary.push_back(v.get<std::string>());
    }
  }

  const json& ctl = section(j, "control");
  c.control.kp = get_field<double>(ctl, "kp", "control", c.control.kp);
  c.control.deadband_deg = get_field<double>(ctl, "deadband_deg", "control", c.control.deadband_deg);
  c.control.loss_timeout_frames =
      get_field<int>(ctl, "loss_timeout_frames", "control", c.control.loss_timeout_frames);

  const json& s = section(j, "service");
  c.host = get_field<std::string>(s, "host", "service", c.host);
  c.port = get_field<int>(s, "port", "service", c.port);
  c.fps = get_field<double>(s, "fps", "service", c.fps);
  c.jpeg_quality = get_field<int>(s, "jpeg_quality", "service", c.jpeg_quality);
  c.zoom = get_field<double>(s, "zoom", "service", c.zoom);
  c.console_dir = resolve(get_field<std::string>(s, "console_dir", "service", ""), base_dir);

  const json& st = section(j, "stereo");
  c.depth = get_field<bool>(st, "enabled", "stereo", c.depth);
  c.match.block = get_field<int>(st, "block_size", "stereo", c.match.block);
  c.match.min_d = get_field<int>(st, "min_disparity", "stereo", c.match.min_d);
  c.match.max_d = get_field<int>(st, "max_disparity", "stereo", c.match.max_d);
  c.match.uniqueness_ratio = get_field<double>(st, "uniqueness", "stereo", c.match.uniqueness_ratio);
  c.match.lr_tolerance = get_field<double>(st, "lr_tolerance", "stereo", c.match.lr_tolerance);

  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config", "file not found: " + path.string());
  return run_config_from_json(io::read_file(path), path.parent_path());
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["scene"] = c.scene_path;
  j["rig"] = c.rig;
  j["seed"] = c.seed;
  j["serial_port"] = c.serial_port ? json(*c.serial_port) : json(nullptr);
  const auto& o = c.detector.oracle;
  const auto& b = c.detector.blob;
  j["detector"] = {{"type", c.detector.type},
                   {"jitter_px", o.jitter_px},
                   {"dropout_prob", o.dropout_prob},
                   {"false_positive_rate", o.false_positive_rate},
                   {"seed", o.seed},
                   {"hue_min_deg", b.hue_min_deg},
                   {"hue_max_deg", b.hue_max_deg},
                   {"min_saturation", b.min_saturation},
                   {"min_value", b.min_value},
                   {"min_area_px", b.min_area_px},
                   {"label", b.label},
                   {"vocabulary", c.detector.vocabulary}};
  j["control"] = {{"kp", c.control.kp},
                  {"deadband_deg", c.control.deadband_deg},
                  {"loss_timeout_frames", c.control.loss_timeout_frames}};
  j["service"] = {{"host", c.host},
                  {"port", c.port},
                  {"fps", c.fps},
                  {"jpeg_quality", c.jpeg_quality},
                  {"zoom", c.zoom},
                  {"console_dir", c.console_dir}};
  j["stereo"] = {{"enabled", c.depth},
                 {"block_size", c.match.block},
                 {"min_disparity", c.match.min_d},
                 {"max_disparity", c.match.max_d},
                 {"uniqueness", c.match.uniqueness_ratio},
                 {"lr_tolerance", c.match.lr_tolerance}};
  return j.dump(2);
}

Scene load_scene(const RunConfig& cfg) {
  if (cfg.scene_path.empty()) return default_scene();
  if (!std::filesystem::is_regular_file(cfg.scene_path)) {
    throw ConfigError("scene", "file not found: " + cfg.scene_path);
  }
  try {
    return scene_from_json(io::read_file(cfg.scene_path));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("scene", cfg.scene_path + ": " + e.what());
  }
}

StereoRig load_rig_for(const RunConfig& cfg) {
  if (cfg.rig == kSyntheticRig) return StereoRig::parallel(default_intrinsics(), kDefaultBaseline);
  try {
    return io::load_rig(cfg.rig);
  } catch (const Error& e) {
    throw ConfigError("rig", cfg.rig + ": " + e.what());
  }
}

LabelVocabulary vocabulary_for(const RunConfig& cfg) {
  std::vector<std::string> labels = cfg.detector.vocabulary;
  if (labels.empty()) labels = LabelVocabulary().labels();
  if (cfg.detector.type == "blob" && !LabelVocabulary(labels).contains(cfg.detector.blob.label)) {
    labels.push_back(cfg.detector.blob.label);
  }
  return LabelVocabulary(std::move(labels));
}

std::unique_ptr<Detector> make_detector(const RunConfig& cfg, int width, int height) {
  if (cfg.detector.type == "blob") return std::make_unique<BlobDetector>(cfg.detector.blob);
  OracleConfig o = cfg.detector.oracle;
  o.image_width = width;
  o.image_height = height;
  return std::make_unique<OracleDetector>(o, vocabulary_for(cfg));
}

Scene default_scene() {
  Scene scene;
  SceneObject wall;
  wall.shape = QuadShape{Vec3(0.0, 0.0, 6.0), Vec3(14.0, 0.0, 0.0), Vec3(0.0, 8.0, 0.0)};
  wall.texture = NoiseTexture{7, 0.05};
  wall.color = Vec3(0.85, 0.8, 0.7);
  scene.objects.push_back(wall);

  SceneObject person;
  person.label = "person";
  person.shape = QuadShape{Vec3(0.0, 0.0, 2.0), Vec3(0.5, 0.0, 0.0), Vec3(0.0, 1.7, 0.0)};
  person.texture = NoiseTexture{3, 0.03};
  person.color = Vec3(0.3, 0.45, 0.9);
  person.billboard = true;
  OrbitTrajectory orbit;
  orbit.radius = 2.0;
  orbit.rate_deg_s = 20.0;
  orbit.arc_min_deg = -60.0;
  orbit.arc_max_deg = 60.0;
  person.trajectory = orbit;
  scene.objects.push_back(person);

  SceneObject ball;
  ball.shape = SphereShape{Vec3(0.9, 0.35, 3.0), 0.15};
  ball.texture = CheckerTexture{0.05};
  ball.color = Vec3(0.95, 0.1, 0.1);
  scene.objects.push_back(ball);
  return scene;
}

}  // namespace sentry
