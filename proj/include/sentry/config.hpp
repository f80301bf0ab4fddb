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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sentry/camera_model.hpp"
#include "sentry/control.hpp"
#include "sentry/detect.hpp"
#include "sentry/simworld.hpp"
#include "sentry/stereo.hpp"

namespace sentry {

inline constexpr const char* kSyntheticRig = "synthetic-default";
inline constexpr int kDefaultSerialPort = 8600;

struct DetectorConfig {
  std::string type = "oracle";  // "oracle" or "blob"
  OracleConfig oracle;
  BlobConfig blob;
  std::vector<std::string> vocabulary;  // empty: the 20 VOC classes
};

struct RunConfig {
  std::string scene_path;
  std::string rig = kSyntheticRig;
  DetectorConfig detector;
  TrackerGains control;
  std::string host = "0.0.0.0";
  int port = 8080;
  double fps = 15.0;
  int jpeg_quality = 80;
  double zoom = 1.0;
  std::string console_dir;
  std::optional<int> serial_port = kDefaultSerialPort;  // nullopt disables the bridge
  bool depth = true;
  MatchParams match;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

/// Relative paths in the file are resolved against base_dir.
/// Throws ConfigError naming the offending key.
RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

/// Scene named by the config; an empty path gives the built-in scene.
Scene load_scene(const RunConfig& cfg);
StereoRig load_rig_for(const RunConfig& cfg);
LabelVocabulary vocabulary_for(const RunConfig& cfg);
std::unique_ptr<Detector> make_detector(const RunConfig& cfg, int width, int height);

/// Built-in scene: textured wall at 6 m, a person orbiting the gimbal in a
/// +-60 degree arc at 2 m and 20 deg/s, and a red ball.
Scene default_scene();

}  // namespace sentry
