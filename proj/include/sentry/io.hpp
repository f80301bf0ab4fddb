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

#include <filesystem>
#include <string>
#include <vector>

#include "sentry/calibration.hpp"
#include "sentry/camera_model.hpp"
#include "sentry/stereo.hpp"

namespace sentry::io {

// Binary PGM (P5, gray) and PPM (P6, RGB), maxval 255.
ImageBuffer decode_pnm(const std::string& bytes);
std::string encode_pnm(const ImageBuffer& img);
ImageBuffer read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const ImageBuffer& img);

/// 8-bit disparity image: round(d * 256 / max_d) clamped to [1, 255] on
/// valid pixels, 0 on invalid ones.
ImageBuffer disparity_to_pgm(const DisparityMap& disp);
/// {min_d, max_d, block, invalid_fraction}
std::string disparity_sidecar(const DisparityMap& disp);

std::string intrinsics_to_json(const CameraIntrinsics& in);
CameraIntrinsics intrinsics_from_json(const std::string& text);
std::string rig_to_json(const StereoRig& rig);
StereoRig rig_from_json(const std::string& text);
StereoRig load_rig(const std::filesystem::path& path);
void save_rig(const std::filesystem::path& path, const StereoRig& rig);

/// One camera's views. `camera` is "left" unless the file says otherwise.
struct CorrespondenceFile {
  std::vector<CorrespondenceSet> left;
  std::vector<CorrespondenceSet> right;
};

/// JSON list of {view_id, board: [[X,Y],...], image: [[u,v],...], camera?}.
CorrespondenceFile correspondences_from_json(const std::string& text);
std::string correspondences_to_json(const CorrespondenceFile& file);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sentry::io
