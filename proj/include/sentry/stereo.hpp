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

#include <optional>
#include <vector>

#include "sentry/calibration.hpp"
#include "sentry/camera_model.hpp"

namespace sentry {

/// Left-image-referenced disparities. Invalid pixels hold 0 and a cleared
/// mask entry.
struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;
  int min_d = 0;
  int max_d = 64;
  int block = 9;

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }
  float at(int u, int v) const { return values[index(u, v)]; }
  double invalid_fraction() const;
};

struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  double focal_px = 0.0;
  double baseline_m = 0.0;

  DepthMap() = default;
  DepthMap(int w, int h);
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }
  double at(int u, int v) const { return values[index(u, v)]; }
};

struct RectifiedImage {
  ImageBuffer image;
  std::vector<std::uint8_t> valid;  // 0 where the source fell outside the input
};

/// Bilinear resampling through a remap field.
RectifiedImage rectify_image(const ImageBuffer& img, const RemapField& remap);

struct MatchParams {
  int block = 9;
  int min_d = 0;
  int max_d = 64;
  double uniqueness_ratio = 0.85;
  double lr_tolerance = 1.0;
};

/// SAD block matching with parabola sub-pixel refinement, a uniqueness test
/// and a left-right consistency check.
DisparityMap match_disparity(const ImageBuffer& left, const ImageBuffer& right, const MatchParams& params = {});

inline constexpr double kDisparityFloor = 0.5;

DepthMap depth_from_disparity(const DisparityMap& disp, double focal_px, double baseline_m,
                              double d_min_floor = kDisparityFloor);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Jet ramp at x in [0, 1].
Rgb jet(double x);

/// Min-max normalized Jet rendering; invalid pixels are black.
ImageBuffer colorize_jet(const DisparityMap& disp);

/// Pixel rectangle, inclusive minimum and exclusive maximum.
struct BBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }
  bool operator==(const BBox&) const = default;
};

inline constexpr int kMinDistanceSamples = 10;

/// Median valid depth inside the box, or nullopt with fewer than 10 samples.
/// Throws PreconditionError when the box misses the image.
std::optional<double> region_distance(const DepthMap& depth, const BBox& box);

/// Full per-frame depth pipeline for a calibrated rig: rectify, match, depth.
class StereoPipeline {
 public:
  explicit StereoPipeline(const StereoRig& rig, MatchParams params = {});

  struct Output {
    RectifiedImage left;
    RectifiedImage right;
    DisparityMap disparity;
    DepthMap depth;
  };

  Output process(const ImageBuffer& left, const ImageBuffer& right) const;

  /// Depth only: converts to gray before rectifying.
  DepthMap depth(const ImageBuffer& left, const ImageBuffer& right) const;

  const RectifyMaps& maps() const { return maps_; }
  const MatchParams& params() const { return params_; }

 private:
  RectifyMaps maps_;
  MatchParams params_;
};

}  // namespace sentry
