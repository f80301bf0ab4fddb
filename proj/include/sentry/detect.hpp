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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sentry/camera_model.hpp"
#include "sentry/stereo.hpp"

namespace sentry {

struct Detection {
  std::string label;
  double confidence = 1.0;
  BBox bbox;
  std::optional<double> distance_m;

  bool operator==(const Detection&) const = default;
};

/// Ordered, duplicate-free class names. A label "name:detail" (e.g. a
/// recognized face "person:alice") belongs to the vocabulary when "name" does.
class LabelVocabulary {
 public:
  /// The 20 VOC object classes.
  LabelVocabulary();
  explicit LabelVocabulary(std::vector<std::string> labels);

  bool contains(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

struct OracleConfig {
  double jitter_px = 0.0;
  double dropout_prob = 0.0;
  double false_positive_rate = 0.0;  // Poisson mean per frame
  std::uint64_t seed = 1;
  int image_width = kDefaultWidth;
  int image_height = kDefaultHeight;
};

/// Ground truth passed through a deterministic degradation model.
std::vector<Detection> detect_oracle(const std::vector<Detection>& gt, const OracleConfig& cfg,
                                     std::uint64_t frame_index,
                                     const LabelVocabulary& vocabulary = LabelVocabulary());

struct BlobConfig {
  double hue_min_deg = 340.0;  // range wraps through 0 when hue_min > hue_max
  double hue_max_deg = 20.0;
  double min_saturation = 0.5;
  double min_value = 0.2;
  int min_area_px = 50;
  std::string label = "ball";
};

/// Color thresholding in HSV plus 4-connected components.
std::vector<Detection> detect_blobs(const ImageBuffer& rgb, const BlobConfig& cfg);

/// Where a model-backed detector would plug in. Implementations see the
/// left image and the renderer's ground truth; each uses what it needs.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const ImageBuffer& left, const std::vector<Detection>& ground_truth,
                                        std::uint64_t frame_index) = 0;
};

class OracleDetector final : public Detector {
 public:
  explicit OracleDetector(OracleConfig cfg, LabelVocabulary vocabulary = LabelVocabulary())
      : cfg_(cfg), vocabulary_(std::move(vocabulary)) {}
  std::vector<Detection> detect(const ImageBuffer&, const std::vector<Detection>& ground_truth,
                                std::uint64_t frame_index) override {
    return detect_oracle(ground_truth, cfg_, frame_index, vocabulary_);
  }

 private:
  OracleConfig cfg_;
  LabelVocabulary vocabulary_;
};

class BlobDetector final : public Detector {
 public:
  explicit BlobDetector(BlobConfig cfg) : cfg_(std::move(cfg)) {}
  std::vector<Detection> detect(const ImageBuffer& left, const std::vector<Detection>&, std::uint64_t) override {
    return detect_blobs(left, cfg_);
  }

 private:
  BlobConfig cfg_;
};

}  // namespace sentry
