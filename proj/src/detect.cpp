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
#include "sentry/detect.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "sentry/errors.hpp"

namespace sentry {

LabelVocabulary::LabelVocabulary()
    : labels_{"aeroplane", "bicycle", "bird",  "boat",        "bottle", "bus",   "car",
              "cat",       "chair",   "cow",   "diningtable", "dog",    "horse", "motorbike",
              "person",    "pottedplant", "sheep", "sofa",    "train",  "tvmonitor"} {}

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw PreconditionError("label vocabulary must not be empty");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw PreconditionError("label vocabulary entries must be non-empty");
    if (!seen.insert(l).second) throw PreconditionError("duplicate label '" + l + "' in vocabulary");
  }
}

bool LabelVocabulary::contains(const std::string& label) const {
  const std::string base = label.substr(0, label.find(':'));
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end() ||
         std::find(labels_.begin(), labels_.end(), base) != labels_.end();
}

namespace {

// Clamp to the image, keep at least one pixel of extent. False when the box
// misses the image entirely.
bool fit_to_image(BBox& b, int width, int height) {
  if (b.u_min > b.u_max) std::swap(b.u_min, b.u_max);
  if (b.v_min > b.v_max) std::swap(b.v_min, b.v_max);
  b.u_min = std::max(b.u_min, 0.0);
  b.v_min = std::max(b.v_min, 0.0);
  b.u_max = std::min(b.u_max, static_cast<double>(width));
  b.v_max = std::min(b.v_max, static_cast<double>(height));
  if (b.u_max - b.u_min < 1.0 || b.v_max - b.v_min < 1.0) return false;
  return true;
}

}  // namespace

std::vector<Detection> detect_oracle(const std::vector<Detection>& gt, const OracleConfig& cfg,
                                     std::uint64_t frame_index, const LabelVocabulary& vocabulary) {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob_ok(cfg.dropout_prob)) throw PreconditionError("oracle dropout_prob must lie in [0, 1]");
  if (!(cfg.false_positive_rate >= 0.0)) throw PreconditionError("oracle false_positive_rate must be >= 0");
  if (!(cfg.jitter_px >= 0.0)) throw PreconditionError("oracle jitter_px must be >= 0");

  if (cfg.jitter_px == 0.0 && cfg.dropout_prob == 0.0 && cfg.false_positive_rate == 0.0) {
    std::vector<Detection> out = gt;
    for (auto& d : out) d.confidence = 1.0;
    return out;
  }

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(frame_index >> 32)};
  std::mt19937_64 rng(seq);
  std::bernoulli_distribution drop(cfg.dropout_prob);
  std::uniform_real_distribution<double> true_conf(0.6, 1.0);

  std::vector<Detection> out;
  for (const auto& g : gt) {
    if (drop(rng)) continue;
    Detection d = g;
    if (cfg.jitter_px > 0.0) {
      std::normal_distribution<double> jitter(0.0, cfg.jitter_px);
      d.bbox.u_min += jitter(rng);
      d.bbox.v_min += jitter(rng);
      d.bbox.u_max += jitter(rng);
      d.bbox.v_max += jitter(rng);
    }
    d.confidence = true_conf(rng);
    if (fit_to_image(d.bbox, cfg.image_width, cfg.image_height)) out.push_back(std::move(d));
  }

  if (cfg.false_positive_rate > 0.0) {
    std::poisson_distribution<int> count(cfg.false_positive_rate);
    std::uniform_int_distribution<std::size_t> pick(0, vocabulary.labels().size() - 1);
    std::uniform_real_distribution<double> size(20.0, 120.0);
    std::uniform_real_distribution<double> fu(0.0, cfg.image_width);
    std::uniform_real_distribution<double> fv(0.0, cfg.image_height);
    std::uniform_real_distribution<double> false_conf(0.3, 0.6);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      Detection d;
      d.label = vocabulary.labels()[pick(rng)];
      const double w = size(rng);
      const double h = size(rng);
      const double u = fu(rng);
      const double v = fv(rng);
      d.bbox = {u - 0.5 * w, v - 0.5 * h, u + 0.5 * w, v + 0.5 * h};
      d.confidence = false_conf(rng);
      if (fit_to_image(d.bbox, cfg.image_width, cfg.image_height)) out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<Detection> detect_blobs(const ImageBuffer& rgb, const BlobConfig& cfg) {
  if (rgb.channels != 3) throw PreconditionError("blob detection needs an RGB image");
  const int w = rgb.width;
  const int h = rgb.height;
  const bool wraps = cfg.hue_min_deg > cfg.hue_max_deg;

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double r = rgb.pixels[3 * i] / 255.0;
    const double g = rgb.pixels[3 * i + 1] / 255.0;
    const double b = rgb.pixels[3 * i + 2] / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double chroma = mx - mn;
    if (mx <= 0.0 || chroma <= 0.0) continue;
    const double sat = chroma / mx;
    if (sat < cfg.min_saturation || mx < cfg.min_value) continue;
    double hue = 0.0;
    if (mx == r) {
      hue = 60.0 * std::fmod((g - b) / chroma + 6.0, 6.0);
    } else if (mx == g) {
      hue = 60.0 * ((b - r) / chroma + 2.0);
    } else {
      hue = 60.0 * ((r - g) / chroma + 4.0);
    }
    const bool in_range = wraps ? (hue >= cfg.hue_min_deg || hue <= cfg.hue_max_deg)
                                : (hue >= cfg.hue_min_deg && hue <= cfg.hue_max_deg);
    if (in_range) mask[i] = 1;
  }

  std::vector<Detection> out;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (mask[seed] != 1) continue;
    mask[seed] = 2;
    stack.assign(1, seed);
    int area = 0;
    int u_min = w, v_min = h, u_max = -1, v_max = -1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int u = static_cast<int>(i % w);
      const int v = static_cast<int>(i / w);
      ++area;
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
      auto visit = [&](std::size_t j) {
        if (mask[j] == 1) {
          mask[j] = 2;
          stack.push_back(j);
        }
      };
      if (u > 0) visit(i - 1);
      if (u + 1 < w) visit(i + 1);
      if (v > 0) visit(i - w);
      if (v + 1 < h) visit(i + w);
    }
    if (area < cfg.min_area_px) continue;
    Detection d;
    d.label = cfg.label;
    d.bbox = {static_cast<double>(u_min), static_cast<double>(v_min), static_cast<double>(u_max + 1),
              static_cast<double>(v_max + 1)};
    d.confidence = area / d.bbox.area();
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace sentry
