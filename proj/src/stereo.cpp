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
#include "sentry/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sentry/errors.hpp"

namespace sentry {

double DisparityMap::invalid_fraction() const {
  if (valid.empty()) return 1.0;
  const auto good = std::count(valid.begin(), valid.end(), std::uint8_t{1});
  return 1.0 - static_cast<double>(good) / static_cast<double>(valid.size());
}

DepthMap::DepthMap(int w, int h)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0), valid(static_cast<std::size_t>(w) * h, 0) {}

RectifiedImage rectify_image(const ImageBuffer& img, const RemapField& remap) {
  if (remap.width <= 0 || remap.height <= 0 ||
      remap.src_u.size() != static_cast<std::size_t>(remap.width) * remap.height ||
      remap.src_v.size() != remap.src_u.size()) {
    throw PreconditionError("remap field dimensions are inconsistent");
  }
  if (img.empty()) throw PreconditionError("cannot rectify an empty image");
  if (img.width != remap.width || img.height != remap.height) {
    throw PreconditionError("remap field and image sizes differ");
  }

  RectifiedImage out{ImageBuffer(remap.width, remap.height, img.channels, 0),
                     std::vector<std::uint8_t>(remap.src_u.size(), 0)};
  const int ch = img.channels;
  const float max_u = static_cast<float>(img.width - 1);
  const float max_v = static_cast<float>(img.height - 1);
  for (int v = 0; v < remap.height; ++v) {
    for (int u = 0; u < remap.width; ++u) {
      const std::size_t i = remap.index(u, v);
      const float su = remap.src_u[i];
      const float sv = remap.src_v[i];
      if (!(su >= 0.0f && su <= max_u && sv >= 0.0f && sv <= max_v)) continue;
      const int x0 = static_cast<int>(su);
      const int y0 = static_cast<int>(sv);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const float ax = su - static_cast<float>(x0);
      const float ay = sv - static_cast<float>(y0);
      for (int c = 0; c < ch; ++c) {
        const float top = img.at(x0, y0, c) * (1.0f - ax) + img.at(x1, y0, c) * ax;
        const float bottom = img.at(x0, y1, c) * (1.0f - ax) + img.at(x1, y1, c) * ax;
        const float value = top * (1.0f - ay) + bottom * ay;
        out.image.at(u, v, c) = static_cast<std::uint8_t>(std::clamp(value, 0.0f, 255.0f) + 0.5f);
      }
      out.valid[i] = 1;
    }
  }
  return out;
}

namespace {

// Costs fit CostT; keys pack (cost, disparity index) so that the minimum key
// is the lowest cost at the smallest disparity.
template <typename CostT, typename KeyT>
void match_rows(const ImageBuffer& left, const ImageBuffer& right, const MatchParams& p, DisparityMap& out) {
  const int w = left.width;
  const int h = left.height;
  const int half = p.block / 2;
  const int nd = p.max_d - p.min_d + 1;
  constexpr int kKeyShift = sizeof(KeyT) * 4;
  constexpr KeyT kNoKey = std::numeric_limits<KeyT>::max();

  // colsum[u * nd + di]: SAD over the block's rows for column u at disparity d.
  std::vector<CostT> colsum(static_cast<std::size_t>(nd) * w, 0);
  // cost[u * nd + di]: full block SAD for the current row.
  std::vector<CostT> cost(static_cast<std::size_t>(nd) * w, 0);
  // right_key[w - 1 - ur]: best packed key for right-image column ur.
  std::vector<KeyT> right_key(w + nd, kNoKey);
  std::vector<std::uint8_t> rrev(w);
  // Absolute differences of the last `block` rows; slot y % block holds row y.
  const std::size_t slot_size = static_cast<std::size_t>(nd) * w;
  std::vector<std::uint8_t> ring(slot_size * p.block, 0);

  const std::uint8_t* lp = left.pixels.data();
  const std::uint8_t* rp = right.pixels.data();
  // Adds row y to the column sums and drops the row that shares its slot.
  auto advance_row = [&](int y) {
    const std::uint8_t* lrow = lp + static_cast<std::size_t>(y) * w;
    const std::uint8_t* rrow = rp + static_cast<std::size_t>(y) * w;
    std::uint8_t* slot = ring.data() + slot_size * static_cast<std::size_t>(y % p.block);
    for (int k = 0; k < w; ++k) rrev[k] = rrow[w - 1 - k];
    for (int u = p.min_d; u < w; ++u) {
      CostT* cs = colsum.data() + static_cast<std::size_t>(u) * nd;
      std::uint8_t* ad = slot + static_cast<std::size_t>(u) * nd;
      const std::uint8_t lv = lrow[u];
      // rrow[u - min_d - di] == rr[di]
      const std::uint8_t* rr = rrev.data() + (w - 1 - u + p.min_d);
      const int n = std::min(nd, u - p.min_d + 1);
      for (int di = 0; di < n; ++di) {
        const std::uint8_t r = rr[di];
        const std::uint8_t diff = static_cast<std::uint8_t>(lv > r ? lv - r : r - lv);
        cs[di] = static_cast<CostT>(cs[di] + diff - ad[di]);
        ad[di] = diff;
      }
    }
  };
  for (int y = 0; y < p.block - 1; ++y) advance_row(y);

  const int first = half + p.min_d;  // leftmost center whose right window fits at min_d
  if (first + half >= w) return;
  for (int v = half; v < h - half; ++v) {
    advance_row(v + half);

    // Horizontal box sums. Entries whose right window leaves the image are
    // never read.
    CostT* c0 = cost.data() + static_cast<std::size_t>(first) * nd;
    std::fill(c0, c0 + nd, CostT{0});
    for (int x = first - half; x <= first + half; ++x) {
      const CostT* cs = colsum.data() + static_cast<std::size_t>(x) * nd;
      for (int di = 0; di < nd; ++di) c0[di] = static_cast<CostT>(c0[di] + cs[di]);
    }
    for (int u = first + 1; u < w - half; ++u) {
      CostT* c = cost.data() + static_cast<std::size_t>(u) * nd;
      const CostT* prev = c - nd;
      const CostT* add = colsum.data() + static_cast<std::size_t>(u + half) * nd;
      const CostT* sub = colsum.data() + static_cast<std::size_t>(u - half - 1) * nd;
      for (int di = 0; di < nd; ++di) c[di] = static_cast<CostT>(prev[di] + add[di] - sub[di]);
    }

    // Right-referenced costs: C_R(ur, d) = C_L(ur + d, d) for ur >= half.
    std::fill(right_key.begin(), right_key.end(), kNoKey);
    for (int u = first; u < w - half; ++u) {
      const CostT* c = cost.data() + static_cast<std::size_t>(u) * nd;
      const int n = std::min(nd, u - half - p.min_d + 1);
      KeyT* rk = right_key.data() + (w - 1 - u + p.min_d);  // rk[di] belongs to ur = u - min_d - di
      for (int di = 0; di < n; ++di) {
        const KeyT key = (static_cast<KeyT>(c[di]) << kKeyShift) | static_cast<KeyT>(di);
        rk[di] = std::min(rk[di], key);
      }
    }
    auto right_best = [&](int ur) -> int {
      const KeyT key = right_key[static_cast<std::size_t>(w - 1 - ur)];
      if (key == kNoKey) return -1;
      return p.min_d + static_cast<int>(key & ((KeyT{1} << kKeyShift) - 1));
    };

    for (int u = half + p.max_d; u < w - half; ++u) {
      const CostT* c = cost.data() + static_cast<std::size_t>(u) * nd;
      CostT best = c[0];
      for (int di = 1; di < nd; ++di) best = std::min(best, c[di]);
      int best_di = 0;
      while (c[best_di] != best) ++best_di;
      CostT second = std::numeric_limits<CostT>::max();
      for (int di = 0; di < best_di - 1; ++di) second = std::min(second, c[di]);
      for (int di = best_di + 2; di < nd; ++di) second = std::min(second, c[di]);
      if (second == std::numeric_limits<CostT>::max() || second == 0) continue;
      if (static_cast<double>(best) > p.uniqueness_ratio * static_cast<double>(second)) continue;

      double d = p.min_d + best_di;
      if (best_di > 0 && best_di < nd - 1) {
        const double cm = c[best_di - 1];
        const double cp = c[best_di + 1];
        const double denom = cm - 2.0 * best + cp;
        if (denom > 0.0) d += std::clamp((cm - cp) / (2.0 * denom), -0.5, 0.5);
      }
      d = std::clamp(d, static_cast<double>(p.min_d), static_cast<double>(p.max_d));

      const int ur = u - static_cast<int>(std::lround(d));
      if (ur < half || ur >= w - half) continue;
      const int rb = right_best(ur);
      if (rb < 0 || std::abs(d - rb) > p.lr_tolerance) continue;

      out.values[out.index(u, v)] = static_cast<float>(d);
      out.valid[out.index(u, v)] = 1;
    }
  }
}

}  // namespace

DisparityMap match_disparity(const ImageBuffer& left, const ImageBuffer& right, const MatchParams& p) {
  if (left.channels != 1 || right.channels != 1) throw PreconditionError("block matching needs single-channel images");
  if (left.width != right.width || left.height != right.height) {
    throw PreconditionError("block matching needs images of equal size");
  }
  if (p.block < 1 || p.block % 2 == 0) throw PreconditionError("block size must be a positive odd number");
  if (p.min_d < 0 || p.max_d < p.min_d) throw PreconditionError("disparity range must satisfy 0 <= min_d <= max_d");
  if (p.max_d >= left.width) throw PreconditionError("max_d must be smaller than the image width");

  DisparityMap out;
  out.width = left.width;
  out.height = left.height;
  out.values.assign(static_cast<std::size_t>(out.width) * out.height, 0.0f);
  out.valid.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  out.min_d = p.min_d;
  out.max_d = p.max_d;
  out.block = p.block;
  if (left.height < p.block || left.width < p.block + p.max_d) return out;

  const long max_cost = 255L * p.block * p.block;
  const int nd = p.max_d - p.min_d + 1;
  if (max_cost <= std::numeric_limits<std::uint16_t>::max() && nd <= 0xFFFF) {
    match_rows<std::uint16_t, std::uint32_t>(left, right, p, out);
  } else {
    match_rows<std::uint32_t, std::uint64_t>(left, right, p, out);
  }
  return out;
}

DepthMap depth_from_disparity(const DisparityMap& disp, double focal_px, double baseline_m, double d_min_floor) {
  if (!(focal_px > 0.0) || !(baseline_m > 0.0)) {
    throw PreconditionError("depth conversion needs positive focal length and baseline");
  }
  DepthMap out(disp.width, disp.height);
  out.focal_px = focal_px;
  out.baseline_m = baseline_m;
  const double fb = focal_px * baseline_m;
  for (std::size_t i = 0; i < disp.values.size(); ++i) {
    const double d = disp.values[i];
    if (!disp.valid[i] || !(d > d_min_floor)) continue;
    out.values[i] = fb / d;
    out.valid[i] = 1;
  }
  return out;
}

Rgb jet(double x) {
  auto channel = [x](double shift) {
    const double c = std::clamp(1.5 - std::abs(4.0 * x - shift), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
  };
  return {channel(3.0), channel(2.0), channel(1.0)};
}

ImageBuffer colorize_jet(const DisparityMap& disp) {
  ImageBuffer out(disp.width, disp.height, 3, 0);
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < disp.values.size(); ++i) {
    if (!disp.valid[i]) continue;
    lo = std::min(lo, disp.values[i]);
    hi = std::max(hi, disp.values[i]);
  }
  const double span = static_cast<double>(hi) - static_cast<double>(lo);
  for (std::size_t i = 0; i < disp.values.size(); ++i) {
    if (!disp.valid[i]) continue;
    const double x = span > 0.0 ? (disp.values[i] - lo) / span : 0.5;
    const Rgb c = jet(x);
    out.pixels[3 * i] = c.r;
    out.pixels[3 * i + 1] = c.g;
    out.pixels[3 * i + 2] = c.b;
  }
  return out;
}

std::optional<double> region_distance(const DepthMap& depth, const BBox& box) {
  const int u0 = std::max(0, static_cast<int>(std::floor(box.u_min)));
  const int v0 = std::max(0, static_cast<int>(std::floor(box.v_min)));
  const int u1 = std::min(depth.width, static_cast<int>(std::ceil(box.u_max)));
  const int v1 = std::min(depth.height, static_cast<int>(std::ceil(box.v_max)));
  if (u0 >= u1 || v0 >= v1) throw PreconditionError("bounding box does not intersect the depth map");

  std::vector<double> samples;
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) {
      if (depth.is_valid(u, v)) samples.push_back(depth.at(u, v));
    }
  }
  if (samples.size() < static_cast<std::size_t>(kMinDistanceSamples)) return std::nullopt;
  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid), samples.end());
  const double upper = samples[mid];
  if (samples.size() % 2 == 1) return upper;
  const double lower = *std::max_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

StereoPipeline::StereoPipeline(const StereoRig& rig, MatchParams params)
    : maps_(compute_rectification(rig)), params_(params) {}

StereoPipeline::Output StereoPipeline::process(const ImageBuffer& left, const ImageBuffer& right) const {
  if (left.width != right.width || left.height != right.height) {
    throw PreconditionError("stereo pair images differ in size");
  }
  Output out;
  out.left = rectify_image(left, maps_.remap_left);
  out.right = rectify_image(right, maps_.remap_right);
  out.disparity = match_disparity(to_gray(out.left.image), to_gray(out.right.image), params_);
  for (std::size_t i = 0; i < out.disparity.valid.size(); ++i) {
    if (!out.left.valid[i]) {
      out.disparity.valid[i] = 0;
      out.disparity.values[i] = 0.0f;
    }
  }
  out.depth = depth_from_disparity(out.disparity, maps_.new_intrinsics.fx, maps_.rectified_baseline);
  return out;
}

DepthMap StereoPipeline::depth(const ImageBuffer& left, const ImageBuffer& right) const {
  if (left.width != right.width || left.height != right.height) {
    throw PreconditionError("stereo pair images differ in size");
  }
  const RectifiedImage l = rectify_image(left.channels == 1 ? left : to_gray(left), maps_.remap_left);
  const RectifiedImage r = rectify_image(right.channels == 1 ? right : to_gray(right), maps_.remap_right);
  DisparityMap disp = match_disparity(l.image, r.image, params_);
  for (std::size_t i = 0; i < disp.valid.size(); ++i) {
    if (!l.valid[i]) {
      disp.valid[i] = 0;
      disp.values[i] = 0.0f;
    }
  }
  return depth_from_disparity(disp, maps_.new_intrinsics.fx, maps_.rectified_baseline);
}

}  // namespace sentry
