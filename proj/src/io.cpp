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
#include "sentry/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sentry/errors.hpp"

namespace sentry::io {

using nlohmann::json;

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string header_token(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (start == pos) throw ParseError("truncated PNM header", pos);
  return s.substr(start, pos - start);
}

int header_int(const std::string& s, std::size_t& pos) {
  const std::size_t at = pos;
  const std::string tok = header_token(s, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw ParseError("bad PNM header number", at);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad PNM header number", at);
  }
}

json intrinsics_json(const CameraIntrinsics& in) {
  return json{{"fx", in.fx}, {"fy", in.fy}, {"cx", in.cx}, {"cy", in.cy}, {"k1", in.k1},
              {"k2", in.k2}, {"p1", in.p1}, {"p2", in.p2}, {"width", in.width}, {"height", in.height}};
}

CameraIntrinsics intrinsics_of(const json& j) {
  CameraIntrinsics in;
  try {
    in.fx = j.at("fx").get<double>();
    in.fy = j.at("fy").get<double>();
    in.cx = j.at("cx").get<double>();
    in.cy = j.at("cy").get<double>();
    in.k1 = j.value("k1", 0.0);
    in.k2 = j.value("k2", 0.0);
    in.p1 = j.value("p1", 0.0);
    in.p2 = j.value("p2", 0.0);
    in.width = j.at("width").get<int>();
    in.height = j.at("height").get<int>();
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("camera JSON: ") + e.what());
  }
  in.validate();
  return in;
}

std::vector<Vec2> points_of(const json& j, const char* key, const std::string& view_id) {
  std::vector<Vec2> pts;
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw PreconditionError("view '" + view_id + "': missing '" + key + "' list");
  }
  for (const auto& p : j.at(key)) {
    if (!p.is_array() || p.size() != 2) throw PreconditionError("view '" + view_id + "': points must be [a, b] pairs");
    pts.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return pts;
}

json view_json(const CorrespondenceSet& v, const char* camera) {
  json board = json::array();
  json image = json::array();
  for (const auto& p : v.board_points) board.push_back({p.x(), p.y()});
  for (const auto& p : v.image_points) image.push_back({p.x(), p.y()});
  return json{{"view_id", v.view_id}, {"camera", camera}, {"board", board}, {"image", image}};
}

}  // namespace

ImageBuffer decode_pnm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = header_token(bytes, pos);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ParseError("unsupported PNM magic '" + magic + "'", 0);
  }
  const int w = header_int(bytes, pos);
  const int h = header_int(bytes, pos);
  const int maxval = header_int(bytes, pos);
  if (w <= 0 || h <= 0) throw ParseError("PNM size must be positive", pos);
  if (maxval != 255) throw ParseError("only 8-bit PNM (maxval 255) is supported", pos);
  ++pos;  // single whitespace before raster
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() < pos + need) throw ParseError("PNM raster is truncated", bytes.size());
  ImageBuffer img(w, h, channels);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, img.pixels.begin());
  return img;
}

std::string encode_pnm(const ImageBuffer& img) {
  std::string out = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

ImageBuffer read_pnm(const std::filesystem::path& path) { return decode_pnm(read_file(path)); }

void write_pnm(const std::filesystem::path& path, const ImageBuffer& img) { write_file(path, encode_pnm(img)); }

ImageBuffer disparity_to_pgm(const DisparityMap& disp) {
  ImageBuffer out(disp.width, disp.height, 1, 0);
  const double scale = disp.max_d > 0 ? 256.0 / disp.max_d : 0.0;
  for (std::size_t i = 0; i < disp.values.size(); ++i) {
    if (!disp.valid[i]) continue;
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(disp.values[i] * scale), 1L, 255L));
  }
  return out;
}

std::string disparity_sidecar(const DisparityMap& disp) {
  return json{{"min_d", disp.min_d},
              {"max_d", disp.max_d},
              {"block", disp.block},
              {"invalid_fraction", disp.invalid_fraction()}}
      .dump(2);
}

std::string intrinsics_to_json(const CameraIntrinsics& in) { return intrinsics_json(in).dump(2); }

CameraIntrinsics intrinsics_from_json(const std::string& text) {
  try {
    return intrinsics_of(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("camera JSON: ") + e.what(), e.byte);
  }
}

std::string rig_to_json(const StereoRig& rig) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r.push_back(rig.relative_rotation(i, k));
  }
  const Vec3& t = rig.relative_translation;
  return json{{"left", intrinsics_json(rig.left)},
              {"right", intrinsics_json(rig.right)},
              {"relative_rotation", r},
              {"relative_translation", {t.x(), t.y(), t.z()}}}
      .dump(2);
}

StereoRig rig_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("rig JSON: ") + e.what(), e.byte);
  }
  StereoRig rig;
  try {
    rig.left = intrinsics_of(j.at("left"));
    rig.right = intrinsics_of(j.at("right"));
    const auto& r = j.at("relative_rotation");
    const auto& t = j.at("relative_translation");
    if (r.size() != 9 || t.size() != 3) throw PreconditionError("rig JSON: rotation needs 9 numbers, translation 3");
    for (int i = 0; i < 9; ++i) rig.relative_rotation(i / 3, i % 3) = r[i].get<double>();
    rig.relative_translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("rig JSON: ") + e.what());
  }
  rig.validate();
  return rig;
}

StereoRig load_rig(const std::filesystem::path& path) { return rig_from_json(read_file(path)); }

void save_rig(const std::filesystem::path& path, const StereoRig& rig) { write_file(path, rig_to_json(rig) + "\n"); }

CorrespondenceFile correspondences_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("correspondence JSON: ") + e.what(), e.byte);
  }
  if (!j.is_array()) throw PreconditionError("correspondence file must be a JSON list of views");
  CorrespondenceFile out;
  for (const auto& v : j) {
    CorrespondenceSet set;
    set.view_id = v.contains("view_id") ? (v["view_id"].is_string() ? v["view_id"].get<std::string>()
                                                                    : v["view_id"].dump())
                                        : std::to_string(out.left.size() + out.right.size());
    set.board_points = points_of(v, "board", set.view_id);
    set.image_points = points_of(v, "image", set.view_id);
    if (set.board_points.size() != set.image_points.size()) {
      throw PreconditionError("view '" + set.view_id + "': board and image lists differ in length");
    }
    const std::string camera = v.value("camera", std::string("left"));
    if (camera == "left") {
      out.left.push_back(std::move(set));
    } else if (camera == "right") {
      out.right.push_back(std::move(set));
    } else {
      throw PreconditionError("view '" + set.view_id + "': camera must be 'left' or 'right'");
    }
  }
  return out;
}

std::string correspondences_to_json(const CorrespondenceFile& file) {
  json out = json::array();
  for (const auto& v : file.left) out.push_back(view_json(v, "left"));
  for (const auto& v : file.right) out.push_back(view_json(v, "right"));
  return out.dump();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PreconditionError("failed writing " + path.string());
}

}  // namespace sentry::io
