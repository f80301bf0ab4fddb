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
#include "sentry/simworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "sentry/errors.hpp"

namespace sentry {

namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMinHitDistance = 1e-9;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) {
  const std::uint64_t h = mix(seed ^ (static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL) ^
                              (static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL) ^
                              (static_cast<std::uint64_t>(z) * 0x165667b19e3779f9ULL));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
double lerp(double a, double b, double t) { return a + (b - a) * t; }

double value_noise_2d(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  const double tx = smooth(x - fx), ty = smooth(y - fy);
  const double y0 = lerp(lattice(seed, ix, iy, 0), lattice(seed, ix + 1, iy, 0), tx);
  const double y1 = lerp(lattice(seed, ix, iy + 1, 0), lattice(seed, ix + 1, iy + 1, 0), tx);
  return lerp(y0, y1, ty);
}

double value_noise(std::uint64_t seed, const Vec3& p) {
  if (p.z() == 0.0) return value_noise_2d(seed, p.x(), p.y());
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy),
             iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double c[2][2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) c[a][b][d] = lattice(seed, ix + a, iy + b, iz + d);
  const double x00 = lerp(c[0][0][0], c[1][0][0], tx), x10 = lerp(c[0][1][0], c[1][1][0], tx);
  const double x01 = lerp(c[0][0][1], c[1][0][1], tx), x11 = lerp(c[0][1][1], c[1][1][1], tx);
  return lerp(lerp(x00, x10, ty), lerp(x01, x11, ty), tz);
}

double texture_value(const Texture& tex, const Vec3& local) {
  if (const auto* n = std::get_if<NoiseTexture>(&tex)) {
    const Vec3 p = local / n->scale;
    const double v = 0.5 * value_noise(n->seed, p) + 0.3 * value_noise(n->seed + 1, 2.0 * p) +
                     0.2 * value_noise(n->seed + 2, 4.0 * p);
    return 0.2 + 0.8 * v;
  }
  const auto& c = std::get<CheckerTexture>(tex);
  const auto cell = [&](double x) { return static_cast<std::int64_t>(std::floor(x / c.cell)); };
  return ((cell(local.x()) + cell(local.y()) + cell(local.z())) & 1) ? 0.9 : 0.25;
}

// Object geometry in one camera's frame, ready for ray tests from the origin.
struct Prepared {
  bool sphere = false;
  Vec3 center;        // camera frame
  double radius2 = 0.0;
  Vec3 normal;        // quad plane normal
  Vec3 dual_u, dual_v;  // (p - center) . dual -> edge parameter in [-0.5, 0.5]
  Vec3 unit_u, unit_v;  // texture axes for quads (meters)
  double len_u = 0.0, len_v = 0.0;
  double bound_r = 0.0;  // bounding sphere about center
};

Prepared prepare(const SceneObject& obj, const Pose& w2c) {
  Prepared p;
  if (const auto* s = std::get_if<SphereShape>(&obj.shape)) {
    p.sphere = true;
    p.center = w2c.apply(s->center);
    p.radius2 = s->radius * s->radius;
    p.bound_r = s->radius;
    return p;
  }
  const auto& q = std::get<QuadShape>(obj.shape);
  p.center = w2c.apply(q.center);
  const Vec3 eu = w2c.rotation * q.edge_u;
  const Vec3 ev = w2c.rotation * q.edge_v;
  p.normal = eu.cross(ev).normalized();
  Eigen::Matrix2d gram;
  gram << eu.dot(eu), eu.dot(ev), eu.dot(ev), ev.dot(ev);
  const Eigen::Matrix2d gi = gram.inverse();
  p.dual_u = gi(0, 0) * eu + gi(0, 1) * ev;
  p.dual_v = gi(1, 0) * eu + gi(1, 1) * ev;
  p.len_u = q.edge_u.norm();
  p.len_v = q.edge_v.norm();
  p.bound_r = 0.5 * std::max((eu + ev).norm(), (eu - ev).norm()) * (1.0 + 1e-9);
  return p;
}

// Distance along the unit ray d from the camera origin, or +inf.
double intersect(const Prepared& p, const Vec3& d, double* alpha, double* beta) {
  if (p.sphere) {
    const double b = d.dot(p.center);
    const double disc = b * b - (p.center.squaredNorm() - p.radius2);
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    const double root = std::sqrt(disc);
    double t = b - root;
    if (t <= kMinHitDistance) t = b + root;
    return t > kMinHitDistance ? t : std::numeric_limits<double>::infinity();
  }
  const double denom = d.dot(p.normal);
  if (std::abs(denom) < 1e-12) return std::numeric_limits<double>::infinity();
  const double t = p.center.dot(p.normal) / denom;
  if (t <= kMinHitDistance) return std::numeric_limits<double>::infinity();
  const Vec3 rel = t * d - p.center;
  const double a = rel.dot(p.dual_u);
  const double b = rel.dot(p.dual_v);
  if (std::abs(a) > 0.5 || std::abs(b) > 0.5) return std::numeric_limits<double>::infinity();
  *alpha = a;
  *beta = b;
  return t;
}

Vec3 vec3_of(const json& j) {
  if (!j.is_array() || j.size() != 3) throw PreconditionError("scene JSON: expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json json_of(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// Place the shape where its trajectory says it is and apply billboarding.
void sync_to_trajectory(SceneObject& obj) {
  std::optional<Vec3> pos;
  if (const auto* o = std::get_if<OrbitTrajectory>(&obj.trajectory)) {
    const double a = o->angle_deg * kDegToRad;
    pos = o->pivot + o->radius * Vec3(std::sin(a), 0.0, std::cos(a));
  } else if (const auto* w = std::get_if<WaypointTrajectory>(&obj.trajectory)) {
    if (!w->points.empty()) {
      std::vector<Vec3> path = w->points;
      if (w->loop && path.size() > 1) path.push_back(path.front());
      double total = 0.0;
      for (std::size_t i = 1; i < path.size(); ++i) total += (path[i] - path[i - 1]).norm();
      double s = w->travelled;
      if (w->loop && total > 0.0) s = std::fmod(s, total);
      pos = path.back();
      for (std::size_t i = 1; i < path.size(); ++i) {
        const double len = (path[i] - path[i - 1]).norm();
        if (s <= len && len > 0.0) {
          pos = path[i - 1] + (s / len) * (path[i] - path[i - 1]);
          break;
        }
        s -= len;
      }
      if (path.size() == 1) pos = path.front();
    }
  }
  if (pos) {
    std::visit([&](auto& shape) { shape.center = *pos; }, obj.shape);
  }
  if (auto* q = std::get_if<QuadShape>(&obj.shape); q && obj.billboard) {
    const double bearing = std::atan2(q->center.x(), q->center.z());
    const Vec3 facing = q->edge_u.norm() * Vec3(std::cos(bearing), 0.0, -std::sin(bearing));
    if ((facing - q->edge_u).norm() > 1e-12 * facing.norm()) q->edge_u = facing;
  }
}

SceneObject object_from_json(const json& j) {
  SceneObject obj;
  obj.label = j.value("label", std::string());
  const json& shape = j.at("shape");
  const std::string type = shape.at("type").get<std::string>();
  if (type == "sphere") {
    obj.shape = SphereShape{vec3_of(shape.at("center")), shape.at("radius").get<double>()};
  } else if (type == "quad") {
    obj.shape = QuadShape{vec3_of(shape.at("center")), vec3_of(shape.at("edge_u")), vec3_of(shape.at("edge_v"))};
  } else {
    throw PreconditionError("scene JSON: unknown shape type '" + type + "'");
  }
  if (j.contains("texture")) {
    const json& t = j.at("texture");
    const std::string tt = t.at("type").get<std::string>();
    if (tt == "noise") {
      obj.texture = NoiseTexture{t.value("seed", std::uint64_t{1}), t.value("scale", 0.04)};
    } else if (tt == "checker") {
      obj.texture = CheckerTexture{t.value("cell", 0.1)};
    } else {
      throw PreconditionError("scene JSON: unknown texture type '" + tt + "'");
    }
  }
  if (j.contains("color")) obj.color = vec3_of(j.at("color"));
  obj.billboard = j.value("billboard", false);
  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    const std::string tt = t.at("type").get<std::string>();
    if (tt == "orbit") {
      OrbitTrajectory o;
      if (t.contains("pivot")) o.pivot = vec3_of(t.at("pivot"));
      o.radius = t.value("radius", o.radius);
      o.rate_deg_s = t.value("rate_deg_s", o.rate_deg_s);
      o.angle_deg = t.value("angle_deg", o.angle_deg);
      if (t.contains("arc_deg")) {
        o.arc_min_deg = t.at("arc_deg").at(0).get<double>();
        o.arc_max_deg = t.at("arc_deg").at(1).get<double>();
      }
      obj.trajectory = o;
    } else if (tt == "waypoints") {
      WaypointTrajectory w;
      for (const auto& p : t.at("points")) w.points.push_back(vec3_of(p));
      w.speed = t.value("speed", w.speed);
      w.loop = t.value("loop", false);
      w.travelled = t.value("travelled", 0.0);
      obj.trajectory = w;
    } else {
      throw PreconditionError("scene JSON: unknown trajectory type '" + tt + "'");
    }
  }
  obj.validate();
  sync_to_trajectory(obj);
  return obj;
}

json object_to_json(const SceneObject& obj) {
  json j;
  j["label"] = obj.label;
  if (const auto* s = std::get_if<SphereShape>(&obj.shape)) {
    j["shape"] = {{"type", "sphere"}, {"center", json_of(s->center)}, {"radius", s->radius}};
  } else {
    const auto& q = std::get<QuadShape>(obj.shape);
    j["shape"] = {{"type", "quad"}, {"center", json_of(q.center)}, {"edge_u", json_of(q.edge_u)},
                  {"edge_v", json_of(q.edge_v)}};
  }
  if (const auto* n = std::get_if<NoiseTexture>(&obj.texture)) {
    j["texture"] = {{"type", "noise"}, {"seed", n->seed}, {"scale", n->scale}};
  } else {
    j["texture"] = {{"type", "checker"}, {"cell", std::get<CheckerTexture>(obj.texture).cell}};
  }
  j["color"] = json_of(obj.color);
  j["billboard"] = obj.billboard;
  if (const auto* o = std::get_if<OrbitTrajectory>(&obj.trajectory)) {
    j["trajectory"] = {{"type", "orbit"},          {"pivot", json_of(o->pivot)},
                       {"radius", o->radius},      {"rate_deg_s", o->rate_deg_s},
                       {"angle_deg", o->angle_deg}, {"arc_deg", {o->arc_min_deg, o->arc_max_deg}}};
  } else if (const auto* w = std::get_if<WaypointTrajectory>(&obj.trajectory)) {
    json pts = json::array();
    for (const auto& p : w->points) pts.push_back(json_of(p));
    j["trajectory"] = {{"type", "waypoints"}, {"points", pts}, {"speed", w->speed}, {"loop", w->loop},
                       {"travelled", w->travelled}};
  }
  return j;
}

}  // namespace

Vec3 SceneObject::center() const {
  return std::visit([](const auto& s) { return s.center; }, shape);
}

void SceneObject::validate() const {
  if (const auto* s = std::get_if<SphereShape>(&shape)) {
    if (!(s->radius > 0.0)) throw PreconditionError("sphere radius must be positive");
  } else {
    const auto& q = std::get<QuadShape>(shape);
    if (q.edge_u.cross(q.edge_v).norm() < 1e-12) throw PreconditionError("quad edge vectors must be independent");
  }
  if (const auto* n = std::get_if<NoiseTexture>(&texture); n && !(n->scale > 0.0)) {
    throw PreconditionError("noise texture scale must be positive");
  }
  if (const auto* c = std::get_if<CheckerTexture>(&texture); c && !(c->cell > 0.0)) {
    throw PreconditionError("checker cell must be positive");
  }
  if (const auto* w = std::get_if<WaypointTrajectory>(&trajectory); w && (w->points.empty() || !(w->speed >= 0.0))) {
    throw PreconditionError("waypoint trajectory needs points and a non-negative speed");
  }
}

Scene scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scene JSON: ") + e.what(), e.byte);
  }
  Scene scene;
  const json* objects = &j;
  if (j.is_object()) {
    objects = &j.at("objects");
    scene.background = j.value("background", scene.background);
    scene.time = j.value("time", 0.0);
    if (j.contains("light")) {
      scene.light = vec3_of(j.at("light"));
      if (std::abs(scene.light.norm() - 1.0) > 1e-12) scene.light.normalize();
    }
  }
  if (!objects->is_array()) throw PreconditionError("scene JSON must be a list of objects");
  try {
    for (const auto& o : *objects) scene.objects.push_back(object_from_json(o));
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("scene JSON: ") + e.what());
  }
  return scene;
}

std::string scene_to_json(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) objects.push_back(object_to_json(o));
  return json{{"objects", objects}, {"time", scene.time}, {"background", scene.background}, {"light", json_of(scene.light)}}.dump(2);
}

Scene step_scene(const Scene& scene, double dt) {
  if (!(dt >= 0.0)) throw PreconditionError("step_scene needs dt >= 0");
  if (dt == 0.0) return scene;
  Scene next = scene;
  next.time += dt;
  for (auto& obj : next.objects) {
    if (auto* o = std::get_if<OrbitTrajectory>(&obj.trajectory)) {
      o->angle_deg += o->rate_deg_s * dt;
      if (o->arc_min_deg < o->arc_max_deg) {
        // Reflect at the arc ends, reversing the direction of travel.
        for (int guard = 0; guard < 64; ++guard) {
          if (o->angle_deg > o->arc_max_deg) {
            o->angle_deg = 2.0 * o->arc_max_deg - o->angle_deg;
            o->rate_deg_s = -std::abs(o->rate_deg_s);
          } else if (o->angle_deg < o->arc_min_deg) {
            o->angle_deg = 2.0 * o->arc_min_deg - o->angle_deg;
            o->rate_deg_s = std::abs(o->rate_deg_s);
          } else {
            break;
          }
        }
      }
    } else if (auto* w = std::get_if<WaypointTrajectory>(&obj.trajectory)) {
      w->travelled += w->speed * dt;
    } else {
      continue;
    }
    sync_to_trajectory(obj);
  }
  return next;
}

CameraPoses camera_poses(const StereoRig& rig, const GimbalAngles& angles) {
  const Mat3 g = head_rotation(angles);
  const Vec3 right_center = -(rig.relative_rotation.transpose() * rig.relative_translation);
  const Vec3 mid = 0.5 * right_center;

  auto world_to_cam = [](const Mat3& cam_to_world, const Vec3& center) {
    Pose p;
    p.rotation = cam_to_world.transpose();
    p.translation = -(p.rotation * center);
    return p;
  };
  return {world_to_cam(g, g * (-mid)), world_to_cam(g * rig.relative_rotation.transpose(), g * mid)};
}

// Noise texture of one quad sampled on a grid finer than its finest octave.
struct StereoRenderer::TextureRaster {
  double step = 0.0;
  double origin_u = 0.0, origin_v = 0.0;
  int nu = 0, nv = 0;
  std::vector<float> values;

  double sample(double x, double y) const {
    const double gx = std::clamp((x - origin_u) / step, 0.0, nu - 1.001);
    const double gy = std::clamp((y - origin_v) / step, 0.0, nv - 1.001);
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double tx = gx - ix, ty = gy - iy;
    const float* r0 = &values[static_cast<std::size_t>(iy) * nu + ix];
    const float* r1 = r0 + nu;
    return lerp(lerp(r0[0], r0[1], tx), lerp(r1[0], r1[1], tx), ty);
  }
};

std::shared_ptr<const StereoRenderer::TextureRaster> StereoRenderer::raster_for(const NoiseTexture& tex, double len_u,
                                                                                double len_v) const {
  const RasterKey key{tex.seed, tex.scale, len_u, len_v};
  std::lock_guard lock(raster_mutex_);
  if (auto it = rasters_.find(key); it != rasters_.end()) return it->second;
  auto r = std::make_shared<TextureRaster>();
  r->step = tex.scale / 8.0;
  r->origin_u = -0.5 * len_u - r->step;
  r->origin_v = -0.5 * len_v - r->step;
  r->nu = static_cast<int>(std::ceil(len_u / r->step)) + 3;
  r->nv = static_cast<int>(std::ceil(len_v / r->step)) + 3;
  if (static_cast<double>(r->nu) * r->nv > 3.0e7) return nullptr;
  r->values.resize(static_cast<std::size_t>(r->nu) * r->nv);
  for (int y = 0; y < r->nv; ++y) {
    for (int x = 0; x < r->nu; ++x) {
      const Vec3 local(r->origin_u + x * r->step, r->origin_v + y * r->step, 0.0);
      r->values[static_cast<std::size_t>(y) * r->nu + x] = static_cast<float>(texture_value(tex, local));
    }
  }
  rasters_.emplace(key, r);
  return r;
}

StereoRenderer::StereoRenderer(const StereoRig& rig) : rig_(rig) {
  rig_.validate();
  auto rays_for = [](const CameraIntrinsics& in) {
    RayField f;
    f.rays.resize(static_cast<std::size_t>(in.width) * in.height);
    for (int v = 0; v < in.height; ++v) {
      for (int u = 0; u < in.width; ++u) f.rays[static_cast<std::size_t>(v) * in.width + u] = pixel_ray(u, v, in);
    }
    f.tiles_u = (in.width + kTile - 1) / kTile;
    f.tiles_v = (in.height + kTile - 1) / kTile;
    for (int ty = 0; ty < f.tiles_v; ++ty) {
      for (int tx = 0; tx < f.tiles_u; ++tx) {
        const int u1 = std::min(in.width, (tx + 1) * kTile), v1 = std::min(in.height, (ty + 1) * kTile);
        Vec3 axis = Vec3::Zero();
        for (int v = ty * kTile; v < v1; ++v) {
          for (int u = tx * kTile; u < u1; ++u) axis += f.rays[static_cast<std::size_t>(v) * in.width + u];
        }
        axis.normalize();
        double min_cos = 1.0;
        for (int v = ty * kTile; v < v1; ++v) {
          for (int u = tx * kTile; u < u1; ++u) {
            min_cos = std::min(min_cos, axis.dot(f.rays[static_cast<std::size_t>(v) * in.width + u]));
          }
        }
        f.tile_axis.push_back(axis);
        f.tile_half_angle.push_back(std::acos(std::clamp(min_cos, -1.0, 1.0)) + 1e-6);
      }
    }
    return f;
  };
  rays_left_ = rays_for(rig_.left);
  rays_right_ = rays_for(rig_.right);
}

void StereoRenderer::render_camera(const Scene& scene, const Pose& w2c, const RayField& field,
                                   ImageBuffer& image, DepthMap* depth, std::vector<Detection>* detections) const {
  const std::size_t n_obj = scene.objects.size();
  std::vector<Prepared> prepared;
  prepared.reserve(n_obj);
  std::vector<std::shared_ptr<const TextureRaster>> rasters(n_obj);
  std::vector<std::array<double, 3>> color255(n_obj);
  for (std::size_t k = 0; k < n_obj; ++k) {
    const SceneObject& o = scene.objects[k];
    prepared.push_back(prepare(o, w2c));
    for (int c = 0; c < 3; ++c) color255[k][c] = o.color(c) * 255.0;
    const auto* noise = std::get_if<NoiseTexture>(&o.texture);
    if (noise && !image.empty() && !prepared.back().sphere) {
      rasters[k] = raster_for(*noise, prepared.back().len_u, prepared.back().len_v);
    }
  }
  const Mat3 c2w = w2c.rotation.transpose();
  const Vec3 light = w2c.rotation * scene.light;
  const bool shade = !image.empty();
  std::vector<double> quad_light(n_obj, 0.0);
  std::vector<double> bound_dist(n_obj), bound_angle(n_obj);
  for (std::size_t k = 0; k < n_obj; ++k) {
    const Prepared& p = prepared[k];
    if (!p.sphere) {
      const Vec3 normal = p.center.dot(p.normal) > 0.0 ? Vec3(-p.normal) : p.normal;
      quad_light[k] = 0.35 + 0.65 * std::max(0.0, normal.dot(light));
    }
    bound_dist[k] = p.center.norm();
    bound_angle[k] = bound_dist[k] > p.bound_r ? std::asin(p.bound_r / bound_dist[k]) : -1.0;
  }
  const std::vector<Vec3>& rays = field.rays;
  std::vector<std::size_t> active;
  active.reserve(n_obj);
  const auto bg = static_cast<std::uint8_t>(std::lround(std::clamp(scene.background, 0.0, 1.0) * 255.0));

  struct Extent {
    std::size_t total = 0;
    std::size_t visible = 0;
    int u_min = std::numeric_limits<int>::max(), v_min = std::numeric_limits<int>::max();
    int u_max = -1, v_max = -1;
  };
  std::vector<Extent> extents(detections ? n_obj : 0);

  const int w = image.empty() ? rig_.left.width : image.width;
  const int h = image.empty() ? rig_.left.height : image.height;
  for (int tile = 0; tile < field.tiles_u * field.tiles_v; ++tile) {
    const Vec3& axis = field.tile_axis[tile];
    active.clear();
    for (std::size_t k = 0; k < n_obj; ++k) {
      if (bound_angle[k] < 0.0) {
        active.push_back(k);
        continue;
      }
      const double c = std::clamp(axis.dot(prepared[k].center) / bound_dist[k], -1.0, 1.0);
      if (std::acos(c) <= field.tile_half_angle[tile] + bound_angle[k]) active.push_back(k);
    }
    const int u0 = (tile % field.tiles_u) * kTile, v0 = (tile / field.tiles_u) * kTile;
    const int u1 = std::min(w, u0 + kTile), v1 = std::min(h, v0 + kTile);
    for (int v = v0; v < v1; ++v) {
      for (int u = u0; u < u1; ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * w + u;
        const Vec3& d = rays[idx];
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_obj = n_obj;
        double best_a = 0.0, best_b = 0.0;
        for (const std::size_t k : active) {
          double a = 0.0, b = 0.0;
          const double t = intersect(prepared[k], d, &a, &b);
          if (t == std::numeric_limits<double>::infinity()) continue;
          if (detections) {
            Extent& e = extents[k];
            ++e.total;
            e.u_min = std::min(e.u_min, u);
            e.u_max = std::max(e.u_max, u);
            e.v_min = std::min(e.v_min, v);
            e.v_max = std::max(e.v_max, v);
          }
          if (t < best) {
            best = t;
            best_obj = k;
            best_a = a;
            best_b = b;
          }
        }
        if (best_obj == n_obj) {
          if (shade) {
            for (int c = 0; c < image.channels; ++c) image.pixels[idx * image.channels + c] = bg;
          }
          continue;
        }
        if (detections) ++extents[best_obj].visible;
        if (depth) {
          depth->values[idx] = best * d.z();
          depth->valid[idx] = 1;
        }
        if (!shade) continue;

        const Prepared& p = prepared[best_obj];
        const SceneObject& obj = scene.objects[best_obj];
        Vec3 local;
        double lighting = quad_light[best_obj];
        if (p.sphere) {
          const Vec3 rel = best * d - p.center;
          const Vec3 normal = rel.normalized();
          local = c2w * rel;
          lighting = 0.35 + 0.65 * std::max(0.0, normal.dot(light));
        } else {
          local = Vec3(best_a * p.len_u, best_b * p.len_v, 0.0);
        }
        const double tex = rasters[best_obj] ? rasters[best_obj]->sample(local.x(), local.y())
                                             : texture_value(obj.texture, local);
        const double shade_factor = tex * lighting;
        for (int c = 0; c < 3; ++c) {
          const double value = std::clamp(color255[best_obj][c] * shade_factor, 0.0, 255.0);
          image.pixels[idx * 3 + c] = static_cast<std::uint8_t>(value + 0.5);
        }
      }
    }
  }

  if (detections) {
    for (std::size_t k = 0; k < n_obj; ++k) {
      const Extent& e = extents[k];
      const SceneObject& obj = scene.objects[k];
      if (obj.label.empty() || e.total == 0 || 2 * e.visible < e.total) continue;
      Detection det;
      det.label = obj.label;
      det.confidence = 1.0;
      det.bbox = {static_cast<double>(e.u_min), static_cast<double>(e.v_min), static_cast<double>(e.u_max + 1),
                  static_cast<double>(e.v_max + 1)};
      det.distance_m = w2c.apply(obj.center()).z();
      detections->push_back(std::move(det));
    }
  }
}

StereoFrame StereoRenderer::render(const Scene& scene, const GimbalAngles& angles) const {
  const CameraPoses poses = camera_poses(rig_, angles);
  StereoFrame f;
  f.sim_time = scene.time;
  f.gimbal_angles = angles;
  f.left = ImageBuffer(rig_.left.width, rig_.left.height, 3);
  f.right = ImageBuffer(rig_.right.width, rig_.right.height, 3);
  f.gt_depth_left = DepthMap(rig_.left.width, rig_.left.height);
  f.gt_depth_left.focal_px = rig_.left.fx;
  f.gt_depth_left.baseline_m = rig_.baseline();
  render_camera(scene, poses.left, rays_left_, f.left, &f.gt_depth_left, &f.gt_detections);
  render_camera(scene, poses.right, rays_right_, f.right, nullptr, nullptr);
  return f;
}

std::vector<Detection> StereoRenderer::ground_truth(const Scene& scene, const GimbalAngles& angles) const {
  const CameraPoses poses = camera_poses(rig_, angles);
  ImageBuffer none;
  std::vector<Detection> out;
  render_camera(scene, poses.left, rays_left_, none, nullptr, &out);
  return out;
}

StereoFrame render_stereo(const Scene& scene, const StereoRig& rig, const GimbalAngles& angles, double t) {
  const StereoRenderer renderer(rig);
  if (t > scene.time) return renderer.render(step_scene(scene, t - scene.time), angles);
  return renderer.render(scene, angles);
}

void degrade_low_light(ImageBuffer& img, double brightness, double noise_sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  for (auto& px : img.pixels) {
    double v = px * brightness;
    if (noise_sigma > 0.0) v += noise(rng);
    px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
}

ChessboardViews generate_chessboard_views(const CameraIntrinsics& intr, const std::optional<StereoRig>& rig,
                                          const std::vector<Pose>& poses, const ChessboardSpec& board) {
  const std::vector<Vec2> corners = board.corners();
  auto project_view = [&](const Pose& pose, const CameraIntrinsics& cam, const std::string& id) {
    CorrespondenceSet set;
    set.view_id = id;
    for (const auto& c : corners) {
      const auto uv = project_point(pose.apply(Vec3(c.x(), c.y(), 0.0)), cam);
      if (!uv) throw PreconditionError("chessboard view '" + id + "' is not fully in view");
      set.board_points.push_back(c);
      set.image_points.push_back(*uv);
    }
    return set;
  };
  ChessboardViews out;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string id = "view" + std::to_string(i);
    out.left.push_back(project_view(poses[i], intr, id));
    if (rig) {
      Pose right;
      right.rotation = rig->relative_rotation * poses[i].rotation;
      right.translation = rig->relative_rotation * poses[i].translation + rig->relative_translation;
      out.right.push_back(project_view(right, rig->right, id));
    }
  }
  return out;
}

std::vector<Pose> standard_board_poses(int count) {
  const ChessboardSpec board;
  const Vec3 board_center((board.cols - 1) * board.square / 2.0, (board.rows - 1) * board.square / 2.0, 0.0);
  std::vector<Pose> poses;
  for (int i = 0; i < count; ++i) {
    const double phase = 2.0 * std::numbers::pi * i / std::max(count, 1);
    const double tilt_x = 25.0 * std::cos(phase);
    const double tilt_y = 25.0 * std::sin(phase);
    const double spin = 6.0 * ((i % 3) - 1);
    Pose p;
    p.rotation = (Eigen::AngleAxisd(tilt_y * kDegToRad, Vec3::UnitY()) *
                  Eigen::AngleAxisd(tilt_x * kDegToRad, Vec3::UnitX()) *
                  Eigen::AngleAxisd(spin * kDegToRad, Vec3::UnitZ()))
                     .toRotationMatrix();
    const Vec3 target(0.036 + 0.02 * std::sin(1.7 * i), 0.015 * std::cos(2.3 * i), 0.55 + 0.04 * (i % 3));
    p.translation = target - p.rotation * board_center;
    poses.push_back(p);
  }
  return poses;
}

}  // namespace sentry
