// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/scenegen.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "coopsight/occlusion.hpp"
#include "coopsight/parallel.hpp"
#include "coopsight/projection.hpp"
#include "coopsight/random.hpp"

namespace coopsight {

namespace {

constexpr int kMaxRejections = 1000;
constexpr double kClearance = 0.3;
constexpr double kMinRange = 4.0;
constexpr double kMaxRange = 100.0;

// Nominal length, width, height per class.
Eigen::Vector3d nominal_dims(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar: return {4.5, 1.9, 1.6};
    case ObjectClass::kVan: return {5.2, 2.0, 2.2};
    case ObjectClass::kTruck: return {8.5, 2.5, 3.4};
    case ObjectClass::kBus: return {11.5, 2.6, 3.2};
    case ObjectClass::kPedestrian: return {0.6, 0.6, 1.75};
    case ObjectClass::kBicycle: return {1.8, 0.6, 1.6};
    case ObjectClass::kMotorcycle: return {2.1, 0.8, 1.5};
  }
  return {4.5, 1.9, 1.6};
}

ObjectClass sample_class(const GenConfig& cfg, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [cls, p] : cfg.class_mix) {
    acc += p;
    if (u < acc) return cls;
  }
  for (auto it = cfg.class_mix.rbegin(); it != cfg.class_mix.rend(); ++it) {
    if (it->second > 0.0) return it->first;
  }
  return cfg.class_mix.front().first;
}

// Road-aligned heading with a little jitter.
double sample_yaw(Rng& rng) {
  const double base = static_cast<double>(rng.index(4)) * 0.5 * std::numbers::pi;
  return wrap_angle(base + rng.uniform(-0.15, 0.15));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string indexed_id(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

void GenConfig::validate() const {
  if (objects_min < 0 || objects_max < objects_min) {
    throw ConfigError("objects_per_scene range is empty");
  }
  if (!(occluder_bias >= 0.0 && occluder_bias <= 1.0)) {
    throw ConfigError("occluder_bias must lie in [0, 1]");
  }
  if (class_mix.empty()) throw ConfigError("class_mix is empty");
  double total = 0.0;
  for (const auto& [cls, p] : class_mix) {
    if (!(p >= 0.0)) throw ConfigError("class_mix probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("class_mix must sum to 1");
  if (camera_count < 1 || camera_count > 4) throw ConfigError("camera_count must be 1-4");
}

Json to_json(const GenConfig& cfg) {
  Json mix = Json::object();
  for (const auto& [cls, p] : cfg.class_mix) mix[std::string(to_string(cls))] = p;
  Json j;
  j["seed"] = cfg.seed;
  j["n_scenes"] = cfg.n_scenes;
  j["objects_per_scene"] = Json::array({cfg.objects_min, cfg.objects_max});
  j["occluder_bias"] = cfg.occluder_bias;
  j["class_mix"] = std::move(mix);
  j["camera_count"] = cfg.camera_count;
  return j;
}

GenConfig gen_config_from_json(const Json& j, GenConfig base) {
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("n_scenes")) base.n_scenes = j.at("n_scenes").get<std::size_t>();
  if (j.contains("objects_per_scene")) {
    base.objects_min = j.at("objects_per_scene").at(0).get<int>();
    base.objects_max = j.at("objects_per_scene").at(1).get<int>();
  }
  if (j.contains("occluder_bias")) base.occluder_bias = j.at("occluder_bias").get<double>();
  if (j.contains("class_mix")) {
    base.class_mix.clear();
    for (const auto& [name, p] : j.at("class_mix").items()) {
      const auto cls = class_from_string(name);
      if (!cls) throw ConfigError("class_mix: unknown class '" + name + "'");
      base.class_mix.emplace_back(*cls, p.get<double>());
    }
  }
  if (j.contains("camera_count")) base.camera_count = j.at("camera_count").get<int>();
  base.validate();
  return base;
}

Eigen::Matrix3d default_intrinsics() {
  return pinhole(1400.0, 1400.0, kImageWidth / 2.0, kImageHeight / 2.0);
}

Footprint ego_footprint() {
  ObjectBox3D ego;
  ego.dims = {4.5, 1.9, 1.6};
  return footprint_corners(ego);
}

Scene generate_scene(const GenConfig& cfg, std::size_t index) {
  Rng rng(mix_seed(cfg.seed, index));
  Scene scene;
  scene.scene_id = indexed_id("scene_", index, 5);

  // Poles at the corners of the intersection, in sensor-id order.
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(-14.0, -14.0), Eigen::Vector2d(-14.0, 14.0), Eigen::Vector2d(14.0, 14.0),
      Eigen::Vector2d(14.0, -14.0)};
  for (int c = 0; c < cfg.camera_count; ++c) {
    const Eigen::Vector3d pos(kIntersectionCenter.x() + corners[c].x(),
                              kIntersectionCenter.y() + corners[c].y(), rng.uniform(5.0, 8.0));
    scene.cameras.push_back(make_camera(kInfraSensorIds[c], default_intrinsics(), pos,
                                        kIntersectionCenter, kImageWidth, kImageHeight));
  }
  scene.cameras.push_back(make_camera(kEgoSensorId, default_intrinsics(),
                                      Eigen::Vector3d(0.0, 0.0, 1.6),
                                      Eigen::Vector3d(10.0, 0.0, 1.6), kImageWidth, kImageHeight));

  const int n_objects =
      cfg.objects_min +
      static_cast<int>(rng.index(static_cast<std::uint64_t>(cfg.objects_max - cfg.objects_min + 1)));
  const Footprint ego = ego_footprint();
  std::vector<Footprint> placed;

  for (int k = 0; k < n_objects; ++k) {
    ObjectBox3D obj;
    obj.id = indexed_id("obj_", static_cast<std::size_t>(k), 2);
    obj.class_label = sample_class(cfg, rng);
    obj.dims = nominal_dims(obj.class_label) * rng.uniform(0.9, 1.1);
    const double half_diag = 0.5 * obj.dims.head<2>().norm();

    bool ok = false;
    for (int attempt = 0; attempt < kMaxRejections && !ok; ++attempt) {
      obj.yaw = sample_yaw(rng);
      const bool shadow = !scene.objects.empty() && rng.bernoulli(cfg.occluder_bias);
      Eigen::Vector2d xy;
      if (shadow) {
        const auto& occ = scene.objects[rng.index(scene.objects.size())];
        const AngularInterval prof = angular_profile(occ);
        const double theta = prof.start() + prof.span() * rng.uniform(0.2, 0.8);
        const double r = range_to(occ) + 0.5 * occ.dims.head<2>().norm() + half_diag +
                         rng.uniform(1.0, 15.0);
        xy = r * Eigen::Vector2d(std::cos(theta), std::sin(theta));
      } else {
        xy = {rng.uniform(-5.0, 60.0), rng.uniform(-35.0, 35.0)};
      }
      obj.center = {xy.x(), xy.y(), 0.5 * obj.dims.z()};
      const double range = ground_range(obj.center);
      if (range < kMinRange || range > kMaxRange) continue;

      const Footprint fp = footprint_corners(obj);
      if (footprints_overlap(fp, ego, kClearance)) continue;
      if (std::any_of(placed.begin(), placed.end(),
                      [&](const Footprint& other) { return footprints_overlap(fp, other, kClearance); })) {
        continue;
      }
      // Every object must be groundable in at least one camera.
      ok = std::any_of(scene.cameras.begin(), scene.cameras.end(),
                       [&](const CameraModel& cam) { return project_box(obj, cam).has_value(); });
    }
    if (!ok) throw Error("scene too dense");
    placed.push_back(footprint_corners(obj));
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

std::vector<Scene> generate(const GenConfig& cfg, int threads) {
  cfg.validate();
  std::vector<Scene> scenes(cfg.n_scenes);
  parallel_for(cfg.n_scenes, threads, [&](std::size_t i) { scenes[i] = generate_scene(cfg, i); });
  return scenes;
}

std::vector<std::size_t> apportion(std::span<const double> fractions, std::size_t n) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    // Round the quota so representable products like 0.3 * 1000 land exactly.
    const double quota = std::round(fractions[i] * static_cast<double>(n) * 1e9) / 1e9;
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[i];
    remainders.emplace_back(quota - std::floor(quota), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n && k < remainders.size(); ++k, ++assigned) {
    ++counts[remainders[k].second];
  }
  return counts;
}

std::vector<Scene> stratified_split(std::vector<Scene> scenes,
                                    const std::array<double, 3>& fractions) {
  if (scenes.size() < 3) throw ConfigError("stratified_split needs at least 3 scenes");
  double total = 0.0;
  for (const double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("split fractions must sum to 1");

  const auto counts = apportion(fractions, scenes.size());
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ha = fnv1a(scenes[a].scene_id);
    const auto hb = fnv1a(scenes[b].scene_id);
    return ha != hb ? ha < hb : scenes[a].scene_id < scenes[b].scene_id;
  });
  std::size_t pos = 0;
  for (std::size_t split = 0; split < 3; ++split) {
    for (std::size_t k = 0; k < counts[split]; ++k) {
      scenes[order[pos++]].split_tag = static_cast<SplitTag>(split);
    }
  }
  return scenes;
}

Json split_manifest(std::span<const Scene> scenes) {
  Json j = Json::object();
  for (const auto& s : scenes) j[s.scene_id] = to_string(s.split_tag);
  return j;
}

}  // namespace coopsight
