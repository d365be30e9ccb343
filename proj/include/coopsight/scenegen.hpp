// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coopsight/io.hpp"
#include "coopsight/scene.hpp"

namespace coopsight {

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t n_scenes = 100;
  int objects_min = 3;
  int objects_max = 10;
  /// Probability that a new object is placed in an existing object's shadow.
  double occluder_bias = 0.3;
  std::vector<std::pair<ObjectClass, double>> class_mix = {
      {ObjectClass::kCar, 0.45},        {ObjectClass::kVan, 0.12},
      {ObjectClass::kTruck, 0.08},      {ObjectClass::kBus, 0.05},
      {ObjectClass::kPedestrian, 0.18}, {ObjectClass::kBicycle, 0.08},
      {ObjectClass::kMotorcycle, 0.04}};
  /// Infrastructure cameras (1-4); the ego camera is always added.
  int camera_count = 4;

  void validate() const;
};

Json to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const Json& j, GenConfig base = {});

/// Intersection center in the ego frame; infrastructure poles stand at its corners.
inline const Eigen::Vector3d kIntersectionCenter{25.0, 0.0, 0.0};

inline constexpr std::array<const char*, 4> kInfraSensorIds = {
    "s110_camera_basler_south1_8mm", "s110_camera_basler_south2_8mm",
    "s110_camera_basler_north_8mm", "s110_camera_basler_east_8mm"};
inline constexpr const char* kEgoSensorId = "vehicle_camera_basler_16mm";

/// The calibration shared by every generated camera (1920x1200, f = 1400 px).
Eigen::Matrix3d default_intrinsics();
inline constexpr int kImageWidth = 1920;
inline constexpr int kImageHeight = 1200;

/// Footprint of the ego vehicle itself, kept clear of generated objects.
Footprint ego_footprint();

/// One scene from its own derived stream; pure function of (cfg, index).
Scene generate_scene(const GenConfig& cfg, std::size_t index);

/// Deterministic for a fixed config regardless of `threads`. Throws
/// Error("scene too dense") after 1000 rejected placements of one object.
std::vector<Scene> generate(const GenConfig& cfg, int threads = 1);

/// Largest-remainder apportionment of `n` items; ties go to the earlier slot.
std::vector<std::size_t> apportion(std::span<const double> fractions, std::size_t n);

/// Tags every scene with a split; whole scenes only, in hash order of scene_id.
std::vector<Scene> stratified_split(std::vector<Scene> scenes,
                                    const std::array<double, 3>& fractions);

/// scene_id -> split sidecar manifest.
Json split_manifest(std::span<const Scene> scenes);

}  // namespace coopsight
