// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "coopsight/projection.hpp"
#include "coopsight/scene.hpp"
#include "coopsight/scenegen.hpp"

namespace coopsight::testing {

/// The sample answer JSON, spacing as published.
inline const std::string kSampleAnswer =
    R"({ "decision": "monitor", "hazard_level": "medium", "count": 1,
  "grounded_objects": [{ "type": "car",
   "bbox": [720, 245, 862, 339], "distance_m": 37.06,
   "sensor_id": "s110_camera_basler_south1_8mm" }]})";

inline const std::string kSampleCanonical =
    R"({"decision":"monitor","hazard_level":"medium","count":1,"grounded_objects":[{"type":"car","bbox":[720,245,862,339],"distance_m":37.06,"sensor_id":"s110_camera_basler_south1_8mm"}]})";

inline ObjectBox3D box(std::string id, ObjectClass cls, double x, double y, double length,
                       double width, double yaw = 0.0, double height = 1.6) {
  ObjectBox3D b;
  b.id = std::move(id);
  b.class_label = cls;
  b.center = {x, y, height / 2};
  b.dims = {length, width, height};
  b.yaw = yaw;
  return b;
}

/// Ego camera plus one pole camera south-west of the intersection.
inline std::vector<CameraModel> cameras() {
  const Eigen::Matrix3d k = default_intrinsics();
  return {make_camera(kInfraSensorIds[0], k, kIntersectionCenter + Eigen::Vector3d(-14, -14, 6.5),
                      kIntersectionCenter, kImageWidth, kImageHeight),
          make_camera(kEgoSensorId, k, {0, 0, 1.6}, {10, 0, 1.6}, kImageWidth, kImageHeight)};
}

inline Scene scene_of(std::vector<ObjectBox3D> objects, std::string id = "scene_test") {
  Scene s;
  s.scene_id = std::move(id);
  s.objects = std::move(objects);
  s.cameras = cameras();
  return s;
}

/// A van 20 m out hiding a car at (25.04, -27.33), both broadside to the ego.
inline Scene sample_scene() {
  const Eigen::Vector2d car(25.04, -27.33);
  const Eigen::Vector2d dir = car.normalized();
  const Eigen::Vector2d van = 20.0 * dir;
  const double across = std::atan2(dir.y(), dir.x()) + std::numbers::pi / 2;
  Scene s = scene_of({box("obj_00", ObjectClass::kVan, van.x(), van.y(), 5.2, 2.0, across, 2.4),
                      box("obj_01", ObjectClass::kCar, car.x(), car.y(), 4.5, 1.8, across, 1.5)},
                     "scene_sample");
  // The south pole camera watches the car from across the road.
  s.cameras[0] = make_camera(kInfraSensorIds[0], default_intrinsics(), {45.0, -45.0, 6.5},
                             {car.x(), car.y(), 0.0}, kImageWidth, kImageHeight);
  return s;
}

/// Camera somewhere around the intersection looking at a random ground point.
inline CameraModel random_camera(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pos(-30, 30);
  std::uniform_real_distribution<double> height(1, 10);
  std::uniform_real_distribution<double> f(500, 2500);
  std::uniform_int_distribution<int> size(400, 2000);
  const int w = size(gen);
  const int h = size(gen);
  std::uniform_real_distribution<double> cx(0.3 * w, 0.7 * w);
  std::uniform_real_distribution<double> cy(0.3 * h, 0.7 * h);
  const Eigen::Vector3d position(pos(gen), pos(gen), height(gen));
  Eigen::Vector3d target(pos(gen), pos(gen), 0.0);
  if ((target - position).head<2>().norm() < 1.0) target.x() += 5.0;
  return make_camera("cam", pinhole(f(gen), f(gen), cx(gen), cy(gen)), position, target, w, h);
}

inline ObjectBox3D random_box(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pos(-40, 40);
  std::uniform_real_distribution<double> d(0.5, 12);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  auto b = box("obj", ObjectClass::kCar, pos(gen), pos(gen), d(gen), d(gen), yaw(gen), d(gen) / 3);
  return b;
}

}  // namespace coopsight::testing
