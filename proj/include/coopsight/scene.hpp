// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace coopsight {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ObjectClass { kCar, kVan, kTruck, kBus, kPedestrian, kBicycle, kMotorcycle };

inline constexpr std::array<ObjectClass, 7> kAllClasses = {
    ObjectClass::kCar,        ObjectClass::kVan,     ObjectClass::kTruck,     ObjectClass::kBus,
    ObjectClass::kPedestrian, ObjectClass::kBicycle, ObjectClass::kMotorcycle};

std::string_view to_string(ObjectClass c);
std::optional<ObjectClass> class_from_string(std::string_view s);

enum class SplitTag { kTrain, kVal, kTest };

std::string_view to_string(SplitTag s);
std::optional<SplitTag> split_from_string(std::string_view s);

/// Oriented 3D box in the ego-local frame (x forward, y left, z up).
struct ObjectBox3D {
  std::string id;
  ObjectClass class_label = ObjectClass::kCar;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();  // length, width, height
  double yaw = 0.0;

  /// Throws ConfigError unless dims > 0 and yaw lies in [-pi, pi).
  void validate() const;
};

/// Pinhole camera. Extrinsics map ego-frame points into the camera frame
/// (x right, y down, z along the optical axis): p_cam = rotation * p_ego + translation.
struct CameraModel {
  std::string sensor_id;
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int width_px = 0;
  int height_px = 0;

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_ego) const {
    return rotation * p_ego + translation;
  }

  /// Throws ConfigError on bad intrinsics, image size or a rotation that is
  /// not orthonormal with determinant +1 (1e-9).
  void validate() const;
};

struct Scene {
  std::string scene_id;
  std::vector<ObjectBox3D> objects;
  std::vector<CameraModel> cameras;
  SplitTag split_tag = SplitTag::kTrain;

  /// Validates every object and camera, id uniqueness and camera presence.
  void validate() const;

  const ObjectBox3D* find_object(std::string_view id) const;
  const CameraModel* find_camera(std::string_view sensor_id) const;
};

/// Eight 45 degree compass sectors, clockwise from north.
enum class CardinalSector { kN, kNE, kE, kSE, kS, kSW, kW, kNW };

std::string_view to_string(CardinalSector s);
/// Lower-case direction word, e.g. "southeast".
std::string_view direction_word(CardinalSector s);
std::optional<CardinalSector> sector_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Ground-plane geometry. Templated on the scalar so the same expressions serve
// double-precision production code and the float tensors of the adapter.

template <typename Derived>
typename Derived::Scalar ground_range(const Eigen::MatrixBase<Derived>& p) {
  return std::hypot(p(0), p(1));
}

/// Compass bearing in radians, clockwise from north, with the ego facing
/// north at `heading_offset` == 0. Result in [0, 2pi).
template <typename Scalar>
Scalar compass_bearing(Scalar x, Scalar y, Scalar heading_offset = Scalar(0)) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar b = std::atan2(-y, x) + heading_offset;
  b = std::fmod(b, two_pi);
  if (b < Scalar(0)) b += two_pi;
  if (b >= two_pi) b -= two_pi;
  return b;
}

/// Wraps an angle into [-pi, pi).
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  a = std::fmod(a + pi, Scalar(2) * pi);
  if (a < Scalar(0)) a += Scalar(2) * pi;
  return a - pi;
}

/// Ground-plane range from the ego origin to the box center.
double range_to(const ObjectBox3D& obj);

/// Sector containing the box center; boundaries tie-break clockwise.
/// Throws Error("undefined bearing") at the origin.
CardinalSector sector_of(const ObjectBox3D& obj, double heading_offset = 0.0);
CardinalSector sector_of_point(double x, double y, double heading_offset = 0.0);

using Footprint = std::array<Eigen::Vector2d, 4>;

/// Ground-plane corners of the yaw-rotated length x width rectangle, counter-clockwise.
Footprint footprint_corners(const ObjectBox3D& obj);

/// Eight 3D corners; bit 0 selects +length, bit 1 +width, bit 2 +height.
std::array<Eigen::Vector3d, 8> box_corners(const ObjectBox3D& obj);

/// Signed shoelace area of a polygon (positive when counter-clockwise).
double polygon_area(const std::vector<Eigen::Vector2d>& poly);

/// Strict interior test for a convex counter-clockwise polygon.
bool convex_contains_strict(const Footprint& poly, const Eigen::Vector2d& p);
/// Closed (boundary-inclusive) variant.
bool convex_contains(const Footprint& poly, const Eigen::Vector2d& p);

/// Separating-axis overlap test for two rectangles with a clearance margin.
bool footprints_overlap(const Footprint& a, const Footprint& b, double margin = 0.0);

}  // namespace coopsight
