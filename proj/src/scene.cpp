// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/scene.hpp"

#include <algorithm>
#include <set>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace coopsight {

namespace {

constexpr std::array<std::string_view, 7> kClassNames = {
    "car", "van", "truck", "bus", "pedestrian", "bicycle", "motorcycle"};
constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};
constexpr std::array<std::string_view, 8> kSectorNames = {"N", "NE", "E", "SE",
                                                          "S", "SW", "W", "NW"};
constexpr std::array<std::string_view, 8> kDirectionWords = {
    "north", "northeast", "east", "southeast", "south", "southwest", "west", "northwest"};

}  // namespace

std::string_view to_string(ObjectClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<ObjectClass> class_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == s) return static_cast<ObjectClass>(i);
  }
  return std::nullopt;
}

std::string_view to_string(SplitTag s) { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<SplitTag> split_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i) {
    if (kSplitNames[i] == s) return static_cast<SplitTag>(i);
  }
  return std::nullopt;
}

std::string_view to_string(CardinalSector s) { return kSectorNames[static_cast<std::size_t>(s)]; }

std::string_view direction_word(CardinalSector s) {
  return kDirectionWords[static_cast<std::size_t>(s)];
}

std::optional<CardinalSector> sector_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSectorNames.size(); ++i) {
    if (kSectorNames[i] == s || kDirectionWords[i] == s) return static_cast<CardinalSector>(i);
  }
  return std::nullopt;
}

void ObjectBox3D::validate() const {
  if (!(dims.array() > 0.0).all() || !dims.allFinite()) {
    throw ConfigError("object '" + id + "': dims must be positive");
  }
  if (!center.allFinite()) throw ConfigError("object '" + id + "': non-finite center");
  if (!(yaw >= -std::numbers::pi && yaw < std::numbers::pi)) {
    throw ConfigError("object '" + id + "': yaw outside [-pi, pi)");
  }
}

void CameraModel::validate() const {
  if (width_px <= 0 || height_px <= 0) {
    throw ConfigError("camera '" + sensor_id + "': image size must be positive");
  }
  if (!(fx() > 0.0) || !(fy() > 0.0)) {
    throw ConfigError("camera '" + sensor_id + "': focal lengths must be positive");
  }
  if (!(cx() > 0.0 && cx() < width_px) || !(cy() > 0.0 && cy() < height_px)) {
    throw ConfigError("camera '" + sensor_id + "': principal point outside image");
  }
  if (intrinsics(0, 1) != 0.0 || intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 ||
      intrinsics(2, 1) != 0.0 || intrinsics(2, 2) != 1.0) {
    throw ConfigError("camera '" + sensor_id + "': intrinsics must be zero-skew pinhole");
  }
  const double ortho_err =
      (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho_err <= 1e-9) || !(std::abs(rotation.determinant() - 1.0) <= 1e-9)) {
    throw ConfigError("camera '" + sensor_id + "': extrinsic rotation is not orthonormal");
  }
  if (!translation.allFinite()) {
    throw ConfigError("camera '" + sensor_id + "': non-finite translation");
  }
}

void Scene::validate() const {
  if (cameras.empty()) throw ConfigError("scene '" + scene_id + "': no cameras");
  std::set<std::string_view> ids;
  for (const auto& o : objects) {
    o.validate();
    if (!ids.insert(o.id).second) {
      throw ConfigError("scene '" + scene_id + "': duplicate object id '" + o.id + "'");
    }
  }
  std::set<std::string_view> sensors;
  for (const auto& c : cameras) {
    c.validate();
    if (!sensors.insert(c.sensor_id).second) {
      throw ConfigError("scene '" + scene_id + "': duplicate sensor id '" + c.sensor_id + "'");
    }
  }
}

const ObjectBox3D* Scene::find_object(std::string_view id) const {
  auto it = std::find_if(objects.begin(), objects.end(), [&](const auto& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

const CameraModel* Scene::find_camera(std::string_view sensor_id) const {
  auto it = std::find_if(cameras.begin(), cameras.end(),
                         [&](const auto& c) { return c.sensor_id == sensor_id; });
  return it == cameras.end() ? nullptr : &*it;
}

double range_to(const ObjectBox3D& obj) { return ground_range(obj.center); }

CardinalSector sector_of_point(double x, double y, double heading_offset) {
  if (x == 0.0 && y == 0.0) throw Error("undefined bearing");
  const double deg = compass_bearing(x, y, heading_offset) * 180.0 / std::numbers::pi;
  const auto idx = static_cast<int>(std::floor((deg + 22.5) / 45.0)) % 8;
  return static_cast<CardinalSector>(idx);
}

CardinalSector sector_of(const ObjectBox3D& obj, double heading_offset) {
  return sector_of_point(obj.center.x(), obj.center.y(), heading_offset);
}

Footprint footprint_corners(const ObjectBox3D& obj) {
  const Eigen::Rotation2Dd rot(obj.yaw);
  const Eigen::Vector2d c = obj.center.head<2>();
  const double hl = 0.5 * obj.dims.x();
  const double hw = 0.5 * obj.dims.y();
  return {c + rot * Eigen::Vector2d(hl, hw), c + rot * Eigen::Vector2d(-hl, hw),
          c + rot * Eigen::Vector2d(-hl, -hw), c + rot * Eigen::Vector2d(hl, -hw)};
}

std::array<Eigen::Vector3d, 8> box_corners(const ObjectBox3D& obj) {
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(obj.yaw, Eigen::Vector3d::UnitZ()).matrix();
  std::array<Eigen::Vector3d, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d sign((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    out[i] = obj.center + rot * sign.cwiseProduct(obj.dims);
  }
  return out;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

bool convex_contains_strict(const Footprint& poly, const Eigen::Vector2d& p) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    if (cross2(b - a, p - a) <= 0.0) return false;
  }
  return true;
}

bool convex_contains(const Footprint& poly, const Eigen::Vector2d& p) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    if (cross2(b - a, p - a) < 0.0) return false;
  }
  return true;
}

bool footprints_overlap(const Footprint& a, const Footprint& b, double margin) {
  auto separated_along = [&](const Footprint& ref) {
    for (std::size_t i = 0; i < 2; ++i) {
      const Eigen::Vector2d axis = (ref[i + 1] - ref[i]).normalized();
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const auto& p : a) {
        const double d = axis.dot(p);
        amin = std::min(amin, d);
        amax = std::max(amax, d);
      }
      for (const auto& p : b) {
        const double d = axis.dot(p);
        bmin = std::min(bmin, d);
        bmax = std::max(bmax, d);
      }
      if (amax + margin <= bmin || bmax + margin <= amin) return true;
    }
    return false;
  };
  return !(separated_along(a) || separated_along(b));
}

}  // namespace coopsight
