// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>

#include "coopsight/scene.hpp"

namespace coopsight {

/// Axis-aligned image box, top-left origin. Coordinates stay real-valued.
struct Bbox2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
};

/// Integer pixel box as serialized in answers: [x_min, y_min, x_max, y_max].
using PixelBox = std::array<int, 4>;

/// Outward rounding (floor of minima, ceil of maxima); never collapses a valid box.
PixelBox to_pixel_box(const Bbox2D& b);
Bbox2D from_pixel_box(const PixelBox& p);
bool pixel_box_valid(const PixelBox& p);

inline constexpr double kNearPlane = 0.1;

/// Axis-aligned hull of the box after near-plane clipping, before image clipping.
/// Empty when nothing lies in front of the near plane.
std::optional<Bbox2D> project_hull(const ObjectBox3D& obj, const CameraModel& cam);

/// Projected 2D box clipped to the image; empty when "not visible".
/// Throws ConfigError for an invalid camera.
std::optional<Bbox2D> project_box(const ObjectBox3D& obj, const CameraModel& cam);

/// Pinhole projection of an ego-frame point with positive depth.
std::optional<Eigen::Vector2d> project_point(const Eigen::Vector3d& p_ego, const CameraModel& cam);

double iou(const Bbox2D& a, const Bbox2D& b);

/// Intrinsic matrix for a zero-skew pinhole.
Eigen::Matrix3d pinhole(double fx, double fy, double cx, double cy);

/// Rotation of a camera at `position` looking at `target`, ego z as up.
/// Rows are the camera right, down and forward axes expressed in the ego frame.
Eigen::Matrix3d look_at_rotation(const Eigen::Vector3d& position, const Eigen::Vector3d& target);

/// Camera with the given pose; translation = -R * position.
CameraModel make_camera(std::string sensor_id, const Eigen::Matrix3d& intrinsics,
                        const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                        int width_px, int height_px);

}  // namespace coopsight
