// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/projection.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace coopsight {

PixelBox to_pixel_box(const Bbox2D& b) {
  return {static_cast<int>(std::floor(b.x_min)), static_cast<int>(std::floor(b.y_min)),
          static_cast<int>(std::ceil(b.x_max)), static_cast<int>(std::ceil(b.y_max))};
}

Bbox2D from_pixel_box(const PixelBox& p) {
  return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2]),
          static_cast<double>(p[3])};
}

bool pixel_box_valid(const PixelBox& p) { return p[0] < p[2] && p[1] < p[3]; }

std::optional<Eigen::Vector2d> project_point(const Eigen::Vector3d& p_ego,
                                             const CameraModel& cam) {
  const Eigen::Vector3d pc = cam.to_camera(p_ego);
  if (!(pc.z() > 0.0)) return std::nullopt;
  const Eigen::Vector3d uvw = cam.intrinsics * pc;
  return Eigen::Vector2d(uvw.x() / uvw.z(), uvw.y() / uvw.z());
}

std::optional<Bbox2D> project_hull(const ObjectBox3D& obj, const CameraModel& cam) {
  const auto corners = box_corners(obj);
  std::array<Eigen::Vector3d, 8> cam_pts;
  bool any_positive = false;
  for (int i = 0; i < 8; ++i) {
    cam_pts[i] = cam.to_camera(corners[i]);
    any_positive = any_positive || cam_pts[i].z() > 0.0;
  }
  if (!any_positive) return std::nullopt;

  Bbox2D hull{1e300, 1e300, -1e300, -1e300};
  bool any = false;
  auto add = [&](const Eigen::Vector3d& pc) {
    const Eigen::Vector3d uvw = cam.intrinsics * pc;
    const double u = uvw.x() / uvw.z();
    const double v = uvw.y() / uvw.z();
    hull.x_min = std::min(hull.x_min, u);
    hull.y_min = std::min(hull.y_min, v);
    hull.x_max = std::max(hull.x_max, u);
    hull.y_max = std::max(hull.y_max, v);
    any = true;
  };
  for (const auto& pc : cam_pts) {
    if (pc.z() >= kNearPlane) add(pc);
  }
  // Box edges join corners whose indices differ in exactly one bit.
  for (int a = 0; a < 8; ++a) {
    for (int bit = 1; bit < 8; bit <<= 1) {
      const int b = a | bit;
      if (b == a) continue;
      const auto& pa = cam_pts[a];
      const auto& pb = cam_pts[b];
      if ((pa.z() >= kNearPlane) == (pb.z() >= kNearPlane)) continue;
      const double t = (kNearPlane - pa.z()) / (pb.z() - pa.z());
      Eigen::Vector3d p = pa + t * (pb - pa);
      p.z() = kNearPlane;
      add(p);
    }
  }
  if (!any) return std::nullopt;
  return hull;
}

std::optional<Bbox2D> project_box(const ObjectBox3D& obj, const CameraModel& cam) {
  cam.validate();
  auto hull = project_hull(obj, cam);
  if (!hull) return std::nullopt;
  Bbox2D b{std::clamp(hull->x_min, 0.0, static_cast<double>(cam.width_px)),
           std::clamp(hull->y_min, 0.0, static_cast<double>(cam.height_px)),
           std::clamp(hull->x_max, 0.0, static_cast<double>(cam.width_px)),
           std::clamp(hull->y_max, 0.0, static_cast<double>(cam.height_px))};
  if (!b.valid()) return std::nullopt;
  return b;
}

double iou(const Bbox2D& a, const Bbox2D& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

Eigen::Matrix3d pinhole(double fx, double fy, double cx, double cy) {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d look_at_rotation(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - position).normalized();
  const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ()).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return r;
}

CameraModel make_camera(std::string sensor_id, const Eigen::Matrix3d& intrinsics,
                        const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                        int width_px, int height_px) {
  CameraModel cam;
  cam.sensor_id = std::move(sensor_id);
  cam.intrinsics = intrinsics;
  cam.rotation = look_at_rotation(position, target);
  cam.translation = -cam.rotation * position;
  cam.width_px = width_px;
  cam.height_px = height_px;
  return cam;
}

}  // namespace coopsight
