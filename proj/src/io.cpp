// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/io.hpp"

#include <fstream>
#include <sstream>

namespace coopsight {

namespace {

Json vec_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json mat_json(const Eigen::Matrix3d& m) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

Eigen::Vector3d vec_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(std::string(what) + ": expected an array of 3 numbers");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Eigen::Matrix3d mat_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(std::string(what) + ": expected 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec_from(j.at(r), what).transpose();
  return m;
}

}  // namespace

Json to_json(const ObjectBox3D& obj) {
  Json j;
  j["id"] = obj.id;
  j["class_label"] = to_string(obj.class_label);
  j["center"] = vec_json(obj.center);
  j["dims"] = vec_json(obj.dims);
  j["yaw"] = obj.yaw;
  return j;
}

Json to_json(const CameraModel& cam) {
  Json j;
  j["sensor_id"] = cam.sensor_id;
  j["intrinsics"] = mat_json(cam.intrinsics);
  j["extrinsics"] = {{"rotation", mat_json(cam.rotation)},
                     {"translation", vec_json(cam.translation)}};
  j["image_size"] = Json::array({cam.width_px, cam.height_px});
  return j;
}

Json to_json(const Scene& scene) {
  Json j;
  j["scene_id"] = scene.scene_id;
  Json objects = Json::array();
  for (const auto& o : scene.objects) objects.push_back(to_json(o));
  j["objects"] = std::move(objects);
  Json cameras = Json::array();
  for (const auto& c : scene.cameras) cameras.push_back(to_json(c));
  j["cameras"] = std::move(cameras);
  j["split_tag"] = to_string(scene.split_tag);
  return j;
}

ObjectBox3D object_from_json(const Json& j) {
  ObjectBox3D o;
  o.id = j.at("id").get<std::string>();
  const auto label = j.at("class_label").get<std::string>();
  const auto cls = class_from_string(label);
  if (!cls) throw Error("unknown class_label '" + label + "'");
  o.class_label = *cls;
  o.center = vec_from(j.at("center"), "center");
  o.dims = vec_from(j.at("dims"), "dims");
  o.yaw = j.at("yaw").get<double>();
  o.validate();
  return o;
}

CameraModel camera_from_json(const Json& j) {
  CameraModel c;
  c.sensor_id = j.at("sensor_id").get<std::string>();
  c.intrinsics = mat_from(j.at("intrinsics"), "intrinsics");
  c.rotation = mat_from(j.at("extrinsics").at("rotation"), "rotation");
  c.translation = vec_from(j.at("extrinsics").at("translation"), "translation");
  const auto& size = j.at("image_size");
  if (!size.is_array() || size.size() != 2) throw Error("image_size: expected [width, height]");
  c.width_px = size.at(0).get<int>();
  c.height_px = size.at(1).get<int>();
  c.validate();
  return c;
}

Scene scene_from_json(const Json& j) {
  Scene s;
  s.scene_id = j.at("scene_id").get<std::string>();
  for (const auto& o : j.at("objects")) s.objects.push_back(object_from_json(o));
  for (const auto& c : j.at("cameras")) s.cameras.push_back(camera_from_json(c));
  if (j.contains("split_tag")) {
    const auto tag = j.at("split_tag").get<std::string>();
    const auto split = split_from_string(tag);
    if (!split) throw Error("unknown split_tag '" + tag + "'");
    s.split_tag = *split;
  }
  s.validate();
  return s;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(Json::parse(line), line_no);
    } catch (const std::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::string text;
  for (const auto& r : rows) {
    text += r.dump();
    text += '\n';
  }
  write_text(path, text);
}

std::vector<Scene> read_scenes(const std::filesystem::path& path) {
  std::vector<Scene> scenes;
  for_each_jsonl(path, [&](const Json& j, std::size_t) { scenes.push_back(scene_from_json(j)); });
  return scenes;
}

std::string scenes_to_jsonl(const std::vector<Scene>& scenes) {
  std::string text;
  for (const auto& s : scenes) {
    text += to_json(s).dump();
    text += '\n';
  }
  return text;
}

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes) {
  write_text(path, scenes_to_jsonl(scenes));
}

}  // namespace coopsight
