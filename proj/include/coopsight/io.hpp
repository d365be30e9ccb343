// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopsight/scene.hpp"

namespace coopsight {

using Json = nlohmann::ordered_json;

/// Raised for malformed input; the message names the file and line.
class InputError : public Error {
 public:
  using Error::Error;
};

Json to_json(const ObjectBox3D& obj);
Json to_json(const CameraModel& cam);
Json to_json(const Scene& scene);

ObjectBox3D object_from_json(const Json& j);
CameraModel camera_from_json(const Json& j);
Scene scene_from_json(const Json& j);

/// Calls `fn(json, line_number)` for every non-blank line. Parse errors and
/// exceptions thrown by `fn` are rethrown as InputError naming file:line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

/// Writes one compact JSON document per line, newline-terminated.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::vector<Scene> read_scenes(const std::filesystem::path& path);
void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes);

/// Scenes serialized exactly as they are written to disk.
std::string scenes_to_jsonl(const std::vector<Scene>& scenes);

}  // namespace coopsight
