// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coopsight/io.hpp"
#include "coopsight/occlusion.hpp"
#include "coopsight/projection.hpp"
#include "coopsight/random.hpp"
#include "coopsight/scene.hpp"

namespace coopsight {

enum class Decision { kProceed, kMonitor, kYield, kStop };
inline constexpr std::array<Decision, 4> kAllDecisions = {Decision::kProceed, Decision::kMonitor,
                                                          Decision::kYield, Decision::kStop};
enum class HazardLevel { kNone, kLow, kMedium, kHigh };
enum class TaskType { kSpatial, kCounting, kManeuver };
inline constexpr std::array<TaskType, 3> kAllTasks = {TaskType::kSpatial, TaskType::kCounting,
                                                      TaskType::kManeuver};

std::string_view to_string(Decision d);
std::string_view to_string(HazardLevel h);
std::string_view to_string(TaskType t);
std::optional<Decision> decision_from_string(std::string_view s);
std::optional<HazardLevel> hazard_from_string(std::string_view s);
std::optional<TaskType> task_from_string(std::string_view s);

struct GroundedObject {
  ObjectClass type = ObjectClass::kCar;
  /// Empty only for leniently parsed predictions with a missing or broken box.
  std::optional<PixelBox> bbox;
  double distance_m = 0.0;
  std::string sensor_id;

  bool operator==(const GroundedObject&) const = default;
};

struct GroundedAnswer {
  Decision decision = Decision::kProceed;
  HazardLevel hazard_level = HazardLevel::kNone;
  std::size_t count = 0;
  std::vector<GroundedObject> grounded_objects;

  bool operator==(const GroundedAnswer&) const = default;
};

/// Keys in canonical order: decision, hazard_level, count, grounded_objects;
/// per object: type, bbox, distance_m, sensor_id.
Json to_json(const GroundedAnswer& a);
/// Compact canonical serialization.
std::string canonical_json(const GroundedAnswer& a);

enum class ParseMode { kStrict, kLenient };

enum class ParseErrorCode {
  kUnparseable,
  kMissingField,
  kUnknownKey,
  kInconsistent,
  kInvalidDecision,
  kInvalidField,
};

std::string_view to_string(ParseErrorCode c);

class ParseError : public Error {
 public:
  ParseError(ParseErrorCode code, const std::string& detail)
      : Error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  ParseErrorCode code() const { return code_; }

 private:
  ParseErrorCode code_;
};

struct ParsedAnswer {
  GroundedAnswer answer;
  /// Human-readable notes for every lenient coercion, e.g. "count: coerced from string".
  std::vector<std::string> repairs;
};

/// Strict: exactly one JSON object with exactly the schema keys.
/// Lenient: the last well-formed JSON object in free text, with coercions.
ParsedAnswer parse_answer(std::string_view text, ParseMode mode);

struct QraRecord {
  std::string record_id;
  std::string scene_id;
  TaskType task = TaskType::kSpatial;
  /// Phrasing variant 0-3.
  int persona = 0;
  std::string question;
  std::string rationale;
  std::string answer_text;
  GroundedAnswer grounded;
  /// Scene object ids parallel to grounded.grounded_objects.
  std::vector<std::string> gt_object_ids;
  SplitTag split_tag = SplitTag::kTrain;
};

Json to_json(const QraRecord& r);
QraRecord record_from_json(const Json& j);
std::vector<QraRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, std::span<const QraRecord> records);

struct TaskMix {
  double spatial = 0.30;
  double counting = 0.30;
  double maneuver = 0.40;

  std::array<double, 3> fractions() const { return {spatial, counting, maneuver}; }
  void validate() const;
};

/// Ground-truth decision rule over the nearest occluded object.
struct HazardPolicy {
  double stop_within_m = 15.0;
  double yield_within_m = 30.0;
  double high_within_m = 15.0;
  double medium_within_m = 40.0;

  Decision decide(std::optional<double> nearest_occluded_m) const;
  HazardLevel hazard(std::optional<double> nearest_occluded_m) const;
};

struct QraConfig {
  HazardPolicy hazard;
  bool with_rationale = true;
  std::size_t max_grounded = 6;
  /// Passed to sector_of for direction words.
  double heading_offset = 0.0;
};

using LabelMap = std::map<std::string, std::vector<OcclusionLabel>, std::less<>>;
using SceneIndex = std::map<std::string, const Scene*, std::less<>>;

SceneIndex index_scenes(std::span<const Scene> scenes);

/// Label rows {scene_id, object_id, occluded, coverage, depth_rank}.
std::vector<Json> label_rows(std::string_view scene_id, std::span<const OcclusionLabel> labels);
LabelMap read_labels(const std::filesystem::path& path);

/// Camera and outward-rounded box used to ground an object: the largest
/// projection among infrastructure cameras, falling back to the ego camera.
std::optional<std::pair<std::string, PixelBox>> grounding_view(const Scene& scene,
                                                               const ObjectBox3D& obj);

QraRecord make_record(const Scene& scene, std::span<const OcclusionLabel> labels, TaskType task,
                      Rng& rng, const QraConfig& cfg = {});

/// Spatial-awareness record for a fixed sector and phrasing variant.
QraRecord make_spatial_record(const Scene& scene, std::span<const OcclusionLabel> labels,
                              CardinalSector sector, int persona, const QraConfig& cfg = {});

/// `n_records` records for one scene with the task counts apportioned from
/// `mix` by largest remainder. An empty scene yields counting records only.
std::vector<QraRecord> generate_records(const Scene& scene, std::span<const OcclusionLabel> labels,
                                        const TaskMix& mix, std::size_t n_records,
                                        std::uint64_t seed, const QraConfig& cfg = {});

/// Dataset of `n_records` records spread round-robin over the scenes, with
/// the global task counts apportioned from `mix`.
std::vector<QraRecord> generate_dataset(std::span<const Scene> scenes, const LabelMap& labels,
                                        const TaskMix& mix, std::size_t n_records,
                                        std::uint64_t seed, const QraConfig& cfg = {},
                                        int threads = 1);

// ---------------------------------------------------------------------------
// Validation

struct TolerancePolicy {
  double abs_floor = 2.0;
  double rel_frac = 0.05;
  /// Allowed gap between a distance quoted in answer_text and the JSON.
  double text_gap_m = 1.0;

  double tolerance(double true_distance) const {
    return std::max(abs_floor, rel_frac * true_distance);
  }
};

enum class RejectReason { kCountMismatch, kUnknownSensor, kDistanceHallucination, kTextDistanceMismatch };
inline constexpr std::array<RejectReason, 4> kAllRejectReasons = {
    RejectReason::kCountMismatch, RejectReason::kUnknownSensor,
    RejectReason::kDistanceHallucination, RejectReason::kTextDistanceMismatch};

std::string_view to_string(RejectReason r);

struct Rejection {
  std::size_t index = 0;
  std::string record_id;
  RejectReason reason = RejectReason::kCountMismatch;
  std::string detail;
};

struct ValidationReport {
  std::vector<std::size_t> accepted;
  std::vector<Rejection> rejected;

  std::size_t total() const { return accepted.size() + rejected.size(); }
  std::map<RejectReason, std::size_t> histogram() const;
  Json to_json() const;
  std::string to_text() const;
};

/// First distance quoted with a metric unit ("37 meters", "12.5 m").
std::optional<double> first_distance_mention(std::string_view text);

/// Checks run in a fixed order and the first failure is the reason:
/// count consistency, sensor existence, distance against ground truth, then
/// the distance quoted in answer_text. Unknown scene ids are a hard error.
ValidationReport validate_dataset(std::span<const QraRecord> records, const SceneIndex& scenes,
                                  const LabelMap& labels, const TolerancePolicy& policy = {});

struct InjectedFault {
  std::size_t index = 0;
  RejectReason expected = RejectReason::kCountMismatch;
};

/// Corrupts `n_faults` distinct records, split evenly over the four fault
/// classes, each designed to trip exactly its own check.
std::vector<InjectedFault> inject_faults(std::vector<QraRecord>& records, const SceneIndex& scenes,
                                         std::size_t n_faults, std::uint64_t seed,
                                         const TolerancePolicy& policy = {});

}  // namespace coopsight
