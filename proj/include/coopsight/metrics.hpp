// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopsight/qra.hpp"

namespace coopsight {

struct Prediction {
  std::string record_id;
  std::string raw_text;
  /// Empty on parse failure; failures are scored, never dropped.
  std::optional<GroundedAnswer> parsed;
  std::string parse_error;
};

/// Parses `raw_text` leniently.
Prediction make_prediction(std::string record_id, std::string raw_text);
/// Predictions JSONL: {record_id, raw_text}.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Ground-truth candidate for matching.
struct GtObject {
  std::string id;
  ObjectClass cls = ObjectClass::kCar;
  double distance = 0.0;
  bool occluded = false;
};

/// Ground-truth distance at the benchmark's resolution: range rounded to centimeters.
double gt_distance(const ObjectBox3D& obj);

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double error = 0.0;  // |predicted distance - true distance|
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gt;

  /// Sum of pair errors in ascending prediction order.
  double total_cost() const;
  std::optional<std::size_t> pred_for_gt(std::size_t gt) const;
};

inline constexpr double kMatchGate = 20.0;

/// One-to-one matching with equal classes and |error| <= gate. Maximizes the
/// number of pairs, then minimizes total error, solved exactly. Ties go to the
/// assignment giving each GT object, in order, the lowest prediction index.
MatchResult match_objects(std::span<const GroundedObject> preds, std::span<const GtObject> gt,
                          double gate_m = kMatchGate);

/// GT candidates of a record: its referenced objects with their labels.
std::vector<GtObject> record_gt(const QraRecord& record, const Scene& scene,
                                std::span<const OcclusionLabel> labels);

enum class ThresholdMode {
  kError,  ///< a match counts when its distance error is within the threshold
  kRange,  ///< only occluded objects within the threshold range are scored
};

std::string_view to_string(ThresholdMode m);
std::optional<ThresholdMode> threshold_mode_from_string(std::string_view s);

/// Reserved slot for a rationale similarity model (e.g. BERTScore).
using TextSimilarity = std::function<double(std::string_view candidate, std::string_view reference)>;

struct ScoringOptions {
  ThresholdMode mode = ThresholdMode::kError;
  std::array<double, 2> thresholds = {10.0, 20.0};
  double gate_m = kMatchGate;
  TextSimilarity similarity;
};

/// Sufficient statistics of every metric. merge() is associative, so pooled
/// scores equal the score of the concatenated records.
struct MetricAccumulator {
  std::array<std::size_t, 4> tp{};
  std::array<std::size_t, 4> fp{};
  std::array<std::size_t, 4> fn{};
  std::size_t occ_total = 0;
  std::size_t occ_matched = 0;
  std::array<std::size_t, 2> occ_at_hits{};
  std::array<std::size_t, 2> occ_at_total{};
  double vis_abs_error = 0.0;
  std::size_t vis_pairs = 0;
  double iou_sum = 0.0;
  std::size_t iou_terms = 0;
  double similarity_sum = 0.0;
  std::size_t similarity_terms = 0;
  std::size_t records = 0;
  std::size_t parse_failures = 0;
  std::size_t missing_predictions = 0;

  void merge(const MetricAccumulator& other);
};

struct MetricValues {
  std::optional<double> decision_f1;
  std::optional<double> occ_recall;
  std::optional<double> occ_at_10m;
  std::optional<double> occ_at_20m;
  std::optional<double> vis_mae;
  std::optional<double> miou;
  std::optional<double> text_similarity;
  double parse_failure_rate = 0.0;
  std::size_t records = 0;
  std::size_t parse_failures = 0;
  std::size_t missing_predictions = 0;
};

MetricValues finalize(const MetricAccumulator& acc);

/// Macro F1 over the decision classes present in ground truth or predictions.
std::optional<double> macro_f1(const MetricAccumulator& acc);

/// Statistics of one record. `pred` may be null (missing) or unparsed.
MetricAccumulator score_record(const QraRecord& record, const Prediction* pred, const Scene& scene,
                               std::span<const OcclusionLabel> labels,
                               const ScoringOptions& opts = {},
                               std::vector<std::string>* warnings = nullptr);

struct ScoreReport {
  ThresholdMode mode = ThresholdMode::kError;
  /// Threshold of the aggregate table and of the per-task table.
  double aggregate_threshold_m = 10.0;
  double task_threshold_m = 20.0;
  MetricValues aggregate;
  std::map<TaskType, MetricValues> per_task;
  std::vector<std::string> warnings;

  Json to_json() const;
  static ScoreReport from_json(const Json& j);
};

/// Scores every dataset record; records without a prediction count as parse
/// failures. Independent of prediction order and of `threads`.
ScoreReport score(std::span<const Prediction> predictions, std::span<const QraRecord> dataset,
                  const SceneIndex& scenes, const LabelMap& labels, const ScoringOptions& opts = {},
                  int threads = 1);

/// Aggregate table, per-task table, then every remaining metric.
std::string render_markdown(const ScoreReport& report, std::string_view method = "model");
std::string render_csv(const ScoreReport& report);

}  // namespace coopsight
