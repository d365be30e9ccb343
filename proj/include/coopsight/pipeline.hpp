// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "coopsight/adapter.hpp"
#include "coopsight/metrics.hpp"
#include "coopsight/qra.hpp"
#include "coopsight/scenegen.hpp"

namespace coopsight {

struct PipelinePaths {
  std::string scenes = "scenes.jsonl";
  std::string labels = "labels.jsonl";
  std::string projections = "projections.jsonl";
  std::string dataset = "dataset.jsonl";
  std::string predictions = "predictions.jsonl";
  std::string report = "report.json";

  bool operator==(const PipelinePaths&) const = default;
};

/// Every setting of a pipeline run. Stored as one JSON document; command-line
/// flags override loaded values.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  PipelinePaths paths;
  GenConfig gen;
  std::array<double, 3> split = {0.76, 0.13, 0.11};
  double tau = kDefaultTau;
  std::size_t n_records = 1000;
  TaskMix task_mix;
  QraConfig qra;
  TolerancePolicy tolerance;
  ThresholdMode threshold_mode = ThresholdMode::kError;
  std::array<double, 2> thresholds = {10.0, 20.0};
  double gate_m = kMatchGate;
  /// Negative means unlimited.
  long long max_reject = -1;
  AdapterConfig adapter;

  void validate() const;
  ScoringOptions scoring() const;
};

Json to_json(const PipelineConfig& cfg);
/// Missing keys keep the values of `base`; unknown keys are an error.
PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace coopsight
