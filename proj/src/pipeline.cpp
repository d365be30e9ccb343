// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/pipeline.hpp"

#include <initializer_list>
#include <string_view>

namespace coopsight {

namespace {

void require_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const auto k : keys) known = known || k == key;
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
  gen.validate();
  task_mix.validate();
  if (!(tolerance.abs_floor >= 0.0) || !(tolerance.rel_frac >= 0.0) || !(tolerance.text_gap_m >= 0.0)) {
    throw ConfigError("tolerances must be non-negative");
  }
  if (!(thresholds[0] > 0.0 && thresholds[1] > 0.0)) throw ConfigError("thresholds must be positive");
  if (!(gate_m > 0.0)) throw ConfigError("match gate must be positive");
  if (qra.max_grounded == 0) throw ConfigError("max_grounded must be positive");
  adapter.validate();
}

ScoringOptions PipelineConfig::scoring() const {
  ScoringOptions o;
  o.mode = threshold_mode;
  o.thresholds = thresholds;
  o.gate_m = gate_m;
  return o;
}

Json to_json(const PipelineConfig& cfg) {
  Json gen = to_json(cfg.gen);
  gen.erase("seed");
  Json j;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["paths"] = {{"scenes", cfg.paths.scenes},       {"labels", cfg.paths.labels},
                {"projections", cfg.paths.projections}, {"dataset", cfg.paths.dataset},
                {"predictions", cfg.paths.predictions}, {"report", cfg.paths.report}};
  j["gen"] = std::move(gen);
  j["split"] = cfg.split;
  j["tau"] = cfg.tau;
  j["qra"] = {{"n_records", cfg.n_records},
              {"task_mix",
               {{"spatial", cfg.task_mix.spatial},
                {"counting", cfg.task_mix.counting},
                {"maneuver", cfg.task_mix.maneuver}}},
              {"hazard",
               {{"stop_within_m", cfg.qra.hazard.stop_within_m},
                {"yield_within_m", cfg.qra.hazard.yield_within_m},
                {"high_within_m", cfg.qra.hazard.high_within_m},
                {"medium_within_m", cfg.qra.hazard.medium_within_m}}},
              {"with_rationale", cfg.qra.with_rationale},
              {"max_grounded", cfg.qra.max_grounded},
              {"heading_offset", cfg.qra.heading_offset}};
  j["tolerance"] = {{"abs", cfg.tolerance.abs_floor},
                    {"rel", cfg.tolerance.rel_frac},
                    {"text_gap", cfg.tolerance.text_gap_m}};
  j["metrics"] = {{"threshold_mode", to_string(cfg.threshold_mode)},
                  {"thresholds", cfg.thresholds},
                  {"gate_m", cfg.gate_m}};
  j["max_reject"] = cfg.max_reject;
  j["adapter"] = {{"in_channels", cfg.adapter.in_channels},
                  {"stem_channels", cfg.adapter.stem_channels},
                  {"mlp_hidden", cfg.adapter.mlp_hidden},
                  {"d_model", cfg.adapter.d_model}};
  return j;
}

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig c) {
  try {
    require_keys(j, "config", {"seed", "threads", "paths", "gen", "split", "tau", "qra", "tolerance",
                               "metrics", "max_reject", "adapter"});
    read_if(j, "seed", c.seed);
    read_if(j, "threads", c.threads);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      require_keys(p, "paths", {"scenes", "labels", "projections", "dataset", "predictions", "report"});
      read_if(p, "scenes", c.paths.scenes);
      read_if(p, "labels", c.paths.labels);
      read_if(p, "projections", c.paths.projections);
      read_if(p, "dataset", c.paths.dataset);
      read_if(p, "predictions", c.paths.predictions);
      read_if(p, "report", c.paths.report);
    }
    if (j.contains("gen")) {
      require_keys(j.at("gen"), "gen",
                   {"n_scenes", "objects_per_scene", "occluder_bias", "class_mix", "camera_count"});
      c.gen = gen_config_from_json(j.at("gen"), c.gen);
    }
    c.gen.seed = c.seed;
    read_if(j, "split", c.split);
    read_if(j, "tau", c.tau);
    if (j.contains("qra")) {
      const auto& q = j.at("qra");
      require_keys(q, "qra",
                   {"n_records", "task_mix", "hazard", "with_rationale", "max_grounded", "heading_offset"});
      read_if(q, "n_records", c.n_records);
      if (q.contains("task_mix")) {
        const auto& m = q.at("task_mix");
        require_keys(m, "qra.task_mix", {"spatial", "counting", "maneuver"});
        read_if(m, "spatial", c.task_mix.spatial);
        read_if(m, "counting", c.task_mix.counting);
        read_if(m, "maneuver", c.task_mix.maneuver);
      }
      if (q.contains("hazard")) {
        const auto& h = q.at("hazard");
        require_keys(h, "qra.hazard", {"stop_within_m", "yield_within_m", "high_within_m", "medium_within_m"});
        read_if(h, "stop_within_m", c.qra.hazard.stop_within_m);
        read_if(h, "yield_within_m", c.qra.hazard.yield_within_m);
        read_if(h, "high_within_m", c.qra.hazard.high_within_m);
        read_if(h, "medium_within_m", c.qra.hazard.medium_within_m);
      }
      read_if(q, "with_rationale", c.qra.with_rationale);
      read_if(q, "max_grounded", c.qra.max_grounded);
      read_if(q, "heading_offset", c.qra.heading_offset);
    }
    if (j.contains("tolerance")) {
      const auto& t = j.at("tolerance");
      require_keys(t, "tolerance", {"abs", "rel", "text_gap"});
      read_if(t, "abs", c.tolerance.abs_floor);
      read_if(t, "rel", c.tolerance.rel_frac);
      read_if(t, "text_gap", c.tolerance.text_gap_m);
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      require_keys(m, "metrics", {"threshold_mode", "thresholds", "gate_m"});
      if (m.contains("threshold_mode")) {
        const auto mode = threshold_mode_from_string(m.at("threshold_mode").get<std::string>());
        if (!mode) throw ConfigError("metrics.threshold_mode must be error or range");
        c.threshold_mode = *mode;
      }
      read_if(m, "thresholds", c.thresholds);
      read_if(m, "gate_m", c.gate_m);
    }
    read_if(j, "max_reject", c.max_reject);
    if (j.contains("adapter")) {
      const auto& a = j.at("adapter");
      require_keys(a, "adapter", {"in_channels", "stem_channels", "mlp_hidden", "d_model"});
      read_if(a, "in_channels", c.adapter.in_channels);
      read_if(a, "stem_channels", c.adapter.stem_channels);
      read_if(a, "mlp_hidden", c.adapter.mlp_hidden);
      read_if(a, "d_model", c.adapter.d_model);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    return pipeline_config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace coopsight
