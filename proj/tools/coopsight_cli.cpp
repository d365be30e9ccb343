// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "coopsight/adapter.hpp"
#include "coopsight/metrics.hpp"
#include "coopsight/occlusion.hpp"
#include "coopsight/parallel.hpp"
#include "coopsight/pipeline.hpp"
#include "coopsight/projection.hpp"
#include "coopsight/qra.hpp"
#include "coopsight/scenegen.hpp"

namespace cs = coopsight;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_st("coopsight");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("COOPSIGHT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

/// "-" means stdout.
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    cs::write_text(path, text);
  }
}

std::string jsonl(const std::vector<cs::Json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + '\n';
  return out;
}

cs::LabelMap label_all(const std::vector<cs::Scene>& scenes, double tau, int threads) {
  std::vector<std::vector<cs::OcclusionLabel>> labels(scenes.size());
  cs::parallel_for(scenes.size(), threads, [&](std::size_t i) { labels[i] = cs::label_scene(scenes[i], tau); });
  cs::LabelMap map;
  for (std::size_t i = 0; i < scenes.size(); ++i) map[scenes[i].scene_id] = std::move(labels[i]);
  return map;
}

std::string oracle_predictions(const std::vector<cs::QraRecord>& records) {
  std::vector<cs::Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    const std::string text = (r.rationale.empty() ? "" : r.rationale + "\n") + r.answer_text + "\n" +
                             cs::canonical_json(r.grounded);
    rows.push_back({{"record_id", r.record_id}, {"raw_text", text}});
  }
  return jsonl(rows);
}

struct Flags {
  std::string config;
  std::string format;
  std::uint64_t seed = 0;
  double tau = cs::kDefaultTau;
  double tol_abs = 2.0;
  double tol_rel = 0.05;
  std::string threshold_mode = "error";
  int threads = 1;
  long long max_reject = -1;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
  CLI::Option* tol_abs_opt = nullptr;
  CLI::Option* tol_rel_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* max_reject_opt = nullptr;

  /// Config file first, then any flag given on the command line.
  cs::PipelineConfig resolve() const {
    cs::PipelineConfig cfg = config.empty() ? cs::PipelineConfig{} : cs::load_pipeline_config(config);
    if (seed_opt->count()) cfg.seed = seed;
    cfg.gen.seed = cfg.seed;
    if (tau_opt->count()) cfg.tau = tau;
    if (tol_abs_opt->count()) cfg.tolerance.abs_floor = tol_abs;
    if (tol_rel_opt->count()) cfg.tolerance.rel_frac = tol_rel;
    if (mode_opt->count()) cfg.threshold_mode = *cs::threshold_mode_from_string(threshold_mode);
    if (threads_opt->count()) cfg.threads = threads;
    if (max_reject_opt->count()) cfg.max_reject = max_reject;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Occlusion-aware cooperative perception QA toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "Pipeline config JSON; flags override its values")
      ->check(CLI::ExistingFile);
  app.add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "md", "csv"}));
  f.seed_opt = app.add_option("--seed", f.seed, "Seed for all randomness");
  f.tau_opt = app.add_option("--tau", f.tau, "Occlusion coverage threshold in (0, 1]");
  f.tol_abs_opt = app.add_option("--tolerance-abs", f.tol_abs, "Absolute distance tolerance floor (m)");
  f.tol_rel_opt = app.add_option("--tolerance-rel", f.tol_rel, "Relative distance tolerance");
  f.mode_opt = app.add_option("--threshold-mode", f.threshold_mode, "Occ.@ threshold semantics")
                   ->check(CLI::IsMember({"error", "range"}));
  f.threads_opt = app.add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
  f.max_reject_opt = app.add_option("--max-reject", f.max_reject, "Exit 1 when more records are rejected");

  std::string scenes_path, labels_path, dataset_path, predictions_path, report_path, out_path;
  std::size_t count = 0;

  auto* gen_scenes = app.add_subcommand("gen-scenes", "Generate synthetic intersection scenes");
  auto* gs_n = gen_scenes->add_option("--n", count, "Number of scenes");
  gen_scenes->add_option("--out", out_path, "Scenes JSONL (- for stdout)");
  std::string manifest_path;
  gen_scenes->add_option("--manifest", manifest_path, "Write the split manifest JSON");

  auto* label = app.add_subcommand("label-occlusion", "Label every object as visible or occluded");
  label->add_option("--scenes", scenes_path, "Scenes JSONL");
  label->add_option("--out", out_path, "Labels JSONL (- for stdout)");

  auto* project = app.add_subcommand("project", "Project every object into every camera");
  project->add_option("--scenes", scenes_path, "Scenes JSONL");
  project->add_option("--out", out_path, "Projections JSONL (- for stdout)");

  auto* gen_qra = app.add_subcommand("gen-qra", "Generate question-rationale-answer records");
  gen_qra->add_option("--scenes", scenes_path, "Scenes JSONL");
  gen_qra->add_option("--labels", labels_path, "Labels JSONL");
  auto* gq_n = gen_qra->add_option("--n", count, "Number of records");
  gen_qra->add_option("--out", out_path, "Dataset JSONL (- for stdout)");
  std::size_t n_faults = 0;
  std::string faults_path, oracle_path;
  gen_qra->add_option("--inject-faults", n_faults, "Corrupt this many records, evenly over fault kinds");
  gen_qra->add_option("--faults-out", faults_path, "Write injected faults as JSONL");
  gen_qra->add_option("--oracle-out", oracle_path, "Write answer-echoing predictions as JSONL");

  auto* validate = app.add_subcommand("validate-qra", "Filter records against ground truth");
  validate->add_option("--scenes", scenes_path, "Scenes JSONL");
  validate->add_option("--labels", labels_path, "Labels JSONL");
  validate->add_option("--dataset", dataset_path, "Dataset JSONL");
  validate->add_option("--out", out_path, "Validation report (- for stdout)");
  std::string accepted_path;
  validate->add_option("--accepted-out", accepted_path, "Write accepted records as JSONL");

  auto* score_cmd = app.add_subcommand("score", "Score model predictions");
  score_cmd->add_option("--scenes", scenes_path, "Scenes JSONL");
  score_cmd->add_option("--labels", labels_path, "Labels JSONL");
  score_cmd->add_option("--dataset", dataset_path, "Dataset JSONL");
  score_cmd->add_option("--predictions", predictions_path, "Predictions JSONL {record_id, raw_text}");
  score_cmd->add_option("--out", out_path, "Report file (- for stdout)");

  auto* report = app.add_subcommand("report", "Render a score report as tables");
  report->add_option("--report", report_path, "Score report JSON");
  std::string method = "model";
  report->add_option("--method", method, "Row label");
  report->add_option("--out", out_path, "Output file (- for stdout)");

  auto* adapter = app.add_subcommand("adapter-check", "Check the lidar token adapter on a voxel map");
  std::string tensor_path, sample_path;
  int channels = 0, height = 128, width = 128, d_model = 0;
  adapter->add_option("--tensor", tensor_path, "Voxel map tensor file");
  adapter->add_option("--write-sample", sample_path, "Write a seeded random voxel map and exit");
  adapter->add_option("--channels", channels, "Sample channels (default: adapter in_channels)");
  adapter->add_option("--height", height, "Sample height");
  adapter->add_option("--width", width, "Sample width");
  adapter->add_option("--d-model", d_model, "Token width (default: config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const auto pick = [](const std::string& flag, const std::string& fallback) {
    return flag.empty() ? fallback : flag;
  };

  try {
    const cs::PipelineConfig cfg = f.resolve();
    const auto& paths = cfg.paths;
    spdlog::debug("config: {}", cs::to_json(cfg).dump());

    if (gen_scenes->parsed()) {
      auto gen = cfg.gen;
      if (gs_n->count()) gen.n_scenes = count;
      auto scenes = cs::generate(gen, cfg.threads);
      if (scenes.size() >= 3) {
        scenes = cs::stratified_split(std::move(scenes), cfg.split);
      } else {
        spdlog::warn("fewer than 3 scenes; every scene stays in the train split");
      }
      emit(pick(out_path, paths.scenes), cs::scenes_to_jsonl(scenes));
      if (!manifest_path.empty()) emit(manifest_path, cs::split_manifest(scenes).dump(2) + '\n');
      spdlog::info("generated {} scenes", scenes.size());
      return kExitOk;
    }

    if (label->parsed()) {
      const auto scenes = cs::read_scenes(pick(scenes_path, paths.scenes));
      const auto labels = label_all(scenes, cfg.tau, cfg.threads);
      std::vector<cs::Json> rows;
      for (const auto& s : scenes) {
        for (auto& r : cs::label_rows(s.scene_id, labels.at(s.scene_id))) rows.push_back(std::move(r));
      }
      emit(pick(out_path, paths.labels), jsonl(rows));
      return kExitOk;
    }

    if (project->parsed()) {
      const auto scenes = cs::read_scenes(pick(scenes_path, paths.scenes));
      std::vector<cs::Json> rows;
      for (const auto& s : scenes) {
        for (const auto& obj : s.objects) {
          for (const auto& cam : s.cameras) {
            const auto box = cs::project_box(obj, cam);
            if (!box) continue;
            rows.push_back({{"scene_id", s.scene_id},
                            {"object_id", obj.id},
                            {"sensor_id", cam.sensor_id},
                            {"bbox", cs::to_pixel_box(*box)}});
          }
        }
      }
      emit(pick(out_path, paths.projections), jsonl(rows));
      return kExitOk;
    }

    if (gen_qra->parsed()) {
      const auto scenes = cs::read_scenes(pick(scenes_path, paths.scenes));
      const auto labels = cs::read_labels(pick(labels_path, paths.labels));
      const std::size_t n = gq_n->count() ? count : cfg.n_records;
      auto records = cs::generate_dataset(scenes, labels, cfg.task_mix, n, cfg.seed, cfg.qra, cfg.threads);
      if (!oracle_path.empty()) emit(oracle_path, oracle_predictions(records));
      if (n_faults > 0) {
        const auto index = cs::index_scenes(scenes);
        const auto faults = cs::inject_faults(records, index, n_faults, cfg.seed, cfg.tolerance);
        if (!faults_path.empty()) {
          std::vector<cs::Json> rows;
          for (const auto& fault : faults) {
            rows.push_back({{"index", fault.index},
                            {"record_id", records[fault.index].record_id},
                            {"reason", cs::to_string(fault.expected)}});
          }
          emit(faults_path, jsonl(rows));
        }
      }
      std::vector<cs::Json> rows;
      for (const auto& r : records) rows.push_back(cs::to_json(r));
      emit(pick(out_path, paths.dataset), jsonl(rows));
      return kExitOk;
    }

    if (validate->parsed()) {
      const auto scenes = cs::read_scenes(pick(scenes_path, paths.scenes));
      const auto labels = cs::read_labels(pick(labels_path, paths.labels));
      const auto records = cs::read_records(pick(dataset_path, paths.dataset));
      const auto result = cs::validate_dataset(records, cs::index_scenes(scenes), labels, cfg.tolerance);
      const std::string fmt_name = pick(f.format, "json");
      emit(pick(out_path, "-"), fmt_name == "json" ? result.to_json().dump(2) + '\n' : result.to_text());
      if (!accepted_path.empty()) {
        std::vector<cs::Json> rows;
        for (const auto i : result.accepted) rows.push_back(cs::to_json(records[i]));
        emit(accepted_path, jsonl(rows));
      }
      if (cfg.max_reject >= 0 && result.rejected.size() > static_cast<std::size_t>(cfg.max_reject)) {
        spdlog::error("{} records rejected, limit {}", result.rejected.size(), cfg.max_reject);
        return kExitRejected;
      }
      return kExitOk;
    }

    if (score_cmd->parsed()) {
      const auto scenes = cs::read_scenes(pick(scenes_path, paths.scenes));
      const auto labels = cs::read_labels(pick(labels_path, paths.labels));
      const auto records = cs::read_records(pick(dataset_path, paths.dataset));
      const auto preds = cs::read_predictions(pick(predictions_path, paths.predictions));
      const auto result =
          cs::score(preds, records, cs::index_scenes(scenes), labels, cfg.scoring(), cfg.threads);
      for (const auto& w : result.warnings) spdlog::warn("{}", w);
      const std::string fmt_name = pick(f.format, "json");
      std::string text;
      if (fmt_name == "json") {
        text = result.to_json().dump(2) + '\n';
      } else if (fmt_name == "md") {
        text = cs::render_markdown(result);
      } else {
        text = cs::render_csv(result);
      }
      emit(pick(out_path, paths.report), text);
      return kExitOk;
    }

    if (report->parsed()) {
      const std::string in = pick(report_path, paths.report);
      cs::Json j;
      try {
        j = cs::Json::parse(cs::read_text(in));
      } catch (const nlohmann::json::parse_error& e) {
        throw cs::InputError(in + ": " + e.what());
      }
      const auto result = cs::ScoreReport::from_json(j);
      const std::string fmt_name = pick(f.format, "md");
      std::string text;
      if (fmt_name == "md") {
        text = cs::render_markdown(result, method);
      } else if (fmt_name == "csv") {
        text = cs::render_csv(result);
      } else {
        text = result.to_json().dump(2) + '\n';
      }
      emit(pick(out_path, "-"), text);
      return kExitOk;
    }

    if (adapter->parsed()) {
      auto acfg = cfg.adapter;
      if (d_model > 0) acfg.d_model = d_model;
      if (!sample_path.empty()) {
        const int c = channels > 0 ? channels : acfg.in_channels;
        cs::write_tensor(sample_path, cs::random_voxel_map(c, height, width, cfg.seed));
        return kExitOk;
      }
      if (tensor_path.empty()) throw cs::ConfigError("adapter-check needs --tensor or --write-sample");
      const auto v = cs::read_tensor(tensor_path);
      acfg.in_channels = v.channels;
      const auto checks = cs::run_adapter_checks(v, acfg, cfg.seed);
      bool ok = true;
      cs::Json j;
      j["input"] = {{"channels", v.channels}, {"height", v.height}, {"width", v.width}};
      j["tokens"] = cs::kLidarTokens;
      j["d_model"] = acfg.d_model;
      cs::Json list = cs::Json::array();
      for (const auto& c : checks) {
        ok = ok && c.passed;
        list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      }
      j["checks"] = std::move(list);
      if (pick(f.format, "json") == "json") {
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << fmt::format("voxel map {}x{}x{} -> {} tokens x {}\n", v.channels, v.height, v.width,
                                 cs::kLidarTokens, acfg.d_model);
        for (const auto& c : checks) {
          std::cout << fmt::format("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
        }
      }
      return ok ? kExitOk : kExitRejected;
    }
  } catch (const cs::Error& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
