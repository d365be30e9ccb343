// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "coopsight/assignment.hpp"
#include "coopsight/parallel.hpp"

namespace coopsight {

namespace {

constexpr std::array<std::string_view, 2> kModeNames = {"error", "range"};

std::optional<double> ratio(double num, std::size_t den) {
  return den == 0 ? std::nullopt : std::optional<double>(num / static_cast<double>(den));
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Json values_json(const MetricValues& v) {
  Json j;
  j["records"] = v.records;
  j["decision_f1"] = opt_json(v.decision_f1);
  j["occ_recall"] = opt_json(v.occ_recall);
  j["occ_at_10m"] = opt_json(v.occ_at_10m);
  j["occ_at_20m"] = opt_json(v.occ_at_20m);
  j["vis_mae"] = opt_json(v.vis_mae);
  j["miou"] = opt_json(v.miou);
  j["text_similarity"] = opt_json(v.text_similarity);
  j["parse_failure_rate"] = v.parse_failure_rate;
  j["parse_failures"] = v.parse_failures;
  j["missing_predictions"] = v.missing_predictions;
  return j;
}

MetricValues values_from(const Json& j) {
  MetricValues v;
  v.records = j.at("records").get<std::size_t>();
  v.decision_f1 = opt_from(j, "decision_f1");
  v.occ_recall = opt_from(j, "occ_recall");
  v.occ_at_10m = opt_from(j, "occ_at_10m");
  v.occ_at_20m = opt_from(j, "occ_at_20m");
  v.vis_mae = opt_from(j, "vis_mae");
  v.miou = opt_from(j, "miou");
  v.text_similarity = opt_from(j, "text_similarity");
  v.parse_failure_rate = j.at("parse_failure_rate").get<double>();
  v.parse_failures = j.at("parse_failures").get<std::size_t>();
  v.missing_predictions = j.at("missing_predictions").get<std::size_t>();
  return v;
}

std::string cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("n/a");
}

}  // namespace

Prediction make_prediction(std::string record_id, std::string raw_text) {
  Prediction p{std::move(record_id), std::move(raw_text), std::nullopt, {}};
  try {
    p.parsed = parse_answer(p.raw_text, ParseMode::kLenient).answer;
  } catch (const ParseError& e) {
    p.parse_error = e.what();
  }
  return p;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    out.push_back(make_prediction(j.at("record_id").get<std::string>(),
                                  j.at("raw_text").get<std::string>()));
  });
  return out;
}

double gt_distance(const ObjectBox3D& obj) { return std::round(range_to(obj) * 100.0) / 100.0; }

double MatchResult::total_cost() const {
  auto sorted = pairs;
  std::sort(sorted.begin(), sorted.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.pred < b.pred; });
  double c = 0.0;
  for (const auto& p : sorted) c += p.error;
  return c;
}

std::optional<std::size_t> MatchResult::pred_for_gt(std::size_t gt) const {
  for (const auto& p : pairs) {
    if (p.gt == gt) return p.pred;
  }
  return std::nullopt;
}

namespace {

struct Solved {
  std::vector<int> pred_to_gt;  // -1 when unmatched
  std::size_t pairs = 0;
  double error = 0.0;
};

using Allowed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

Solved solve_padded(const Eigen::MatrixXd& error, const Allowed& allowed) {
  const auto np = error.rows();
  const auto ng = error.cols();
  const auto n = std::max(np, ng);
  // Forbidden and padding cells cost more than any feasible set of pairs, so
  // the optimum first maximizes the pair count and then minimizes the error.
  double allowed_sum = 0.0;
  for (Eigen::Index i = 0; i < np; ++i) {
    for (Eigen::Index k = 0; k < ng; ++k) {
      if (allowed(i, k)) allowed_sum += error(i, k);
    }
  }
  const double big = 1.0 + allowed_sum;
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, big);
  for (Eigen::Index i = 0; i < np; ++i) {
    for (Eigen::Index k = 0; k < ng; ++k) {
      if (allowed(i, k)) cost(i, k) = error(i, k);
    }
  }
  const auto assign = solve_assignment(cost);
  Solved out;
  out.pred_to_gt.assign(static_cast<std::size_t>(np), -1);
  for (Eigen::Index i = 0; i < np; ++i) {
    const int k = assign[static_cast<std::size_t>(i)];
    if (k >= 0 && k < ng && allowed(i, k)) {
      out.pred_to_gt[static_cast<std::size_t>(i)] = k;
      ++out.pairs;
      out.error += error(i, k);
    }
  }
  return out;
}

constexpr double kTieTolerance = 1e-9;

}  // namespace

MatchResult match_objects(std::span<const GroundedObject> preds, std::span<const GtObject> gt,
                          double gate_m) {
  const auto np = static_cast<Eigen::Index>(preds.size());
  const auto ng = static_cast<Eigen::Index>(gt.size());
  MatchResult result;

  Eigen::MatrixXd error = Eigen::MatrixXd::Zero(np, ng);
  Allowed allowed(np, ng);
  for (Eigen::Index i = 0; i < np; ++i) {
    for (Eigen::Index k = 0; k < ng; ++k) {
      const double e = std::abs(preds[i].distance_m - gt[k].distance);
      error(i, k) = e;
      allowed(i, k) = preds[i].type == gt[k].cls && e <= gate_m;
    }
  }
  Solved best = solve_padded(error, allowed);

  // Optimal assignments can tie. Fix ground-truth objects in order to the
  // lowest prediction index (unmatched last) that keeps the optimum.
  if (best.pairs > 0) {
    const Solved optimum = best;
    const auto keeps_optimum = [&](const Solved& s) {
      return s.pairs == optimum.pairs && s.error <= optimum.error + kTieTolerance;
    };
    for (Eigen::Index k = 0; k < ng; ++k) {
      bool fixed = false;
      for (Eigen::Index i = 0; i < np && !fixed; ++i) {
        if (!allowed(i, k)) continue;
        Allowed trial = allowed;
        trial.col(k).setConstant(false);
        trial.row(i).setConstant(false);
        trial(i, k) = true;
        Solved s = solve_padded(error, trial);
        if (keeps_optimum(s) && s.pred_to_gt[static_cast<std::size_t>(i)] == k) {
          allowed = std::move(trial);
          best = std::move(s);
          fixed = true;
        }
      }
      if (!fixed) allowed.col(k).setConstant(false);
    }
    best = solve_padded(error, allowed);
  }

  std::vector<bool> gt_used(static_cast<std::size_t>(ng), false);
  for (Eigen::Index i = 0; i < np; ++i) {
    const int k = best.pred_to_gt[static_cast<std::size_t>(i)];
    if (k >= 0) {
      result.pairs.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(k), error(i, k)});
      gt_used[static_cast<std::size_t>(k)] = true;
    } else {
      result.unmatched_pred.push_back(static_cast<std::size_t>(i));
    }
  }
  for (std::size_t k = 0; k < gt_used.size(); ++k) {
    if (!gt_used[k]) result.unmatched_gt.push_back(k);
  }
  return result;
}

std::vector<GtObject> record_gt(const QraRecord& record, const Scene& scene,
                                std::span<const OcclusionLabel> labels) {
  std::vector<GtObject> out;
  for (const auto& id : record.gt_object_ids) {
    const auto* obj = scene.find_object(id);
    if (!obj) throw Error("record '" + record.record_id + "' references unknown object '" + id + "'");
    const auto* label = find_label(labels, id);
    if (!label) throw Error("no occlusion label for object '" + id + "'");
    out.push_back({id, obj->class_label, gt_distance(*obj), label->occluded});
  }
  return out;
}

std::string_view to_string(ThresholdMode m) { return kModeNames[static_cast<std::size_t>(m)]; }

std::optional<ThresholdMode> threshold_mode_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == s) return static_cast<ThresholdMode>(i);
  }
  return std::nullopt;
}

void MetricAccumulator::merge(const MetricAccumulator& o) {
  for (std::size_t c = 0; c < 4; ++c) {
    tp[c] += o.tp[c];
    fp[c] += o.fp[c];
    fn[c] += o.fn[c];
  }
  occ_total += o.occ_total;
  occ_matched += o.occ_matched;
  for (std::size_t t = 0; t < 2; ++t) {
    occ_at_hits[t] += o.occ_at_hits[t];
    occ_at_total[t] += o.occ_at_total[t];
  }
  vis_abs_error += o.vis_abs_error;
  vis_pairs += o.vis_pairs;
  iou_sum += o.iou_sum;
  iou_terms += o.iou_terms;
  similarity_sum += o.similarity_sum;
  similarity_terms += o.similarity_terms;
  records += o.records;
  parse_failures += o.parse_failures;
  missing_predictions += o.missing_predictions;
}

std::optional<double> macro_f1(const MetricAccumulator& acc) {
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    const auto denom = 2 * acc.tp[c] + acc.fp[c] + acc.fn[c];
    if (denom == 0) continue;
    sum += 2.0 * static_cast<double>(acc.tp[c]) / static_cast<double>(denom);
    ++classes;
  }
  return ratio(sum, classes);
}

MetricValues finalize(const MetricAccumulator& acc) {
  MetricValues v;
  v.decision_f1 = macro_f1(acc);
  v.occ_recall = ratio(static_cast<double>(acc.occ_matched), acc.occ_total);
  v.occ_at_10m = ratio(static_cast<double>(acc.occ_at_hits[0]), acc.occ_at_total[0]);
  v.occ_at_20m = ratio(static_cast<double>(acc.occ_at_hits[1]), acc.occ_at_total[1]);
  v.vis_mae = ratio(acc.vis_abs_error, acc.vis_pairs);
  v.miou = ratio(acc.iou_sum, acc.iou_terms);
  v.text_similarity = ratio(acc.similarity_sum, acc.similarity_terms);
  v.records = acc.records;
  v.parse_failures = acc.parse_failures;
  v.missing_predictions = acc.missing_predictions;
  v.parse_failure_rate = acc.records ? static_cast<double>(acc.parse_failures) / acc.records : 0.0;
  return v;
}

MetricAccumulator score_record(const QraRecord& record, const Prediction* pred, const Scene& scene,
                               std::span<const OcclusionLabel> labels, const ScoringOptions& opts,
                               std::vector<std::string>* warnings) {
  MetricAccumulator acc;
  acc.records = 1;
  const bool parsed = pred && pred->parsed;
  if (!pred) acc.missing_predictions = 1;
  if (!parsed) acc.parse_failures = 1;

  const auto truth = static_cast<std::size_t>(record.grounded.decision);
  if (parsed) {
    const auto guess = static_cast<std::size_t>(pred->parsed->decision);
    if (guess == truth) {
      ++acc.tp[truth];
    } else {
      ++acc.fp[guess];
      ++acc.fn[truth];
    }
  } else {
    // Reserved "invalid" label: a miss for the true class, no false positive.
    ++acc.fn[truth];
  }

  const auto gt = record_gt(record, scene, labels);
  static const std::vector<GroundedObject> kEmpty;
  const auto& pred_objs = parsed ? pred->parsed->grounded_objects : kEmpty;
  const MatchResult match = match_objects(pred_objs, gt, opts.gate_m);

  for (std::size_t k = 0; k < gt.size(); ++k) {
    const auto pi = match.pred_for_gt(k);
    const double err = pi ? std::abs(pred_objs[*pi].distance_m - gt[k].distance) : 0.0;
    if (gt[k].occluded) {
      ++acc.occ_total;
      if (pi) ++acc.occ_matched;
      for (std::size_t t = 0; t < 2; ++t) {
        const double thr = opts.thresholds[t];
        if (opts.mode == ThresholdMode::kError) {
          ++acc.occ_at_total[t];
          if (pi && err <= thr) ++acc.occ_at_hits[t];
        } else if (gt[k].distance <= thr) {
          ++acc.occ_at_total[t];
          if (pi) ++acc.occ_at_hits[t];
        }
      }
    } else if (pi) {
      acc.vis_abs_error += err;
      ++acc.vis_pairs;
    }

    // Box overlap in the camera the prediction names, or the gold camera when unmatched.
    const ObjectBox3D& obj = *scene.find_object(gt[k].id);
    const std::string& sensor =
        pi ? pred_objs[*pi].sensor_id : record.grounded.grounded_objects[k].sensor_id;
    const CameraModel* cam = scene.find_camera(sensor);
    if (!cam) {
      ++acc.iou_terms;
      if (warnings) {
        warnings->push_back("record " + record.record_id + ": sensor '" + sensor +
                            "' not in scene, scored as 0 IoU");
      }
      continue;
    }
    const auto gt_box = project_box(obj, *cam);
    if (!gt_box) continue;
    ++acc.iou_terms;
    if (pi && pred_objs[*pi].bbox) {
      acc.iou_sum += iou(from_pixel_box(*pred_objs[*pi].bbox), from_pixel_box(to_pixel_box(*gt_box)));
    }
  }

  if (opts.similarity && parsed) {
    acc.similarity_sum += opts.similarity(pred->raw_text, record.rationale + " " + record.answer_text);
    ++acc.similarity_terms;
  }
  return acc;
}

Json ScoreReport::to_json() const {
  Json j;
  j["threshold_mode"] = to_string(mode);
  j["aggregate_threshold_m"] = aggregate_threshold_m;
  j["task_threshold_m"] = task_threshold_m;
  j["aggregate"] = values_json(aggregate);
  Json tasks = Json::object();
  for (const auto& [task, v] : per_task) tasks[std::string(to_string(task))] = values_json(v);
  j["per_task"] = std::move(tasks);
  j["warnings"] = warnings;
  return j;
}

ScoreReport ScoreReport::from_json(const Json& j) {
  ScoreReport r;
  const auto mode = threshold_mode_from_string(j.at("threshold_mode").get<std::string>());
  if (!mode) throw Error("unknown threshold_mode");
  r.mode = *mode;
  r.aggregate_threshold_m = j.at("aggregate_threshold_m").get<double>();
  r.task_threshold_m = j.at("task_threshold_m").get<double>();
  r.aggregate = values_from(j.at("aggregate"));
  for (const auto& [name, v] : j.at("per_task").items()) {
    const auto task = task_from_string(name);
    if (!task) throw Error("unknown task '" + name + "'");
    r.per_task[*task] = values_from(v);
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

ScoreReport score(std::span<const Prediction> predictions, std::span<const QraRecord> dataset,
                  const SceneIndex& scenes, const LabelMap& labels, const ScoringOptions& opts,
                  int threads) {
  ScoreReport report;
  report.mode = opts.mode;
  report.aggregate_threshold_m = opts.thresholds[0];
  report.task_threshold_m = opts.thresholds[1];

  std::map<std::string_view, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.record_id, &p).second) {
      report.warnings.push_back("duplicate prediction for " + p.record_id + ", first kept");
    }
  }
  std::set<std::string_view> known;
  for (const auto& r : dataset) known.insert(r.record_id);
  for (const auto& [id, _] : by_id) {
    if (!known.contains(id)) report.warnings.push_back("prediction for unknown record " + std::string(id));
  }

  static const std::vector<OcclusionLabel> kNone;
  std::vector<MetricAccumulator> per_record(dataset.size());
  std::vector<std::vector<std::string>> record_warnings(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    const auto& rec = dataset[i];
    const auto sit = scenes.find(rec.scene_id);
    if (sit == scenes.end()) throw Error("record '" + rec.record_id + "': unknown scene");
    const auto lit = labels.find(rec.scene_id);
    const auto pit = by_id.find(rec.record_id);
    const Prediction* pred = pit == by_id.end() ? nullptr : pit->second;
    per_record[i] = score_record(rec, pred, *sit->second, lit == labels.end() ? kNone : lit->second,
                                 opts, &record_warnings[i]);
  });

  MetricAccumulator all;
  std::map<TaskType, MetricAccumulator> tasks;
  for (const auto t : kAllTasks) tasks[t] = {};
  std::size_t missing = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    all.merge(per_record[i]);
    tasks[dataset[i].task].merge(per_record[i]);
    missing += per_record[i].missing_predictions;
    for (auto& w : record_warnings[i]) report.warnings.push_back(std::move(w));
  }
  if (missing > 0) {
    report.warnings.push_back(fmt::format("{} records have no prediction; scored as parse failures",
                                          missing));
  }
  report.aggregate = finalize(all);
  for (const auto& [t, acc] : tasks) report.per_task[t] = finalize(acc);
  return report;
}

std::string render_markdown(const ScoreReport& r, std::string_view method) {
  const auto agg_thr = fmt::format("{:g}m", r.aggregate_threshold_m);
  const auto task_thr = fmt::format("{:g}m", r.task_threshold_m);
  const auto& a = r.aggregate;
  const auto at = [&](const MetricValues& v, double thr) {
    return thr == 10.0 ? v.occ_at_10m : v.occ_at_20m;
  };
  std::ostringstream out;
  out << "### Aggregate performance\n\n";
  out << "| Method | F1 | Occ. | Occ.@" << agg_thr << " | Vis. MAE | BERT | mIoU |\n";
  out << "|---|---|---|---|---|---|---|\n";
  out << "| " << method << " | " << cell(a.decision_f1) << " | " << cell(a.occ_recall) << " | "
      << cell(at(a, r.aggregate_threshold_m)) << " | " << cell(a.vis_mae) << " | "
      << cell(a.text_similarity) << " | " << cell(a.miou) << " |\n\n";

  out << "### Task-specific performance\n\n";
  out << "| Method |";
  for (const auto t : kAllTasks) {
    const std::string name(to_string(t));
    out << ' ' << name << " F1 | " << name << " Occ. | " << name << " Occ.@" << task_thr << " | "
        << name << " Vis. MAE |";
  }
  out << "\n|---|";
  for (std::size_t i = 0; i < kAllTasks.size() * 4; ++i) out << "---|";
  out << "\n| " << method << " |";
  for (const auto t : kAllTasks) {
    const auto& v = r.per_task.at(t);
    out << ' ' << cell(v.decision_f1) << " | " << cell(v.occ_recall) << " | "
        << cell(at(v, r.task_threshold_m)) << " | " << cell(v.vis_mae) << " |";
  }
  out << "\n\n### Supplementary metrics (threshold mode: " << to_string(r.mode) << ")\n\n";
  out << "| Scope | Records | F1 | Occ. | Occ.@10m | Occ.@20m | Vis. MAE | mIoU | BERT | Parse failures "
         "| Parse-failure rate | Missing |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  const auto row = [&](std::string_view scope, const MetricValues& v) {
    out << "| " << scope << " | " << v.records << " | " << cell(v.decision_f1) << " | "
        << cell(v.occ_recall) << " | " << cell(v.occ_at_10m) << " | " << cell(v.occ_at_20m) << " | "
        << cell(v.vis_mae) << " | " << cell(v.miou) << " | " << cell(v.text_similarity) << " | "
        << v.parse_failures << " | " << fmt::format("{:.4f}", v.parse_failure_rate) << " | "
        << v.missing_predictions << " |\n";
  };
  row("aggregate", a);
  for (const auto t : kAllTasks) row(to_string(t), r.per_task.at(t));
  if (!r.warnings.empty()) {
    out << "\nWarnings:\n\n";
    for (const auto& w : r.warnings) out << "- " << w << '\n';
  }
  return out.str();
}

std::string render_csv(const ScoreReport& r) {
  std::ostringstream out;
  out << "scope,records,decision_f1,occ_recall,occ_at_10m,occ_at_20m,vis_mae,miou,text_similarity,"
         "parse_failures,parse_failure_rate,missing_predictions\n";
  const auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.17g}", *v) : std::string("n/a");
  };
  const auto row = [&](std::string_view scope, const MetricValues& v) {
    out << scope << ',' << v.records << ',' << opt(v.decision_f1) << ',' << opt(v.occ_recall) << ','
        << opt(v.occ_at_10m) << ',' << opt(v.occ_at_20m) << ',' << opt(v.vis_mae) << ','
        << opt(v.miou) << ',' << opt(v.text_similarity) << ',' << v.parse_failures << ','
        << fmt::format("{:.17g}", v.parse_failure_rate) << ',' << v.missing_predictions << '\n';
  };
  row("aggregate", r.aggregate);
  for (const auto t : kAllTasks) row(to_string(t), r.per_task.at(t));
  return out.str();
}

}  // namespace coopsight
