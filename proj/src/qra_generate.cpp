// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

// Template-based Question-Rationale-Answer generation from scene ground truth.

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "coopsight/parallel.hpp"
#include "coopsight/qra.hpp"
#include "coopsight/scenegen.hpp"

namespace coopsight {

namespace {

constexpr std::array<std::string_view, 21> kNumberWords = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};

std::string words(std::size_t n) {
  return n < kNumberWords.size() ? std::string(kNumberWords[n]) : std::to_string(n);
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string plural(ObjectClass c) {
  if (c == ObjectClass::kBus) return "buses";
  return std::string(to_string(c)) + "s";
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

bool is_ego_camera(const CameraModel& cam) { return cam.sensor_id.rfind("vehicle", 0) == 0; }

/// Per-object ground truth the templates draw from, in near-to-far order.
struct Fact {
  std::size_t index = 0;
  const ObjectBox3D* obj = nullptr;
  double distance = 0.0;  // rounded to centimeters, as serialized
  CardinalSector sector = CardinalSector::kN;
  bool occluded = false;
  std::optional<std::size_t> occluder;
  std::optional<std::pair<std::string, PixelBox>> view;
};

struct SceneFacts {
  const Scene* scene = nullptr;
  std::vector<Fact> facts;

  const ObjectBox3D& object(std::size_t idx) const { return scene->objects[idx]; }
  bool occluded(std::size_t idx) const {
    return std::any_of(facts.begin(), facts.end(),
                       [&](const Fact& f) { return f.index == idx && f.occluded; });
  }
};

SceneFacts build_facts(const Scene& scene, std::span<const OcclusionLabel> labels,
                       const QraConfig& cfg) {
  SceneFacts sf{&scene, {}};
  for (const auto idx : depth_order(scene)) {
    const auto& obj = scene.objects[idx];
    const auto* label = find_label(labels, obj.id);
    if (!label) {
      throw Error("labels do not cover object '" + obj.id + "' of scene '" + scene.scene_id + "'");
    }
    Fact f;
    f.index = idx;
    f.obj = &obj;
    f.distance = round2(range_to(obj));
    f.sector = sector_of(obj, cfg.heading_offset);
    f.occluded = label->occluded;
    if (f.occluded) f.occluder = primary_occluder(scene, idx);
    f.view = grounding_view(scene, obj);
    sf.facts.push_back(std::move(f));
  }
  return sf;
}

GroundedObject grounded_of(const Fact& f) {
  return {f.obj->class_label, f.view->second, f.distance, f.view->first};
}

void fill_answer(QraRecord& rec, const std::vector<const Fact*>& grounded,
                 std::optional<double> nearest_hidden, const QraConfig& cfg) {
  rec.grounded.decision = cfg.hazard.decide(nearest_hidden);
  rec.grounded.hazard_level = cfg.hazard.hazard(nearest_hidden);
  rec.grounded.count = grounded.size();
  for (const auto* f : grounded) {
    rec.grounded.grounded_objects.push_back(grounded_of(*f));
    rec.gt_object_ids.push_back(f->obj->id);
  }
}

std::string occluder_name(const SceneFacts& sf, const Fact& f) {
  return f.occluder ? std::string(to_string(sf.object(*f.occluder).class_label)) : "closer obstacle";
}

/// "A van is visible, but a car at x: 25.04, y: -27.33 is obscured by the van, detected at 37.06 meters."
std::string hidden_sentence(const SceneFacts& sf, const Fact& f) {
  const std::string cls(to_string(f.obj->class_label));
  const std::string occ = occluder_name(sf, f);
  const bool occ_visible = f.occluder && !sf.occluded(*f.occluder);
  if (occ_visible) {
    return fmt::format("A {0} is visible, but a {1} at x: {2:.2f}, y: {3:.2f} is obscured by the {0}, "
                       "detected at {4:.2f} meters.",
                       occ, cls, f.obj->center.x(), f.obj->center.y(), f.distance);
  }
  return fmt::format("A {1} at x: {2:.2f}, y: {3:.2f} lies behind a {0}, detected at {4:.2f} meters.",
                     occ, cls, f.obj->center.x(), f.obj->center.y(), f.distance);
}

std::vector<const Fact*> hidden_facts(const SceneFacts& sf) {
  std::vector<const Fact*> out;
  for (const auto& f : sf.facts) {
    if (f.occluded && f.view) out.push_back(&f);
  }
  return out;
}

std::optional<double> nearest(const std::vector<const Fact*>& facts) {
  return facts.empty() ? std::nullopt : std::optional<double>(facts.front()->distance);
}

QraRecord base_record(const Scene& scene, TaskType task, int persona) {
  QraRecord rec;
  rec.scene_id = scene.scene_id;
  rec.task = task;
  rec.persona = persona;
  rec.split_tag = scene.split_tag;
  return rec;
}

QraRecord spatial_record(const SceneFacts& sf, CardinalSector sector, int persona,
                         const QraConfig& cfg) {
  QraRecord rec = base_record(*sf.scene, TaskType::kSpatial, persona);
  const std::string dir(direction_word(sector));
  constexpr std::array<std::string_view, 4> kQuestions = {
      "Checking for hidden vehicles in the {} direction. Are there any?",
      "Is anything concealed from the ego camera toward the {}?",
      "Scan the {} sector: are any road users hidden behind closer obstacles?",
      "Could a hidden road user be lurking in the {} direction?"};
  rec.question = fmt::format(fmt::runtime(kQuestions[persona % 4]), dir);

  std::vector<const Fact*> hidden;
  std::size_t visible_here = 0;
  for (const auto* f : hidden_facts(sf)) {
    if (f->sector == sector) hidden.push_back(f);
  }
  for (const auto& f : sf.facts) visible_here += (!f.occluded && f.sector == sector) ? 1 : 0;
  if (hidden.size() > cfg.max_grounded) hidden.resize(cfg.max_grounded);
  fill_answer(rec, hidden, nearest(hidden), cfg);

  if (hidden.empty()) {
    rec.answer_text = fmt::format("No, nothing is hidden in the {} direction.", dir);
    if (visible_here > 0) {
      rec.rationale = fmt::format(
          "{} {} in the {} direction {} in clear view, and none is obscured by a closer obstacle.",
          capitalize(words(visible_here)), visible_here == 1 ? "object" : "objects", dir,
          visible_here == 1 ? "is" : "are");
    } else {
      rec.rationale = fmt::format("No objects are tracked in the {} direction.", dir);
    }
  } else {
    const Fact& first = *hidden.front();
    const std::string cls(to_string(first.obj->class_label));
    rec.answer_text = fmt::format("Yes, a {} is hidden by a {} in the {} direction at {:.0f} meters.",
                                  cls, occluder_name(sf, first), dir, first.distance);
    if (hidden.size() > 1) {
      const auto more = hidden.size() - 1;
      rec.answer_text += fmt::format(" {} more hidden {} further out.", capitalize(words(more)),
                                     more == 1 ? "object lies" : "objects lie");
    }
    for (std::size_t i = 0; i < std::min<std::size_t>(hidden.size(), 3); ++i) {
      if (i) rec.rationale += ' ';
      rec.rationale += hidden_sentence(sf, *hidden[i]);
    }
    rec.rationale += fmt::format(" This {} could be a potential hazard if not monitored.", cls);
  }
  return rec;
}

QraRecord counting_record(const SceneFacts& sf, int persona, Rng& rng, const QraConfig& cfg) {
  QraRecord rec = base_record(*sf.scene, TaskType::kCounting, persona);
  std::optional<ObjectClass> filter;
  if (!sf.facts.empty() && rng.bernoulli(0.5)) {
    filter = sf.facts[rng.index(sf.facts.size())].obj->class_label;
  }
  const std::string group = filter ? plural(*filter) : "road users";
  const std::string single = filter ? std::string(to_string(*filter)) : "road user";
  constexpr std::array<std::string_view, 4> kQuestions = {
      "How many {} are hidden from the ego camera?",
      "Count the {} that closer obstacles conceal from the ego vehicle.",
      "How many occluded {} does cooperative sensing reveal?",
      "Give the number of {} the ego vehicle cannot see directly."};
  rec.question = fmt::format(fmt::runtime(kQuestions[persona % 4]), group);

  std::vector<const Fact*> hidden;
  for (const auto* f : hidden_facts(sf)) {
    if (!filter || f->obj->class_label == *filter) hidden.push_back(f);
  }
  if (hidden.size() > cfg.max_grounded) hidden.resize(cfg.max_grounded);
  fill_answer(rec, hidden, nearest(hidden), cfg);

  if (hidden.empty()) {
    rec.answer_text = fmt::format("There are no hidden {}.", group);
  } else if (hidden.size() == 1) {
    rec.answer_text = fmt::format("There is one hidden {}, a {} at {:.0f} meters.", single,
                                  to_string(hidden.front()->obj->class_label),
                                  hidden.front()->distance);
  } else {
    rec.answer_text = fmt::format("There are {} hidden {}; the nearest is a {} at {:.0f} meters.",
                                  words(hidden.size()), group,
                                  to_string(hidden.front()->obj->class_label),
                                  hidden.front()->distance);
  }
  rec.rationale = fmt::format("Cooperative sensors track {} {} around the intersection.",
                              words(sf.facts.size()), sf.facts.size() == 1 ? "object" : "objects");
  for (std::size_t i = 0; i < std::min<std::size_t>(hidden.size(), 3); ++i) {
    rec.rationale += ' ';
    rec.rationale += hidden_sentence(sf, *hidden[i]);
  }
  rec.rationale += hidden.empty() ? fmt::format(" None of the {} is hidden from the ego camera.", group)
                                  : std::string(" Objects in clear view of the ego camera are not counted.");
  return rec;
}

QraRecord maneuver_record(const SceneFacts& sf, int persona, Rng& rng, const QraConfig& cfg) {
  QraRecord rec = base_record(*sf.scene, TaskType::kManeuver, persona);
  constexpr std::array<std::string_view, 3> kIntents = {"turn left", "go straight", "turn right"};
  const std::string intent(kIntents[rng.index(kIntents.size())]);
  constexpr std::array<std::string_view, 4> kQuestions = {
      "The ego vehicle wants to {} at the intersection. What should it do?",
      "Is it safe to {} right now?",
      "Plan the next action: the ego vehicle intends to {}.",
      "Before we {}, what maneuver do the cooperative sensors support?"};
  rec.question = fmt::format(fmt::runtime(kQuestions[persona % 4]), intent);

  const auto hidden_all = hidden_facts(sf);
  std::vector<const Fact*> visible;
  for (const auto& f : sf.facts) {
    if (!f.occluded && f.view) visible.push_back(&f);
  }
  std::vector<const Fact*> grounded(hidden_all.begin(),
                                    hidden_all.begin() + std::min<std::size_t>(3, hidden_all.size()));
  grounded.insert(grounded.end(), visible.begin(),
                  visible.begin() + std::min<std::size_t>(3, visible.size()));
  std::stable_sort(grounded.begin(), grounded.end(),
                   [](const Fact* a, const Fact* b) { return a->distance < b->distance; });
  if (grounded.size() > cfg.max_grounded) grounded.resize(cfg.max_grounded);
  const auto nearest_hidden = nearest(hidden_all);
  fill_answer(rec, grounded, nearest_hidden, cfg);

  const Decision decision = rec.grounded.decision;
  if (hidden_all.empty()) {
    rec.answer_text = visible.empty()
                          ? std::string("Proceed. The intersection is clear.")
                          : fmt::format("Proceed. Nothing is hidden; the nearest visible object is a {} "
                                        "at {:.0f} meters.",
                                        to_string(visible.front()->obj->class_label),
                                        visible.front()->distance);
  } else {
    const Fact& h = *hidden_all.front();
    const std::string cls(to_string(h.obj->class_label));
    switch (decision) {
      case Decision::kStop:
        rec.answer_text = fmt::format("Stop. A {} is hidden by a {} at {:.0f} meters, too close to {} "
                                      "safely.",
                                      cls, occluder_name(sf, h), h.distance, intent);
        break;
      case Decision::kYield:
        rec.answer_text =
            fmt::format("Yield. A hidden {} at {:.0f} meters could enter the path.", cls, h.distance);
        break;
      default:
        rec.answer_text = fmt::format("Proceed carefully and monitor the hidden {} at {:.0f} meters.",
                                      cls, h.distance);
        break;
    }
  }

  rec.rationale = fmt::format("The ego vehicle plans to {}.", intent);
  for (std::size_t i = 0; i < std::min<std::size_t>(hidden_all.size(), 3); ++i) {
    rec.rationale += ' ';
    rec.rationale += hidden_sentence(sf, *hidden_all[i]);
  }
  if (!visible.empty()) {
    rec.rationale += " Visible nearby:";
    for (std::size_t i = 0; i < std::min<std::size_t>(visible.size(), 3); ++i) {
      rec.rationale += fmt::format("{} a {} at {:.2f} meters", i ? "," : "",
                                   to_string(visible[i]->obj->class_label), visible[i]->distance);
    }
    rec.rationale += '.';
  }
  rec.rationale += nearest_hidden
                       ? fmt::format(" With a hidden object {:.2f} meters away, the safe action is to {}.",
                                     *nearest_hidden, to_string(decision))
                       : std::string(" No hidden hazards are present, so the ego vehicle can proceed.");
  return rec;
}

void finish(QraRecord& rec, const QraConfig& cfg) {
  if (!cfg.with_rationale) rec.rationale.clear();
}

}  // namespace

void TaskMix::validate() const {
  for (const double f : fractions()) {
    if (!(f >= 0.0)) throw ConfigError("task mix fractions must be non-negative");
  }
  if (std::abs(spatial + counting + maneuver - 1.0) > 1e-6) {
    throw ConfigError("task mix must sum to 1");
  }
}

Decision HazardPolicy::decide(std::optional<double> nearest_occluded_m) const {
  if (!nearest_occluded_m) return Decision::kProceed;
  if (*nearest_occluded_m <= stop_within_m) return Decision::kStop;
  if (*nearest_occluded_m <= yield_within_m) return Decision::kYield;
  return Decision::kMonitor;
}

HazardLevel HazardPolicy::hazard(std::optional<double> nearest_occluded_m) const {
  if (!nearest_occluded_m) return HazardLevel::kNone;
  if (*nearest_occluded_m <= high_within_m) return HazardLevel::kHigh;
  if (*nearest_occluded_m <= medium_within_m) return HazardLevel::kMedium;
  return HazardLevel::kLow;
}

Json to_json(const QraRecord& r) {
  Json j;
  j["record_id"] = r.record_id;
  j["scene_id"] = r.scene_id;
  j["split_tag"] = to_string(r.split_tag);
  j["task"] = to_string(r.task);
  j["persona"] = r.persona;
  j["question"] = r.question;
  j["rationale"] = r.rationale;
  j["answer_text"] = r.answer_text;
  j["grounded"] = to_json(r.grounded);
  j["gt_object_ids"] = r.gt_object_ids;
  return j;
}

QraRecord record_from_json(const Json& j) {
  QraRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.scene_id = j.at("scene_id").get<std::string>();
  const auto split = split_from_string(j.at("split_tag").get<std::string>());
  if (!split) throw Error("unknown split_tag");
  r.split_tag = *split;
  const auto task = task_from_string(j.at("task").get<std::string>());
  if (!task) throw Error("unknown task");
  r.task = *task;
  r.persona = j.value("persona", 0);
  r.question = j.at("question").get<std::string>();
  r.rationale = j.at("rationale").get<std::string>();
  r.answer_text = j.at("answer_text").get<std::string>();
  // The stored answer is parsed leniently for the count so that the
  // validator, not the reader, judges count/list consistency.
  const auto& g = j.at("grounded");
  r.grounded = parse_answer(g.dump(), ParseMode::kLenient).answer;
  if (g.contains("count") && g.at("count").is_number_integer()) {
    r.grounded.count = g.at("count").get<std::size_t>();
  }
  r.gt_object_ids = j.value("gt_object_ids", std::vector<std::string>{});
  return r;
}

std::vector<QraRecord> read_records(const std::filesystem::path& path) {
  std::vector<QraRecord> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) { out.push_back(record_from_json(j)); });
  return out;
}

void write_records(const std::filesystem::path& path, std::span<const QraRecord> records) {
  std::string text;
  for (const auto& r : records) {
    text += to_json(r).dump();
    text += '\n';
  }
  write_text(path, text);
}

SceneIndex index_scenes(std::span<const Scene> scenes) {
  SceneIndex idx;
  for (const auto& s : scenes) {
    if (!idx.emplace(s.scene_id, &s).second) throw Error("duplicate scene_id '" + s.scene_id + "'");
  }
  return idx;
}

std::vector<Json> label_rows(std::string_view scene_id, std::span<const OcclusionLabel> labels) {
  std::vector<Json> rows;
  for (const auto& l : labels) {
    Json j;
    j["scene_id"] = scene_id;
    j["object_id"] = l.object_id;
    j["occluded"] = l.occluded;
    j["coverage"] = l.coverage;
    j["depth_rank"] = l.depth_rank;
    rows.push_back(std::move(j));
  }
  return rows;
}

LabelMap read_labels(const std::filesystem::path& path) {
  LabelMap out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    OcclusionLabel l;
    l.object_id = j.at("object_id").get<std::string>();
    l.occluded = j.at("occluded").get<bool>();
    l.coverage = j.at("coverage").get<double>();
    l.depth_rank = j.at("depth_rank").get<int>();
    if (!(l.coverage >= 0.0 && l.coverage <= 1.0)) throw Error("coverage outside [0, 1]");
    out[j.at("scene_id").get<std::string>()].push_back(std::move(l));
  });
  return out;
}

std::optional<std::pair<std::string, PixelBox>> grounding_view(const Scene& scene,
                                                               const ObjectBox3D& obj) {
  std::optional<std::pair<std::string, PixelBox>> best;
  double best_area = 0.0;
  for (const bool ego_pass : {false, true}) {
    for (const auto& cam : scene.cameras) {
      if (is_ego_camera(cam) != ego_pass) continue;
      const auto box = project_box(obj, cam);
      if (box && box->area() > best_area) {
        best_area = box->area();
        best = std::make_pair(cam.sensor_id, to_pixel_box(*box));
      }
    }
    if (best) break;
  }
  return best;
}

QraRecord make_spatial_record(const Scene& scene, std::span<const OcclusionLabel> labels,
                              CardinalSector sector, int persona, const QraConfig& cfg) {
  QraRecord rec = spatial_record(build_facts(scene, labels, cfg), sector, persona, cfg);
  finish(rec, cfg);
  return rec;
}

QraRecord make_record(const Scene& scene, std::span<const OcclusionLabel> labels, TaskType task,
                      Rng& rng, const QraConfig& cfg) {
  const SceneFacts sf = build_facts(scene, labels, cfg);
  const int persona = static_cast<int>(rng.index(4));
  if (sf.facts.empty()) task = TaskType::kCounting;
  QraRecord rec;
  switch (task) {
    case TaskType::kSpatial: {
      // Lean toward sectors that actually hold a hidden object.
      const auto hidden = hidden_facts(sf);
      CardinalSector sector;
      if (!hidden.empty() && rng.bernoulli(0.6)) {
        sector = hidden[rng.index(hidden.size())]->sector;
      } else {
        sector = static_cast<CardinalSector>(rng.index(8));
      }
      rec = spatial_record(sf, sector, persona, cfg);
      break;
    }
    case TaskType::kCounting:
      rec = counting_record(sf, persona, rng, cfg);
      break;
    case TaskType::kManeuver:
      rec = maneuver_record(sf, persona, rng, cfg);
      break;
  }
  finish(rec, cfg);
  return rec;
}

namespace {

std::vector<TaskType> task_schedule(const TaskMix& mix, std::size_t n, Rng& rng) {
  mix.validate();
  const auto fr = mix.fractions();
  const auto counts = apportion(fr, n);
  std::vector<TaskType> tasks;
  tasks.reserve(n);
  for (std::size_t t = 0; t < counts.size(); ++t) tasks.insert(tasks.end(), counts[t], kAllTasks[t]);
  for (std::size_t i = tasks.size(); i > 1; --i) std::swap(tasks[i - 1], tasks[rng.index(i)]);
  return tasks;
}

}  // namespace

std::vector<QraRecord> generate_records(const Scene& scene, std::span<const OcclusionLabel> labels,
                                        const TaskMix& mix, std::size_t n_records,
                                        std::uint64_t seed, const QraConfig& cfg) {
  Rng rng(mix_seed(seed));
  const auto tasks = task_schedule(mix, n_records, rng);
  std::vector<QraRecord> out;
  out.reserve(n_records);
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    Rng rec_rng(mix_seed(seed, k + 1));
    out.push_back(make_record(scene, labels, tasks[k], rec_rng, cfg));
    out.back().record_id = fmt::format("{}-q{:03}", scene.scene_id, k);
  }
  return out;
}

std::vector<QraRecord> generate_dataset(std::span<const Scene> scenes, const LabelMap& labels,
                                        const TaskMix& mix, std::size_t n_records,
                                        std::uint64_t seed, const QraConfig& cfg, int threads) {
  if (scenes.empty()) throw ConfigError("no scenes to generate records from");
  for (const auto& s : scenes) {
    if (!labels.contains(s.scene_id) && !s.objects.empty()) {
      throw Error("no occlusion labels for scene '" + s.scene_id + "'");
    }
  }
  Rng rng(mix_seed(seed));
  const auto tasks = task_schedule(mix, n_records, rng);
  std::vector<QraRecord> out(n_records);
  static const std::vector<OcclusionLabel> kNone;
  parallel_for(n_records, threads, [&](std::size_t k) {
    const Scene& scene = scenes[k % scenes.size()];
    const auto it = labels.find(scene.scene_id);
    const auto& scene_labels = it == labels.end() ? kNone : it->second;
    Rng rec_rng(mix_seed(seed, k + 1));
    out[k] = make_record(scene, scene_labels, tasks[k], rec_rng, cfg);
    out[k].record_id = fmt::format("q{:06}", k);
  });
  return out;
}

}  // namespace coopsight
