// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "coopsight/qra.hpp"
#include "coopsight/scenegen.hpp"

namespace coopsight {

namespace {

constexpr std::array<std::string_view, 4> kReasonNames = {
    "count-mismatch", "unknown-sensor", "distance-hallucination", "text-distance-mismatch"};

const std::regex& distance_pattern() {
  static const std::regex re(R"((\d+(?:\.\d+)?)\s*(?:m|meters?|metres?)\b)", std::regex::icase);
  return re;
}

struct DistanceMention {
  std::size_t pos;
  std::size_t len;  // length of the numeric part
  double value;
};

std::optional<DistanceMention> find_mention(const std::string& text) {
  std::smatch m;
  if (!std::regex_search(text, m, distance_pattern())) return std::nullopt;
  return DistanceMention{static_cast<std::size_t>(m.position(1)),
                         static_cast<std::size_t>(m.length(1)), std::stod(m.str(1))};
}

bool any_within(const std::vector<GroundedObject>& objs, double value, double gap) {
  return std::any_of(objs.begin(), objs.end(),
                     [&](const GroundedObject& o) { return std::abs(o.distance_m - value) <= gap; });
}

/// True when some same-class ground-truth object lies within tolerance.
bool supported_by_gt(const Scene& scene, const GroundedObject& o, const TolerancePolicy& policy) {
  return std::any_of(scene.objects.begin(), scene.objects.end(), [&](const ObjectBox3D& gt) {
    const double d = range_to(gt);
    return gt.class_label == o.type && std::abs(o.distance_m - d) <= policy.tolerance(d);
  });
}

std::optional<Rejection> check_record(const QraRecord& r, const Scene& scene,
                                      const TolerancePolicy& policy) {
  const auto& objs = r.grounded.grounded_objects;
  if (r.grounded.count != objs.size()) {
    return Rejection{0, r.record_id, RejectReason::kCountMismatch,
                     fmt::format("count {} vs {} grounded objects", r.grounded.count, objs.size())};
  }
  for (const auto& o : objs) {
    if (!scene.find_camera(o.sensor_id)) {
      return Rejection{0, r.record_id, RejectReason::kUnknownSensor,
                       "sensor '" + o.sensor_id + "' not in scene"};
    }
  }
  for (const auto& o : objs) {
    if (!supported_by_gt(scene, o, policy)) {
      return Rejection{0, r.record_id, RejectReason::kDistanceHallucination,
                       fmt::format("no {} within tolerance of {:.2f} m", to_string(o.type),
                                   o.distance_m)};
    }
  }
  if (!objs.empty()) {
    if (const auto quoted = first_distance_mention(r.answer_text)) {
      if (!any_within(objs, *quoted, policy.text_gap_m)) {
        return Rejection{0, r.record_id, RejectReason::kTextDistanceMismatch,
                         fmt::format("answer quotes {:.2f} m", *quoted)};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(RejectReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

std::optional<double> first_distance_mention(std::string_view text) {
  const auto m = find_mention(std::string(text));
  return m ? std::optional<double>(m->value) : std::nullopt;
}

std::map<RejectReason, std::size_t> ValidationReport::histogram() const {
  std::map<RejectReason, std::size_t> h;
  for (const auto r : kAllRejectReasons) h[r] = 0;
  for (const auto& rej : rejected) ++h[rej.reason];
  return h;
}

Json ValidationReport::to_json() const {
  Json hist = Json::object();
  for (const auto& [reason, n] : histogram()) hist[std::string(to_string(reason))] = n;
  Json rejections = Json::array();
  for (const auto& r : rejected) {
    rejections.push_back({{"index", r.index},
                          {"record_id", r.record_id},
                          {"reason", to_string(r.reason)},
                          {"detail", r.detail}});
  }
  Json j;
  j["total"] = total();
  j["accepted"] = accepted.size();
  j["rejected"] = rejected.size();
  j["rejections_by_reason"] = std::move(hist);
  j["rejections"] = std::move(rejections);
  return j;
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  out << "validated " << total() << " records: " << accepted.size() << " accepted, "
      << rejected.size() << " rejected\n";
  for (const auto& [reason, n] : histogram()) {
    out << "  " << to_string(reason) << ": " << n << '\n';
  }
  return out.str();
}

ValidationReport validate_dataset(std::span<const QraRecord> records, const SceneIndex& scenes,
                                  const LabelMap& labels, const TolerancePolicy& policy) {
  ValidationReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto it = scenes.find(r.scene_id);
    if (it == scenes.end()) throw Error("record '" + r.record_id + "': unknown scene_id '" + r.scene_id + "'");
    if (!labels.contains(r.scene_id) && !it->second->objects.empty()) {
      throw Error("record '" + r.record_id + "': no labels for scene '" + r.scene_id + "'");
    }
    if (auto rej = check_record(r, *it->second, policy)) {
      rej->index = i;
      report.rejected.push_back(std::move(*rej));
    } else {
      report.accepted.push_back(i);
    }
  }
  return report;
}

std::vector<InjectedFault> inject_faults(std::vector<QraRecord>& records, const SceneIndex& scenes,
                                         std::size_t n_faults, std::uint64_t seed,
                                         const TolerancePolicy& policy) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0xfa17));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  const std::array<double, 4> even = {0.25, 0.25, 0.25, 0.25};
  const auto per_kind = apportion(even, n_faults);
  std::vector<bool> used(records.size(), false);
  std::vector<InjectedFault> faults;

  for (std::size_t kind = 0; kind < kAllRejectReasons.size(); ++kind) {
    const RejectReason reason = kAllRejectReasons[kind];
    std::size_t placed = 0;
    for (std::size_t k = 0; k < order.size() && placed < per_kind[kind]; ++k) {
      const std::size_t idx = order[k];
      if (used[idx]) continue;
      QraRecord& r = records[idx];
      auto& objs = r.grounded.grounded_objects;
      const Scene& scene = *scenes.at(r.scene_id);
      bool ok = false;
      switch (reason) {
        case RejectReason::kCountMismatch:
          r.grounded.count = objs.size() + 1;
          ok = true;
          break;
        case RejectReason::kUnknownSensor:
          if (!objs.empty()) {
            objs.front().sensor_id = "s110_camera_basler_phantom_8mm";
            ok = true;
          }
          break;
        case RejectReason::kDistanceHallucination:
          if (!objs.empty()) {
            // Push the distance out until no same-class object supports it.
            auto& o = objs.front();
            const double original = o.distance_m;
            for (double offset = 10.0; offset < 1000.0 && !ok; offset += 10.0) {
              o.distance_m = original + offset;
              ok = !supported_by_gt(scene, o, policy);
            }
            if (!ok) o.distance_m = original;
          }
          break;
        case RejectReason::kTextDistanceMismatch:
          if (!objs.empty()) {
            const auto m = find_mention(r.answer_text);
            if (!m) break;
            for (double offset = 7.0; offset < 1000.0 && !ok; offset += 7.0) {
              const double v = std::round(m->value + offset);
              if (!any_within(objs, v, policy.text_gap_m)) {
                r.answer_text.replace(m->pos, m->len, fmt::format("{:.0f}", v));
                ok = true;
              }
            }
          }
          break;
      }
      if (ok) {
        used[idx] = true;
        faults.push_back({idx, reason});
        ++placed;
      }
    }
    if (placed < per_kind[kind]) {
      throw Error(fmt::format("not enough eligible records for {} {} faults", per_kind[kind],
                              to_string(reason)));
    }
  }
  std::sort(faults.begin(), faults.end(),
            [](const InjectedFault& a, const InjectedFault& b) { return a.index < b.index; });
  return faults;
}

}  // namespace coopsight
