// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

// Structured answer schema: enum vocabularies, canonical serialization and the
// strict / lenient parsers.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include "coopsight/qra.hpp"

namespace coopsight {

namespace {

constexpr std::array<std::string_view, 4> kDecisionNames = {"proceed", "monitor", "yield", "stop"};
constexpr std::array<std::string_view, 4> kHazardNames = {"none", "low", "medium", "high"};
constexpr std::array<std::string_view, 3> kTaskNames = {"spatial", "counting", "maneuver"};
constexpr std::array<std::string_view, 6> kParseErrorNames = {
    "unparseable", "missing-field", "unknown-key", "inconsistent", "invalid-decision",
    "invalid-field"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

const std::set<std::string, std::less<>> kAnswerKeys = {"decision", "hazard_level", "count",
                                                        "grounded_objects"};
const std::set<std::string, std::less<>> kObjectKeys = {"type", "bbox", "distance_m", "sensor_id"};

std::string lower_trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Leading number of a string such as "37.06", " 12 m" or "12 meters".
std::optional<double> numeric_string(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || !std::isfinite(v)) return std::nullopt;
  const std::string rest = lower_trim(end);
  if (rest.empty() || rest == "m" || rest == "meters" || rest == "metres" || rest == "px") return v;
  return std::nullopt;
}

[[noreturn]] void fail(ParseErrorCode code, const std::string& detail) {
  throw ParseError(code, detail);
}

// ---------------------------------------------------------------------------
// Strict

GroundedObject strict_object(const Json& j, std::size_t i) {
  const std::string where = "grounded_objects[" + std::to_string(i) + "]";
  if (!j.is_object()) fail(ParseErrorCode::kInvalidField, where + " is not an object");
  for (const auto& key : kObjectKeys) {
    if (!j.contains(key)) fail(ParseErrorCode::kMissingField, where + "." + key);
  }
  for (const auto& [key, _] : j.items()) {
    if (!kObjectKeys.contains(key)) fail(ParseErrorCode::kUnknownKey, where + "." + key);
  }
  GroundedObject o;
  const auto& type = j.at("type");
  const auto cls = type.is_string() ? class_from_string(type.get<std::string>()) : std::nullopt;
  if (!cls) fail(ParseErrorCode::kInvalidField, where + ".type");
  o.type = *cls;

  const auto& bbox = j.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) fail(ParseErrorCode::kInvalidField, where + ".bbox");
  PixelBox px{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (!bbox[k].is_number_integer()) fail(ParseErrorCode::kInvalidField, where + ".bbox");
    px[k] = bbox[k].get<int>();
  }
  if (!pixel_box_valid(px)) fail(ParseErrorCode::kInvalidField, where + ".bbox not well-ordered");
  o.bbox = px;

  const auto& dist = j.at("distance_m");
  if (!dist.is_number() || !std::isfinite(dist.get<double>()) || dist.get<double>() < 0.0) {
    fail(ParseErrorCode::kInvalidField, where + ".distance_m");
  }
  o.distance_m = dist.get<double>();

  const auto& sensor = j.at("sensor_id");
  if (!sensor.is_string() || sensor.get<std::string>().empty()) {
    fail(ParseErrorCode::kInvalidField, where + ".sensor_id");
  }
  o.sensor_id = sensor.get<std::string>();
  return o;
}

GroundedAnswer strict_answer(const Json& j) {
  if (!j.is_object()) fail(ParseErrorCode::kUnparseable, "top level is not a JSON object");
  for (const auto& key : kAnswerKeys) {
    if (!j.contains(key)) fail(ParseErrorCode::kMissingField, key);
  }
  for (const auto& [key, _] : j.items()) {
    if (!kAnswerKeys.contains(key)) fail(ParseErrorCode::kUnknownKey, key);
  }
  GroundedAnswer a;
  const auto& decision = j.at("decision");
  const auto d = decision.is_string() ? decision_from_string(decision.get<std::string>())
                                      : std::nullopt;
  if (!d) fail(ParseErrorCode::kInvalidDecision, decision.dump());
  a.decision = *d;

  const auto& hazard = j.at("hazard_level");
  const auto h = hazard.is_string() ? hazard_from_string(hazard.get<std::string>()) : std::nullopt;
  if (!h) fail(ParseErrorCode::kInvalidField, "hazard_level");
  a.hazard_level = *h;

  const auto& count = j.at("count");
  if (!count.is_number_integer() || count.get<long long>() < 0) {
    fail(ParseErrorCode::kInvalidField, "count");
  }
  a.count = count.get<std::size_t>();

  const auto& objects = j.at("grounded_objects");
  if (!objects.is_array()) fail(ParseErrorCode::kInvalidField, "grounded_objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    a.grounded_objects.push_back(strict_object(objects[i], i));
  }
  if (a.count != a.grounded_objects.size()) {
    fail(ParseErrorCode::kInconsistent, "count " + std::to_string(a.count) + " but " +
                                            std::to_string(a.grounded_objects.size()) +
                                            " grounded objects");
  }
  return a;
}

// ---------------------------------------------------------------------------
// Lenient

struct Span {
  std::size_t begin;
  std::size_t end;  // one past the closing brace
};

/// Every balanced {...} span, skipping braces inside string literals.
std::vector<Span> brace_spans(std::string_view text) {
  std::vector<Span> spans;
  std::vector<std::size_t> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      // Quotes in prose outside any brace never start a JSON string.
      if (!stack.empty()) in_string = true;
    } else if (c == '{') {
      stack.push_back(i);
    } else if (c == '}' && !stack.empty()) {
      spans.push_back({stack.back(), i + 1});
      stack.pop_back();
    }
  }
  return spans;
}

std::optional<Json> last_json_object(std::string_view text) {
  auto spans = brace_spans(text);
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.end != b.end ? a.end > b.end : a.begin < b.begin;
  });
  std::optional<Json> fallback;
  for (const auto& s : spans) {
    Json j = Json::parse(text.substr(s.begin, s.end - s.begin), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (j.contains("decision")) return j;
    if (!fallback) fallback = std::move(j);
  }
  return fallback;
}

std::optional<double> lenient_number(const Json& j) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
  }
  if (j.is_string()) return numeric_string(j.get<std::string>());
  return std::nullopt;
}

std::optional<GroundedObject> lenient_object(const Json& j, std::size_t i,
                                             std::vector<std::string>& repairs) {
  const std::string where = "grounded_objects[" + std::to_string(i) + "]";
  if (!j.is_object()) {
    repairs.push_back(where + ": dropped non-object entry");
    return std::nullopt;
  }
  for (const auto& [key, _] : j.items()) {
    if (!kObjectKeys.contains(key)) repairs.push_back(where + ": ignored key '" + key + "'");
  }
  GroundedObject o;
  std::optional<ObjectClass> cls;
  if (j.contains("type") && j.at("type").is_string()) {
    const auto raw = j.at("type").get<std::string>();
    cls = class_from_string(lower_trim(raw));
    if (cls && lower_trim(raw) != raw) repairs.push_back(where + ".type: normalized case");
  }
  if (!cls) {
    repairs.push_back(where + ": dropped, unknown type");
    return std::nullopt;
  }
  o.type = *cls;

  std::optional<double> dist;
  if (j.contains("distance_m")) {
    dist = lenient_number(j.at("distance_m"));
    if (dist && !j.at("distance_m").is_number()) {
      repairs.push_back(where + ".distance_m: coerced from string");
    }
  }
  if (!dist || *dist < 0.0) {
    repairs.push_back(where + ": dropped, missing or invalid distance_m");
    return std::nullopt;
  }
  o.distance_m = *dist;

  if (j.contains("bbox") && j.at("bbox").is_array() && j.at("bbox").size() == 4) {
    PixelBox px{};
    bool ok = true;
    bool coerced = false;
    for (std::size_t k = 0; k < 4 && ok; ++k) {
      const auto& v = j.at("bbox")[k];
      const auto n = lenient_number(v);
      ok = n.has_value() && std::abs(*n) < 1e9;
      if (ok) {
        px[k] = static_cast<int>(std::lround(*n));
        coerced = coerced || !v.is_number_integer();
      }
    }
    if (ok && pixel_box_valid(px)) {
      o.bbox = px;
      if (coerced) repairs.push_back(where + ".bbox: coerced to integers");
    } else {
      repairs.push_back(where + ".bbox: invalid, left empty");
    }
  } else {
    repairs.push_back(where + ".bbox: missing, left empty");
  }

  if (j.contains("sensor_id") && j.at("sensor_id").is_string()) {
    o.sensor_id = j.at("sensor_id").get<std::string>();
  } else {
    repairs.push_back(where + ".sensor_id: missing");
  }
  return o;
}

ParsedAnswer lenient_answer(std::string_view text) {
  const auto found = last_json_object(text);
  if (!found) fail(ParseErrorCode::kUnparseable, "no JSON object found");
  const Json& j = *found;
  ParsedAnswer out;
  auto& repairs = out.repairs;
  auto& a = out.answer;

  for (const auto& [key, _] : j.items()) {
    if (!kAnswerKeys.contains(key)) repairs.push_back("ignored key '" + key + "'");
  }

  if (!j.contains("decision")) fail(ParseErrorCode::kMissingField, "decision");
  const auto& decision = j.at("decision");
  if (!decision.is_string()) fail(ParseErrorCode::kInvalidDecision, decision.dump());
  const auto norm = lower_trim(decision.get<std::string>());
  const auto d = decision_from_string(norm);
  if (!d) fail(ParseErrorCode::kInvalidDecision, decision.dump());
  if (norm != decision.get<std::string>()) repairs.push_back("decision: normalized case");
  a.decision = *d;

  if (!j.contains("hazard_level") || j.at("hazard_level").is_null()) {
    repairs.push_back("hazard_level: missing, defaulted to none");
  } else {
    const auto& hz = j.at("hazard_level");
    const auto h = hz.is_string() ? hazard_from_string(lower_trim(hz.get<std::string>()))
                                  : std::nullopt;
    if (h) {
      a.hazard_level = *h;
      if (lower_trim(hz.get<std::string>()) != hz.get<std::string>()) {
        repairs.push_back("hazard_level: normalized case");
      }
    } else {
      repairs.push_back("hazard_level: unrecognized, defaulted to none");
    }
  }

  if (j.contains("grounded_objects") && !j.at("grounded_objects").is_null()) {
    const auto& objects = j.at("grounded_objects");
    if (!objects.is_array()) fail(ParseErrorCode::kInvalidField, "grounded_objects");
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (auto o = lenient_object(objects[i], i, repairs)) a.grounded_objects.push_back(*o);
    }
  } else {
    repairs.push_back("grounded_objects: missing, defaulted to []");
  }

  std::optional<double> count;
  if (j.contains("count")) {
    count = lenient_number(j.at("count"));
    if (count && !j.at("count").is_number()) repairs.push_back("count: coerced from string");
  }
  if (!count || *count < 0.0 || *count != std::floor(*count)) {
    repairs.push_back("count: missing or invalid, set from grounded_objects");
  } else if (static_cast<std::size_t>(*count) != a.grounded_objects.size()) {
    repairs.push_back("count: reconciled with grounded_objects");
  }
  a.count = a.grounded_objects.size();
  return out;
}

}  // namespace

std::string_view to_string(Decision d) { return kDecisionNames[static_cast<std::size_t>(d)]; }
std::string_view to_string(HazardLevel h) { return kHazardNames[static_cast<std::size_t>(h)]; }
std::string_view to_string(TaskType t) { return kTaskNames[static_cast<std::size_t>(t)]; }
std::string_view to_string(ParseErrorCode c) {
  return kParseErrorNames[static_cast<std::size_t>(c)];
}

std::optional<Decision> decision_from_string(std::string_view s) {
  return lookup<Decision>(kDecisionNames, s);
}
std::optional<HazardLevel> hazard_from_string(std::string_view s) {
  return lookup<HazardLevel>(kHazardNames, s);
}
std::optional<TaskType> task_from_string(std::string_view s) {
  return lookup<TaskType>(kTaskNames, s);
}

Json to_json(const GroundedAnswer& a) {
  Json objects = Json::array();
  for (const auto& o : a.grounded_objects) {
    Json jo;
    jo["type"] = to_string(o.type);
    jo["bbox"] = o.bbox ? Json::array({(*o.bbox)[0], (*o.bbox)[1], (*o.bbox)[2], (*o.bbox)[3]})
                        : Json(nullptr);
    jo["distance_m"] = o.distance_m;
    jo["sensor_id"] = o.sensor_id;
    objects.push_back(std::move(jo));
  }
  Json j;
  j["decision"] = to_string(a.decision);
  j["hazard_level"] = to_string(a.hazard_level);
  j["count"] = a.count;
  j["grounded_objects"] = std::move(objects);
  return j;
}

std::string canonical_json(const GroundedAnswer& a) { return to_json(a).dump(); }

ParsedAnswer parse_answer(std::string_view text, ParseMode mode) {
  if (mode == ParseMode::kLenient) return lenient_answer(text);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ParseErrorCode::kUnparseable, "not a single JSON document");
  return {strict_answer(j), {}};
}

}  // namespace coopsight
