// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/occlusion.hpp"

#include <algorithm>
#include <numeric>

namespace coopsight {

namespace {

constexpr double kPi = std::numbers::pi;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
}

}  // namespace

AngularInterval::AngularInterval(double start, double span)
    : start_(wrap_angle(start)), span_(span) {
  if (!(span >= 0.0 && span < 2.0 * kPi)) throw Error("angular span outside [0, 2pi)");
  const double end = start_ + span_;
  if (end <= kPi) {
    pieces_.push_back({start_, end});
  } else {
    pieces_.push_back({start_, kPi});
    pieces_.push_back({-kPi, end - 2.0 * kPi});
  }
}

bool AngularInterval::contains(double bearing, double eps) const {
  double d = std::fmod(bearing - start_, 2.0 * kPi);
  if (d < 0.0) d += 2.0 * kPi;
  return d <= span_ + eps || d >= 2.0 * kPi - eps;
}

void AngleSet::add(const AngularInterval& interval) {
  for (const auto& p : interval.pieces()) add(p);
}

void AngleSet::add(const AngleRange& range) {
  ranges_.push_back(range);
  std::sort(ranges_.begin(), ranges_.end(),
            [](const AngleRange& a, const AngleRange& b) { return a.lo < b.lo; });
  std::vector<AngleRange> merged;
  for (const auto& r : ranges_) {
    if (!merged.empty() && r.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, r.hi);
    } else {
      merged.push_back(r);
    }
  }
  ranges_ = std::move(merged);
}

double AngleSet::measure() const {
  double m = 0.0;
  for (const auto& r : ranges_) m += r.measure();
  return m;
}

double AngleSet::overlap(const AngularInterval& interval) const {
  double m = 0.0;
  for (const auto& p : interval.pieces()) {
    for (const auto& r : ranges_) {
      m += std::max(0.0, std::min(p.hi, r.hi) - std::max(p.lo, r.lo));
    }
  }
  return m;
}

AngularInterval angular_profile(const ObjectBox3D& obj) {
  const Footprint fp = footprint_corners(obj);
  if (convex_contains(fp, Eigen::Vector2d::Zero())) throw Error("ego inside object");
  const double ref = std::atan2(fp[0].y(), fp[0].x());
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& c : fp) {
    const double off = wrap_angle(std::atan2(c.y(), c.x()) - ref);
    lo = std::min(lo, off);
    hi = std::max(hi, off);
  }
  return AngularInterval(ref + lo, hi - lo);
}

std::vector<std::size_t> depth_order(const Scene& scene) {
  std::vector<std::size_t> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> ranges(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranges[i] = range_to(scene.objects[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ranges[a] != ranges[b]) return ranges[a] < ranges[b];
    return scene.objects[a].id < scene.objects[b].id;
  });
  return order;
}

std::vector<OcclusionLabel> label_scene(const Scene& scene, double tau) {
  check_tau(tau);
  const auto order = depth_order(scene);
  std::vector<AngularInterval> profiles;
  profiles.reserve(scene.objects.size());
  for (const auto& o : scene.objects) profiles.push_back(angular_profile(o));

  std::vector<OcclusionLabel> labels;
  labels.reserve(order.size());
  AngleSet closer;
  std::size_t k = 0;
  while (k < order.size()) {
    // Group of objects sharing exactly the same range: none occludes another.
    const double r = range_to(scene.objects[order[k]]);
    std::size_t end = k;
    while (end < order.size() && range_to(scene.objects[order[end]]) == r) ++end;
    for (std::size_t g = k; g < end; ++g) {
      const auto idx = order[g];
      const auto& prof = profiles[idx];
      const double cov =
          prof.measure() > 0.0 ? std::clamp(closer.overlap(prof) / prof.measure(), 0.0, 1.0) : 0.0;
      labels.push_back({scene.objects[idx].id, cov >= tau, cov, static_cast<int>(g)});
    }
    for (std::size_t g = k; g < end; ++g) closer.add(profiles[order[g]]);
    k = end;
  }
  return labels;
}

std::optional<double> ray_hit_distance(const Footprint& poly, double bearing) {
  const Eigen::Vector2d d(std::cos(bearing), std::sin(bearing));
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d e = poly[(i + 1) % poly.size()] - a;
    const double denom = cross2(d, e);
    if (std::abs(denom) < 1e-15) continue;
    const double t = cross2(a, e) / denom;
    const double s = cross2(a, d) / denom;
    if (t > 0.0 && s >= 0.0 && s <= 1.0 && (!best || t < *best)) best = t;
  }
  return best;
}

std::vector<OcclusionLabel> ray_cast_oracle(const Scene& scene, int n_rays, double tau) {
  check_tau(tau);
  if (n_rays < 64) throw ConfigError("n_rays must be at least 64");
  const auto order = depth_order(scene);
  const std::size_t n = scene.objects.size();
  std::vector<Footprint> polys;
  std::vector<double> ranges;
  for (const auto& o : scene.objects) {
    polys.push_back(footprint_corners(o));
    ranges.push_back(range_to(o));
  }

  std::vector<OcclusionLabel> labels;
  labels.reserve(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const auto idx = order[rank];
    const AngularInterval prof = angular_profile(scene.objects[idx]);
    int blocked = 0;
    for (int i = 0; i < n_rays; ++i) {
      const double theta = prof.start() + (i + 0.5) / n_rays * prof.span();
      const double target = ray_hit_distance(polys[idx], theta).value_or(ranges[idx]);
      for (std::size_t j = 0; j < n; ++j) {
        if (!(ranges[j] < ranges[idx])) continue;
        const auto hit = ray_hit_distance(polys[j], theta);
        if (hit && *hit < target) {
          ++blocked;
          break;
        }
      }
    }
    const double cov = static_cast<double>(blocked) / n_rays;
    labels.push_back({scene.objects[idx].id, cov >= tau, cov, static_cast<int>(rank)});
  }
  return labels;
}

std::optional<std::size_t> primary_occluder(const Scene& scene, std::size_t target) {
  const double r = range_to(scene.objects[target]);
  const AngularInterval prof = angular_profile(scene.objects[target]);
  std::optional<std::size_t> best;
  double best_overlap = 0.0;
  for (const auto idx : depth_order(scene)) {
    if (!(range_to(scene.objects[idx]) < r)) break;
    AngleSet s;
    s.add(angular_profile(scene.objects[idx]));
    const double ov = s.overlap(prof);
    if (ov > best_overlap) {
      best_overlap = ov;
      best = idx;
    }
  }
  return best;
}

const OcclusionLabel* find_label(std::span<const OcclusionLabel> labels, std::string_view id) {
  auto it = std::find_if(labels.begin(), labels.end(),
                         [&](const OcclusionLabel& l) { return l.object_id == id; });
  return it == labels.end() ? nullptr : &*it;
}

}  // namespace coopsight
