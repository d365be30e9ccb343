// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopsight/scene.hpp"

namespace coopsight {

/// Closed angular range [lo, hi] with -pi <= lo <= hi <= pi.
struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
  double measure() const { return hi - lo; }
};

/// Angular profile of one object seen from the ego origin: the arc starting at
/// `start` and sweeping `span` radians counter-clockwise, stored as up to two
/// non-wrapping pieces.
class AngularInterval {
 public:
  AngularInterval() = default;
  /// `start` is wrapped into [-pi, pi); `span` must lie in [0, 2pi).
  AngularInterval(double start, double span);

  double start() const { return start_; }
  double span() const { return span_; }
  double measure() const { return span_; }
  const std::vector<AngleRange>& pieces() const { return pieces_; }

  /// True when the bearing (any real angle) lies on the arc.
  bool contains(double bearing, double eps = 1e-12) const;

 private:
  double start_ = 0.0;
  double span_ = 0.0;
  std::vector<AngleRange> pieces_;
};

/// Union of angular ranges, kept sorted and disjoint by an endpoint sweep.
class AngleSet {
 public:
  void add(const AngularInterval& interval);
  void add(const AngleRange& range);

  const std::vector<AngleRange>& ranges() const { return ranges_; }
  double measure() const;
  /// Measure of `interval` intersected with this set.
  double overlap(const AngularInterval& interval) const;

 private:
  std::vector<AngleRange> ranges_;
};

/// Minimal arc (< pi) covering the bearings of the four footprint corners.
/// Throws Error("ego inside object") when the origin is not strictly outside.
AngularInterval angular_profile(const ObjectBox3D& obj);

struct OcclusionLabel {
  std::string object_id;
  bool occluded = false;
  double coverage = 0.0;
  int depth_rank = 0;
};

inline constexpr double kDefaultTau = 0.7;

/// Near-to-far order by ground range, ties broken by id.
std::vector<std::size_t> depth_order(const Scene& scene);

/// BEV angular heuristic: labels in near-to-far order. Objects at exactly the
/// same range never occlude each other.
std::vector<OcclusionLabel> label_scene(const Scene& scene, double tau = kDefaultTau);

/// Sampled verifier: `n_rays` rays spread across each object's profile; a ray
/// is blocked when a strictly closer footprint is hit before the target.
std::vector<OcclusionLabel> ray_cast_oracle(const Scene& scene, int n_rays,
                                            double tau = kDefaultTau);

/// Strictly closer object whose profile overlaps the target's the most.
std::optional<std::size_t> primary_occluder(const Scene& scene, std::size_t target);

/// Distance along the unit ray at `bearing` to the first footprint edge, if hit.
std::optional<double> ray_hit_distance(const Footprint& poly, double bearing);

const OcclusionLabel* find_label(std::span<const OcclusionLabel> labels, std::string_view id);

}  // namespace coopsight
