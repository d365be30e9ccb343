// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations used as test oracles. None of them call
// the library routine they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "coopsight/projection.hpp"
#include "coopsight/qra.hpp"
#include "coopsight/scene.hpp"

namespace coopsight::oracle {

/// Projects each corner with explicit arithmetic; edges crossing the near plane
/// contribute their crossing point.
inline std::optional<Bbox2D> corner_hull(const ObjectBox3D& b, const CameraModel& cam) {
  struct P {
    double x, y, z;
    int sx, sy, sz;
  };
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  std::vector<P> pts;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        const double lx = sx * b.dims.x() / 2;
        const double ly = sy * b.dims.y() / 2;
        const double wx = b.center.x() + c * lx - s * ly;
        const double wy = b.center.y() + s * lx + c * ly;
        const double wz = b.center.z() + sz * b.dims.z() / 2;
        const auto& R = cam.rotation;
        const auto& t = cam.translation;
        pts.push_back({R(0, 0) * wx + R(0, 1) * wy + R(0, 2) * wz + t.x(),
                       R(1, 0) * wx + R(1, 1) * wy + R(1, 2) * wz + t.y(),
                       R(2, 0) * wx + R(2, 1) * wy + R(2, 2) * wz + t.z(), sx, sy, sz});
      }
    }
  }
  const double near = 0.1;
  std::vector<std::pair<double, double>> uv;
  const auto proj = [&](double x, double y, double z) {
    uv.emplace_back(cam.fx() * x / z + cam.cx(), cam.fy() * y / z + cam.cy());
  };
  for (const auto& p : pts) {
    if (p.z >= near) proj(p.x, p.y, p.z);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const auto& a = pts[i];
      const auto& q = pts[j];
      const int diff = (a.sx != q.sx) + (a.sy != q.sy) + (a.sz != q.sz);
      if (diff != 1 || (a.z >= near) == (q.z >= near)) continue;
      const double t = (near - a.z) / (q.z - a.z);
      proj(a.x + t * (q.x - a.x), a.y + t * (q.y - a.y), near);
    }
  }
  if (uv.empty()) return std::nullopt;
  Bbox2D h{uv[0].first, uv[0].second, uv[0].first, uv[0].second};
  for (const auto& [u, v] : uv) {
    h.x_min = std::min(h.x_min, u);
    h.y_min = std::min(h.y_min, v);
    h.x_max = std::max(h.x_max, u);
    h.y_max = std::max(h.y_max, v);
  }
  return h;
}

inline Bbox2D random_bbox(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pos(0, 300);
  std::uniform_real_distribution<double> size(40, 200);
  const double x = pos(gen);
  const double y = pos(gen);
  return {x, y, x + size(gen), y + size(gen)};
}

/// IoU by counting sample points inside each box: `subdiv` x `subdiv`
/// cell centers per unit pixel.
inline double raster_iou(const Bbox2D& a, const Bbox2D& b, int subdiv = 1) {
  const auto inside = [](const Bbox2D& r, double x, double y) {
    return x >= r.x_min && x < r.x_max && y >= r.y_min && y < r.y_max;
  };
  const double step = 1.0 / subdiv;
  const int x0 = static_cast<int>(std::floor(std::min(a.x_min, b.x_min)));
  const int y0 = static_cast<int>(std::floor(std::min(a.y_min, b.y_min)));
  const int nx = static_cast<int>(std::ceil(std::max(a.x_max, b.x_max))) - x0;
  const int ny = static_cast<int>(std::ceil(std::max(a.y_max, b.y_max))) - y0;
  long inter = 0;
  long uni = 0;
  for (int j = 0; j < ny * subdiv; ++j) {
    const double y = y0 + (j + 0.5) * step;
    for (int i = 0; i < nx * subdiv; ++i) {
      const double x = x0 + (i + 0.5) * step;
      const bool ia = inside(a, x, y);
      const bool ib = inside(b, x, y);
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

struct BruteMatch {
  std::size_t pairs = 0;
  double cost = 0.0;
};

/// Enumerates every partial one-to-one assignment; keeps the most pairs, then
/// the least summed error.
inline BruteMatch brute_force_match(const std::vector<GroundedObject>& preds,
                                    const std::vector<std::pair<ObjectClass, double>>& gt,
                                    double gate) {
  BruteMatch best;
  bool have = false;
  std::vector<bool> used(gt.size(), false);
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t i, std::size_t n,
                                                                  double cost) {
    if (i == preds.size()) {
      if (!have || n > best.pairs || (n == best.pairs && cost < best.cost)) {
        best = {n, cost};
        have = true;
      }
      return;
    }
    rec(i + 1, n, cost);
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (used[k] || gt[k].first != preds[i].type) continue;
      const double e = std::abs(preds[i].distance_m - gt[k].second);
      if (e > gate) continue;
      used[k] = true;
      rec(i + 1, n + 1, cost + e);
      used[k] = false;
    }
  };
  rec(0, 0, 0.0);
  return best;
}

/// Token rows and columns whose two-convolution receptive field covers input
/// pixel (row, col), by enumerating every kernel offset of both layers.
inline std::vector<std::pair<int, int>> receptive_tokens(int row, int col, int h, int w) {
  const auto out = [](int n) { return (n + 2 - 3) / 2 + 1; };
  const int h1 = out(h), w1 = out(w), h2 = out(h1), w2 = out(w1);
  std::vector<std::pair<int, int>> tokens;
  for (int ty = 0; ty < h2; ++ty) {
    for (int tx = 0; tx < w2; ++tx) {
      bool hit = false;
      for (int a = 0; a < 3 && !hit; ++a) {
        for (int b = 0; b < 3 && !hit; ++b) {
          const int my = 2 * ty - 1 + a;
          const int mx = 2 * tx - 1 + b;
          if (my < 0 || mx < 0 || my >= h1 || mx >= w1) continue;
          for (int c = 0; c < 3 && !hit; ++c) {
            for (int d = 0; d < 3 && !hit; ++d) {
              hit = 2 * my - 1 + c == row && 2 * mx - 1 + d == col;
            }
          }
        }
      }
      if (hit) tokens.emplace_back(ty, tx);
    }
  }
  return tokens;
}

/// Area of the intersection of two convex counter-clockwise polygons
/// (Sutherland-Hodgman clipping).
inline double convex_intersection_area(const std::vector<Eigen::Vector2d>& subject,
                                       const std::vector<Eigen::Vector2d>& clip) {
  std::vector<Eigen::Vector2d> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Eigen::Vector2d a = clip[i];
    const Eigen::Vector2d b = clip[(i + 1) % clip.size()];
    const auto side = [&](const Eigen::Vector2d& p) {
      return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    };
    std::vector<Eigen::Vector2d> in = std::move(out);
    out.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Eigen::Vector2d p = in[k];
      const Eigen::Vector2d q = in[(k + 1) % in.size()];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) out.push_back(p + (q - p) * (sp / (sp - sq)));
    }
  }
  double area = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& p = out[k];
    const auto& q = out[(k + 1) % out.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return std::abs(area) / 2;
}

/// Spearman rank correlation without tie handling.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace coopsight::oracle
