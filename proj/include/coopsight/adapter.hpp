// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "coopsight/random.hpp"
#include "coopsight/scene.hpp"

namespace coopsight {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr int kTokenGrid = 32;
inline constexpr int kLidarTokens = kTokenGrid * kTokenGrid;

/// C x H x W map stored as a C x (H*W) matrix; column y*W + x.
template <typename Scalar>
struct VoxelFeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  Mat<Scalar> data;

  VoxelFeatureMap() = default;
  VoxelFeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w), data(Mat<Scalar>::Zero(c, Eigen::Index(h) * w)) {}

  Scalar& at(int c, int y, int x) { return data(c, Eigen::Index(y) * width + x); }
  Scalar at(int c, int y, int x) const { return data(c, Eigen::Index(y) * width + x); }

  void validate() const {
    if (channels <= 0 || height <= 0 || width <= 0) throw ConfigError("voxel map shape must be positive");
    if (data.rows() != channels || data.cols() != Eigen::Index(height) * width) {
      throw ConfigError("voxel map data does not match its shape");
    }
    if (!data.allFinite()) throw ConfigError("voxel map has non-finite entries");
  }
};

struct AdapterConfig {
  int in_channels = 64;
  int stem_channels = 32;
  int mlp_hidden = 64;
  int d_model = 32;

  void validate() const {
    if (in_channels <= 0 || stem_channels <= 0 || mlp_hidden <= 0 || d_model <= 0) {
      throw ConfigError("adapter dimensions must be positive");
    }
  }
};

/// Output size of a 3x3, stride-2, pad-1 convolution.
constexpr int stem_out(int n) { return (n - 1) / 2 + 1; }

/// True when two stem convolutions reduce n to the token grid.
constexpr bool grid_compatible(int n) { return n > 0 && stem_out(stem_out(n)) == kTokenGrid; }

template <typename Scalar>
struct AdapterParams {
  Mat<Scalar> conv1_w;  // stem x (C*9), column c*9 + ky*3 + kx
  Vec<Scalar> conv1_b;
  Mat<Scalar> conv2_w;  // stem x (stem*9)
  Vec<Scalar> conv2_b;
  Mat<Scalar> mlp1_w;  // hidden x stem
  Vec<Scalar> mlp1_b;
  Mat<Scalar> mlp2_w;  // d_model x hidden
  Vec<Scalar> mlp2_b;

  int in_channels() const { return static_cast<int>(conv1_w.cols() / 9); }
  int d_model() const { return static_cast<int>(mlp2_w.rows()); }

  /// Every weight and bias uniform in +-1/sqrt(fan_in).
  static AdapterParams random(const AdapterConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(mix_seed(seed, 0xada));
    AdapterParams p;
    const auto fill = [&rng](Mat<Scalar>& w, Vec<Scalar>& b, int rows, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      w.resize(rows, fan_in);
      b.resize(rows);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = Scalar(rng.uniform(-bound, bound));
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = Scalar(rng.uniform(-bound, bound));
    };
    fill(p.conv1_w, p.conv1_b, cfg.stem_channels, cfg.in_channels * 9);
    fill(p.conv2_w, p.conv2_b, cfg.stem_channels, cfg.stem_channels * 9);
    fill(p.mlp1_w, p.mlp1_b, cfg.mlp_hidden, cfg.stem_channels);
    fill(p.mlp2_w, p.mlp2_b, cfg.d_model, cfg.mlp_hidden);
    return p;
  }

  void zero_biases() {
    conv1_b.setZero();
    conv2_b.setZero();
    mlp1_b.setZero();
    mlp2_b.setZero();
  }

  void validate() const {
    const auto stem = conv1_w.rows();
    const bool shapes = conv1_w.cols() % 9 == 0 && conv1_b.size() == stem && conv2_w.rows() == stem &&
                        conv2_w.cols() == stem * 9 && conv2_b.size() == stem &&
                        mlp1_w.cols() == stem && mlp1_b.size() == mlp1_w.rows() &&
                        mlp2_w.cols() == mlp1_w.rows() && mlp2_b.size() == mlp2_w.rows();
    if (!shapes) throw ConfigError("adapter parameter shapes are inconsistent");
    const bool finite = conv1_w.allFinite() && conv1_b.allFinite() && conv2_w.allFinite() &&
                        conv2_b.allFinite() && mlp1_w.allFinite() && mlp1_b.allFinite() &&
                        mlp2_w.allFinite() && mlp2_b.allFinite();
    if (!finite) throw ConfigError("adapter parameters must be finite");
  }

  template <typename Other>
  AdapterParams<Other> cast() const {
    AdapterParams<Other> o;
    o.conv1_w = conv1_w.template cast<Other>();
    o.conv1_b = conv1_b.template cast<Other>();
    o.conv2_w = conv2_w.template cast<Other>();
    o.conv2_b = conv2_b.template cast<Other>();
    o.mlp1_w = mlp1_w.template cast<Other>();
    o.mlp1_b = mlp1_b.template cast<Other>();
    o.mlp2_w = mlp2_w.template cast<Other>();
    o.mlp2_b = mlp2_b.template cast<Other>();
    return o;
  }
};

namespace detail {

/// GELU, tanh form.
template <typename Scalar>
Scalar gelu(Scalar x) {
  const Scalar k = Scalar(0.7978845608028654);
  const Scalar t = std::tanh(k * (x + Scalar(0.044715) * x * x * x));
  return Scalar(0.5) * x * (Scalar(1) + t);
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar k = Scalar(0.7978845608028654);
  const Scalar t = std::tanh(k * (x + Scalar(0.044715) * x * x * x));
  return Scalar(0.5) * (Scalar(1) + t) +
         Scalar(0.5) * x * (Scalar(1) - t * t) * k * (Scalar(1) + Scalar(3 * 0.044715) * x * x);
}

/// Patch matrix of a 3x3 stride-2 pad-1 convolution: (C*9) x (Ho*Wo).
template <typename Scalar>
Mat<Scalar> im2col(const Mat<Scalar>& x, int channels, int h, int w) {
  const int ho = stem_out(h);
  const int wo = stem_out(w);
  Mat<Scalar> col = Mat<Scalar>::Zero(Eigen::Index(channels) * 9, Eigen::Index(ho) * wo);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const Eigen::Index out = Eigen::Index(oy) * wo + ox;
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = 2 * oy - 1 + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = 2 * ox - 1 + kx;
          if (ix < 0 || ix >= w) continue;
          const Eigen::Index in = Eigen::Index(iy) * w + ix;
          for (int c = 0; c < channels; ++c) col(Eigen::Index(c) * 9 + ky * 3 + kx, out) = x(c, in);
        }
      }
    }
  }
  return col;
}

template <typename Scalar>
void check_input(const VoxelFeatureMap<Scalar>& v, const AdapterParams<Scalar>& p) {
  v.validate();
  p.validate();
  if (v.channels != p.in_channels()) throw ConfigError("voxel channels do not match adapter");
  if (!grid_compatible(v.height) || !grid_compatible(v.width)) {
    throw ConfigError("incompatible grid: " + std::to_string(v.height) + "x" +
                      std::to_string(v.width) + " does not reduce to 32x32");
  }
}

}  // namespace detail

/// First-convolution pre-activation, stem x (H1*W1).
template <typename Scalar>
Mat<Scalar> stem_preactivation(const VoxelFeatureMap<Scalar>& v, const AdapterParams<Scalar>& p) {
  detail::check_input(v, p);
  Mat<Scalar> z = p.conv1_w * detail::im2col(v.data, v.channels, v.height, v.width);
  z.colwise() += p.conv1_b;
  return z;
}

/// Lidar token block, N x d_model; token t is grid cell (t / 32, t % 32).
template <typename Scalar>
Mat<Scalar> project_features(const VoxelFeatureMap<Scalar>& v, const AdapterParams<Scalar>& p) {
  const Mat<Scalar> z1 = stem_preactivation(v, p);
  const int h1 = stem_out(v.height);
  const int w1 = stem_out(v.width);
  const auto stem = static_cast<int>(z1.rows());
  const Mat<Scalar> a1 = z1.unaryExpr(&detail::gelu<Scalar>);
  Mat<Scalar> z2 = p.conv2_w * detail::im2col(a1, stem, h1, w1);
  z2.colwise() += p.conv2_b;
  Mat<Scalar> z3 = p.mlp1_w * z2.unaryExpr(&detail::gelu<Scalar>);
  z3.colwise() += p.mlp1_b;
  Mat<Scalar> out = p.mlp2_w * z3.unaryExpr(&detail::gelu<Scalar>);
  out.colwise() += p.mlp2_b;
  return out.transpose();
}

/// Forward-mode derivative of project_features along `dv`.
template <typename Scalar>
Mat<Scalar> project_features_jvp(const VoxelFeatureMap<Scalar>& v, const Mat<Scalar>& dv,
                                 const AdapterParams<Scalar>& p) {
  const Mat<Scalar> z1 = stem_preactivation(v, p);
  if (dv.rows() != v.data.rows() || dv.cols() != v.data.cols()) {
    throw ConfigError("tangent shape does not match voxel map");
  }
  const int h1 = stem_out(v.height);
  const int w1 = stem_out(v.width);
  const auto stem = static_cast<int>(z1.rows());
  const Mat<Scalar> dz1 = p.conv1_w * detail::im2col(dv, v.channels, v.height, v.width);
  const Mat<Scalar> a1 = z1.unaryExpr(&detail::gelu<Scalar>);
  const Mat<Scalar> da1 = z1.unaryExpr(&detail::gelu_grad<Scalar>).cwiseProduct(dz1);
  Mat<Scalar> z2 = p.conv2_w * detail::im2col(a1, stem, h1, w1);
  z2.colwise() += p.conv2_b;
  const Mat<Scalar> dz2 = p.conv2_w * detail::im2col(da1, stem, h1, w1);
  Mat<Scalar> z3 = p.mlp1_w * z2.unaryExpr(&detail::gelu<Scalar>);
  z3.colwise() += p.mlp1_b;
  const Mat<Scalar> dz3 = p.mlp1_w * z2.unaryExpr(&detail::gelu_grad<Scalar>).cwiseProduct(dz2);
  const Mat<Scalar> dout = p.mlp2_w * z3.unaryExpr(&detail::gelu_grad<Scalar>).cwiseProduct(dz3);
  return dout.transpose();
}

enum class BlockKind { kImage, kLidar, kText };
std::string_view to_string(BlockKind k);

struct TokenBlock {
  BlockKind kind = BlockKind::kImage;
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

template <typename Scalar>
struct TokenSequence {
  Mat<Scalar> tokens;  // length x d_model
  std::vector<TokenBlock> blocks;

  Eigen::Index length() const { return tokens.rows(); }
  Eigen::Index d_model() const { return tokens.cols(); }
};

/// Image, lidar and text blocks concatenated in that order.
template <typename Scalar>
TokenSequence<Scalar> assemble(const Mat<Scalar>& image, const Mat<Scalar>& lidar,
                               const Mat<Scalar>& text) {
  const Eigen::Index d = lidar.cols();
  if (image.cols() != d || text.cols() != d) {
    throw ConfigError("d_model mismatch: image " + std::to_string(image.cols()) + ", lidar " +
                      std::to_string(d) + ", text " + std::to_string(text.cols()));
  }
  TokenSequence<Scalar> seq;
  seq.tokens.resize(image.rows() + lidar.rows() + text.rows(), d);
  seq.tokens << image, lidar, text;
  seq.blocks = {{BlockKind::kImage, 0, image.rows()},
                {BlockKind::kLidar, image.rows(), lidar.rows()},
                {BlockKind::kText, image.rows() + lidar.rows(), text.rows()}};
  return seq;
}

// ---------------------------------------------------------------------------
// Tensor files: "CSTN", u32 dtype (1 = f32), u32 C, H, W, then C*H*W f32
// row-major; all little-endian.

inline constexpr std::uint32_t kTensorF32 = 1;

VoxelFeatureMap<float> read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const VoxelFeatureMap<float>& v);

/// Entries uniform in [-1, 1).
VoxelFeatureMap<float> random_voxel_map(int channels, int height, int width, std::uint64_t seed);

struct AdapterCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Shape law, determinism, stem linearity, impulse locality and the
/// finite-difference derivative check on one voxel map.
std::vector<AdapterCheck> run_adapter_checks(const VoxelFeatureMap<float>& v,
                                             const AdapterConfig& cfg, std::uint64_t seed);

}  // namespace coopsight
