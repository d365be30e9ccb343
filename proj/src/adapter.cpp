// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsight/adapter.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "coopsight/io.hpp"

namespace coopsight {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'S', 'T', 'N'};

std::uint32_t load_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

void store_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

double rel_error(const Mat<double>& got, const Mat<double>& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

/// Token rows reachable from input row `r` through both stem convolutions.
std::pair<int, int> token_span(int r) {
  const int lo = r / 4;
  const int hi = std::min(kTokenGrid - 1, (r + 3) / 4);
  return {lo, hi};
}

}  // namespace

std::string_view to_string(BlockKind k) {
  switch (k) {
    case BlockKind::kImage:
      return "image";
    case BlockKind::kLidar:
      return "lidar";
    case BlockKind::kText:
      return "text";
  }
  return "?";
}

VoxelFeatureMap<float> read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::array<unsigned char, 20> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw InputError(path.string() + ": truncated tensor header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw InputError(path.string() + ": bad tensor magic");
  }
  if (load_u32(header.data() + 4) != kTensorF32) {
    throw InputError(path.string() + ": unsupported tensor dtype");
  }
  const auto c = load_u32(header.data() + 8);
  const auto h = load_u32(header.data() + 12);
  const auto w = load_u32(header.data() + 16);
  if (c == 0 || h == 0 || w == 0 || c > 1u << 16 || h > 1u << 16 || w > 1u << 16) {
    throw InputError(path.string() + fmt::format(": bad tensor shape {}x{}x{}", c, h, w));
  }
  VoxelFeatureMap<float> v(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  const std::size_t count = std::size_t(c) * h * w;
  std::vector<unsigned char> payload(count * 4);
  if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()))) {
    throw InputError(path.string() + ": truncated tensor payload");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw InputError(path.string() + ": trailing bytes after tensor payload");
  }
  const std::size_t hw = std::size_t(h) * w;
  for (std::size_t i = 0; i < count; ++i) {
    v.data(static_cast<Eigen::Index>(i / hw), static_cast<Eigen::Index>(i % hw)) =
        std::bit_cast<float>(load_u32(payload.data() + 4 * i));
  }
  return v;
}

void write_tensor(const std::filesystem::path& path, const VoxelFeatureMap<float>& v) {
  v.validate();
  std::vector<unsigned char> bytes(20 + v.data.size() * 4);
  std::memcpy(bytes.data(), kMagic.data(), kMagic.size());
  store_u32(bytes.data() + 4, kTensorF32);
  store_u32(bytes.data() + 8, static_cast<std::uint32_t>(v.channels));
  store_u32(bytes.data() + 12, static_cast<std::uint32_t>(v.height));
  store_u32(bytes.data() + 16, static_cast<std::uint32_t>(v.width));
  std::size_t i = 0;
  for (Eigen::Index c = 0; c < v.data.rows(); ++c) {
    for (Eigen::Index k = 0; k < v.data.cols(); ++k, ++i) {
      store_u32(bytes.data() + 20 + 4 * i, std::bit_cast<std::uint32_t>(v.data(c, k)));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

VoxelFeatureMap<float> random_voxel_map(int channels, int height, int width, std::uint64_t seed) {
  VoxelFeatureMap<float> v(channels, height, width);
  Rng rng(mix_seed(seed, 0x70e1));
  for (Eigen::Index c = 0; c < v.data.rows(); ++c) {
    for (Eigen::Index k = 0; k < v.data.cols(); ++k) v.data(c, k) = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  return v;
}

std::vector<AdapterCheck> run_adapter_checks(const VoxelFeatureMap<float>& input,
                                             const AdapterConfig& cfg, std::uint64_t seed) {
  VoxelFeatureMap<double> v(input.channels, input.height, input.width);
  v.data = input.data.cast<double>();
  const auto params = AdapterParams<double>::random(cfg, seed);
  std::vector<AdapterCheck> checks;

  const Mat<double> tokens = project_features(v, params);
  const Mat<double> image = Mat<double>::Zero(5, cfg.d_model);
  const Mat<double> text = Mat<double>::Zero(7, cfg.d_model);
  const auto seq = assemble(image, tokens, text);
  checks.push_back({"shape", tokens.rows() == kLidarTokens && seq.length() == 5 + kLidarTokens + 7,
                    fmt::format("tokens {}x{}, sequence {}x{}", tokens.rows(), tokens.cols(),
                                seq.length(), seq.d_model())});

  const Mat<double> again = project_features(v, params);
  checks.push_back({"determinism", again == tokens, "repeat forward pass bit-identical"});

  auto unbiased = params;
  unbiased.zero_biases();
  VoxelFeatureMap<double> scaled = v;
  scaled.data *= 2.5;
  const double lin = rel_error(stem_preactivation(scaled, unbiased), 2.5 * stem_preactivation(v, unbiased));
  checks.push_back({"linearity", lin <= 1e-6, fmt::format("relative error {:.3e}", lin)});

  VoxelFeatureMap<double> impulse(v.channels, v.height, v.width);
  const int iy = v.height / 2;
  const int ix = v.width / 2;
  impulse.at(0, iy, ix) = 1.0;
  const Mat<double> response = project_features(impulse, unbiased);
  const auto [ylo, yhi] = token_span(iy);
  const auto [xlo, xhi] = token_span(ix);
  std::size_t outside = 0;
  for (int t = 0; t < kLidarTokens; ++t) {
    const int ty = t / kTokenGrid;
    const int tx = t % kTokenGrid;
    const bool inside = ty >= ylo && ty <= yhi && tx >= xlo && tx <= xhi;
    if (!inside && response.row(t).cwiseAbs().maxCoeff() != 0.0) ++outside;
  }
  checks.push_back({"locality", outside == 0,
                    fmt::format("impulse at ({}, {}): {} tokens respond outside rows {}-{}, cols {}-{}",
                                iy, ix, outside, ylo, yhi, xlo, xhi)});

  Rng rng(mix_seed(seed, 0xd1f));
  Mat<double> dv(v.data.rows(), v.data.cols());
  for (Eigen::Index i = 0; i < dv.size(); ++i) dv.data()[i] = rng.uniform(-1.0, 1.0);
  const double eps = 1e-5;
  VoxelFeatureMap<double> plus = v;
  VoxelFeatureMap<double> minus = v;
  plus.data += eps * dv;
  minus.data -= eps * dv;
  const Mat<double> fd = (project_features(plus, params) - project_features(minus, params)) / (2 * eps);
  const double jvp = rel_error(fd, project_features_jvp(v, dv, params));
  checks.push_back({"jvp", jvp <= 1e-4, fmt::format("relative error {:.3e}", jvp)});
  return checks;
}

}  // namespace coopsight
