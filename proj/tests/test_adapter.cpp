// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <numbers>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "coopsight/adapter.hpp"
#include "oracles.hpp"

namespace coopsight {
namespace {

using MatD = Mat<double>;

AdapterConfig small_config(int channels = 4) {
  AdapterConfig cfg;
  cfg.in_channels = channels;
  cfg.stem_channels = 6;
  cfg.mlp_hidden = 8;
  cfg.d_model = 5;
  return cfg;
}

VoxelFeatureMap<double> random_map(int c, int h, int w, std::uint64_t seed) {
  const auto f = random_voxel_map(c, h, w, seed);
  VoxelFeatureMap<double> v(c, h, w);
  v.data = f.data.cast<double>();
  return v;
}

/// 3x3 stride-2 pad-1 convolution written as plain loops.
std::vector<double> naive_conv(const std::vector<double>& in, int c_in, int h, int w,
                               const MatD& weight, const Vec<double>& bias, int& ho, int& wo) {
  ho = (h - 1) / 2 + 1;
  wo = (w - 1) / 2 + 1;
  const int c_out = static_cast<int>(weight.rows());
  std::vector<double> out(static_cast<std::size_t>(c_out) * ho * wo, 0.0);
  for (int o = 0; o < c_out; ++o) {
    for (int y = 0; y < ho; ++y) {
      for (int x = 0; x < wo; ++x) {
        double acc = bias[o];
        for (int c = 0; c < c_in; ++c) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = 2 * y - 1 + ky;
              const int ix = 2 * x - 1 + kx;
              if (iy < 0 || ix < 0 || iy >= h || ix >= w) continue;
              acc += weight(o, c * 9 + ky * 3 + kx) * in[(std::size_t(c) * h + iy) * w + ix];
            }
          }
        }
        out[(std::size_t(o) * ho + y) * wo + x] = acc;
      }
    }
  }
  return out;
}

double naive_gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / std::numbers::pi) * (x + 0.044715 * x * x * x)));
}

MatD naive_forward(const VoxelFeatureMap<double>& v, const AdapterParams<double>& p) {
  std::vector<double> x(v.data.size());
  for (int c = 0; c < v.channels; ++c) {
    for (int y = 0; y < v.height; ++y) {
      for (int xx = 0; xx < v.width; ++xx) x[(std::size_t(c) * v.height + y) * v.width + xx] = v.at(c, y, xx);
    }
  }
  int h1, w1, h2, w2;
  auto a = naive_conv(x, v.channels, v.height, v.width, p.conv1_w, p.conv1_b, h1, w1);
  for (auto& e : a) e = naive_gelu(e);
  auto b = naive_conv(a, static_cast<int>(p.conv1_w.rows()), h1, w1, p.conv2_w, p.conv2_b, h2, w2);
  for (auto& e : b) e = naive_gelu(e);
  const int stem = static_cast<int>(p.conv2_w.rows());
  MatD out(h2 * w2, p.mlp2_w.rows());
  for (int t = 0; t < h2 * w2; ++t) {
    Vec<double> s(stem);
    for (int c = 0; c < stem; ++c) s[c] = b[std::size_t(c) * h2 * w2 + t];
    Vec<double> hdn = p.mlp1_w * s + p.mlp1_b;
    for (auto& e : hdn) e = naive_gelu(e);
    out.row(t) = (p.mlp2_w * hdn + p.mlp2_b).transpose();
  }
  return out;
}

TEST(Adapter, DefaultShape) {
  const AdapterConfig cfg;
  const auto params = AdapterParams<float>::random(cfg, 1);
  const auto v = random_voxel_map(64, 128, 128, 2);
  const Mat<float> tokens = project_features(v, params);
  EXPECT_EQ(tokens.rows(), 1024);
  EXPECT_EQ(tokens.cols(), 32);
  EXPECT_TRUE(tokens.allFinite());
}

TEST(Adapter, GridCompatibility) {
  for (int n = 120; n <= 132; ++n) EXPECT_EQ(grid_compatible(n), n >= 125 && n <= 128) << n;
  const auto cfg = small_config();
  const auto p = AdapterParams<double>::random(cfg, 3);
  for (const int bad : {124, 129}) {
    try {
      project_features(random_map(cfg.in_channels, bad, 128, 1), p);
      FAIL() << bad;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("incompatible grid"), std::string::npos);
    }
  }
  EXPECT_THROW(project_features(random_map(cfg.in_channels + 1, 128, 128, 1), p), ConfigError);
}

TEST(Adapter, MatchesNaiveLoops) {
  const auto cfg = small_config(3);
  const auto p = AdapterParams<double>::random(cfg, 9);
  for (const auto& [h, w] : {std::pair{128, 128}, std::pair{125, 127}}) {
    const auto v = random_map(3, h, w, 4);
    const MatD got = project_features(v, p);
    const MatD want = naive_forward(v, p);
    ASSERT_EQ(got.rows(), want.rows());
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12) << h << "x" << w;
  }
}

TEST(Adapter, ZeroInputZeroBiasesGivesZero) {
  const auto cfg = small_config();
  auto p = AdapterParams<double>::random(cfg, 5);
  p.zero_biases();
  const VoxelFeatureMap<double> v(cfg.in_channels, 128, 128);
  EXPECT_EQ(project_features(v, p).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adapter, StemIsLinear) {
  const auto cfg = small_config();
  auto p = AdapterParams<double>::random(cfg, 6);
  p.zero_biases();
  const auto a = random_map(cfg.in_channels, 126, 128, 1);
  const auto b = random_map(cfg.in_channels, 126, 128, 2);
  auto sum = a;
  sum.data = 1.5 * a.data - 0.75 * b.data;
  const MatD lhs = stem_preactivation(sum, p);
  const MatD rhs = 1.5 * stem_preactivation(a, p) - 0.75 * stem_preactivation(b, p);
  EXPECT_LE((lhs - rhs).norm() / rhs.norm(), 1e-6);
}

TEST(Adapter, ImpulseStaysInReceptiveField) {
  const auto cfg = small_config();
  auto p = AdapterParams<double>::random(cfg, 7);
  p.zero_biases();
  for (const auto& [h, w, y, x] : {std::tuple{128, 128, 0, 0}, std::tuple{128, 128, 64, 77},
                                   std::tuple{125, 127, 124, 126}, std::tuple{127, 126, 3, 60}}) {
    VoxelFeatureMap<double> v(cfg.in_channels, h, w);
    v.at(1, y, x) = 1.0;
    const MatD out = project_features(v, p);
    const auto allowed = oracle::receptive_tokens(y, x, h, w);
    const std::set<std::pair<int, int>> allowed_set(allowed.begin(), allowed.end());
    int responding = 0;
    for (int t = 0; t < kLidarTokens; ++t) {
      if (out.row(t).cwiseAbs().maxCoeff() == 0.0) continue;
      ++responding;
      EXPECT_TRUE(allowed_set.contains({t / kTokenGrid, t % kTokenGrid}))
          << "token " << t << " responds to (" << y << ", " << x << ")";
    }
    EXPECT_GT(responding, 0);
    EXPECT_LE(responding, static_cast<int>(allowed.size()));
  }
}

TEST(Adapter, JvpMatchesFiniteDifferences) {
  const auto cfg = small_config();
  const auto p = AdapterParams<double>::random(cfg, 8);
  const auto v = random_map(cfg.in_channels, 128, 125, 3);
  const auto dir = random_map(cfg.in_channels, 128, 125, 4);
  const double eps = 1e-5;
  auto plus = v;
  auto minus = v;
  plus.data += eps * dir.data;
  minus.data -= eps * dir.data;
  const MatD fd = (project_features(plus, p) - project_features(minus, p)) / (2 * eps);
  const MatD jvp = project_features_jvp(v, dir.data, p);
  EXPECT_LE((fd - jvp).norm() / jvp.norm(), 1e-4);
  EXPECT_THROW(project_features_jvp(v, MatD(MatD::Zero(2, 2)), p), ConfigError);
}

TEST(Adapter, DeterministicAndSeeded) {
  const auto cfg = small_config();
  const auto v = random_map(cfg.in_channels, 128, 128, 5);
  const auto a = AdapterParams<double>::random(cfg, 11);
  const auto b = AdapterParams<double>::random(cfg, 11);
  const auto c = AdapterParams<double>::random(cfg, 12);
  EXPECT_EQ(project_features(v, a), project_features(v, b));
  EXPECT_NE(a.conv1_w, c.conv1_w);
  const double bound = 1.0 / std::sqrt(cfg.in_channels * 9.0);
  EXPECT_LE(a.conv1_w.cwiseAbs().maxCoeff(), bound);
  EXPECT_LE(a.mlp2_w.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(double(cfg.mlp_hidden)));
}

TEST(Adapter, FloatTracksDouble) {
  const auto cfg = small_config();
  const auto pd = AdapterParams<double>::random(cfg, 13);
  const auto pf = pd.cast<float>();
  const auto vf = random_voxel_map(cfg.in_channels, 128, 128, 6);
  VoxelFeatureMap<double> vd(vf.channels, vf.height, vf.width);
  vd.data = vf.data.cast<double>();
  const MatD d = project_features(vd, pd);
  const MatD f = project_features(vf, pf).cast<double>();
  EXPECT_LE((d - f).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Assemble, BlocksAndOrder) {
  const MatD lidar = MatD::Random(kLidarTokens, 4);
  const auto none = assemble<double>(MatD(0, 4), lidar, MatD(0, 4));
  EXPECT_EQ(none.length(), 1024);
  ASSERT_EQ(none.blocks.size(), 3u);
  EXPECT_EQ(none.blocks[0].length, 0);

  const MatD image = MatD::Constant(5, 4, 1.0);
  const MatD text = MatD::Constant(7, 4, 2.0);
  const auto seq = assemble(image, lidar, text);
  EXPECT_EQ(seq.length(), 1036);
  EXPECT_EQ(seq.d_model(), 4);
  EXPECT_EQ(seq.blocks[1].kind, BlockKind::kLidar);
  EXPECT_EQ(seq.blocks[1].offset, 5);
  EXPECT_EQ(seq.blocks[2].offset, 1029);
  EXPECT_EQ(seq.tokens.topRows(5), image);
  EXPECT_EQ(seq.tokens.middleRows(5, 1024), lidar);
  EXPECT_EQ(seq.tokens.bottomRows(7), text);

  // Swapping image and text moves content, not just labels.
  const auto swapped = assemble<double>(text.topRows(5), lidar, MatD::Constant(7, 4, 1.0));
  EXPECT_NE(swapped.tokens, seq.tokens);
  EXPECT_EQ(to_string(BlockKind::kText), "text");
}

TEST(Assemble, WidthMismatchThrows) {
  const MatD lidar = MatD::Zero(kLidarTokens, 4);
  try {
    assemble<double>(MatD::Zero(2, 3), lidar, MatD::Zero(1, 4));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("d_model mismatch"), std::string::npos);
  }
  EXPECT_THROW(assemble<double>(MatD::Zero(2, 4), lidar, MatD::Zero(1, 5)), ConfigError);
}

class TensorFile : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "coopsight_tensor_test";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
  void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream(p, std::ios::binary) << bytes;
  }
  std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
};

TEST_F(TensorFile, RoundTrip) {
  const auto v = random_voxel_map(3, 5, 7, 1);
  write_tensor(dir / "t.cstn", v);
  const auto bytes = read_bytes(dir / "t.cstn");
  ASSERT_EQ(bytes.size(), 20u + 3 * 5 * 7 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "CSTN");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 5);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 7);
  const auto back = read_tensor(dir / "t.cstn");
  EXPECT_EQ(back.channels, 3);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.data, v.data);
  // Row-major C, H, W: the second value is channel 0, row 0, column 1.
  float second;
  std::memcpy(&second, bytes.data() + 24, 4);
  EXPECT_EQ(second, v.at(0, 0, 1));
}

TEST_F(TensorFile, Errors) {
  const auto v = random_voxel_map(2, 3, 3, 1);
  write_tensor(dir / "ok.cstn", v);
  const auto good = read_bytes(dir / "ok.cstn");

  auto expect_bad = [&](const std::string& bytes, const std::string& what) {
    write_bytes(dir / "bad.cstn", bytes);
    try {
      read_tensor(dir / "bad.cstn");
      ADD_FAILURE() << what;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(what), std::string::npos) << e.what();
    }
  };
  expect_bad("XXXX" + good.substr(4), "magic");
  std::string dtype = good;
  dtype[4] = 2;
  expect_bad(dtype, "dtype");
  expect_bad(good.substr(0, good.size() - 1), "truncated");
  expect_bad(good.substr(0, 10), "truncated");
  expect_bad(good + "x", "trailing");
  EXPECT_THROW(read_tensor(dir / "missing.cstn"), InputError);
}

TEST(AdapterChecks, AllPassOnRandomInput) {
  const auto cfg = small_config();
  const auto checks = run_adapter_checks(random_voxel_map(cfg.in_channels, 128, 128, 3), cfg, 4);
  ASSERT_EQ(checks.size(), 5u);
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

}  // namespace
}  // namespace coopsight
