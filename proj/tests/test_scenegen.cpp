// Copyright 2026 The CoopSight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "coopsight/occlusion.hpp"
#include "coopsight/scenegen.hpp"
#include "oracles.hpp"

namespace coopsight {
namespace {

GenConfig config(std::uint64_t seed, std::size_t n) {
  GenConfig cfg;
  cfg.seed = seed;
  cfg.n_scenes = n;
  return cfg;
}

TEST(Generate, DeterministicAndThreadIndependent) {
  const auto cfg = config(42, 40);
  const auto a = scenes_to_jsonl(generate(cfg, 1));
  EXPECT_EQ(a, scenes_to_jsonl(generate(cfg, 1)));
  EXPECT_EQ(a, scenes_to_jsonl(generate(cfg, 4)));
  EXPECT_NE(a, scenes_to_jsonl(generate(config(43, 40), 1)));
}

TEST(Generate, SceneStructure) {
  for (const auto& s : generate(config(1, 60))) {
    EXPECT_NO_THROW(s.validate());
    EXPECT_GE(s.objects.size(), 3u);
    EXPECT_LE(s.objects.size(), 10u);
    EXPECT_EQ(s.cameras.size(), 5u);
    EXPECT_NE(s.find_camera(kEgoSensorId), nullptr);
    for (const auto& o : s.objects) {
      EXPECT_GE(range_to(o), 4.0);
      EXPECT_LE(range_to(o), 100.0);
      bool visible = false;
      for (const auto& cam : s.cameras) visible = visible || project_box(o, cam).has_value();
      EXPECT_TRUE(visible) << s.scene_id << "/" << o.id;
    }
  }
}

TEST(Generate, FootprintsNeverIntersect) {
  for (const auto& s : generate(config(2, 100))) {
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto a = footprint_corners(s.objects[i]);
      const auto ego = ego_footprint();
      EXPECT_EQ(oracle::convex_intersection_area({a.begin(), a.end()}, {ego.begin(), ego.end()}), 0.0);
      for (std::size_t j = i + 1; j < s.objects.size(); ++j) {
        const auto b = footprint_corners(s.objects[j]);
        EXPECT_EQ(oracle::convex_intersection_area({a.begin(), a.end()}, {b.begin(), b.end()}), 0.0)
            << s.scene_id << " " << i << "," << j;
      }
    }
  }
}

TEST(Generate, FullBiasPlacesInShadow) {
  auto cfg = config(5, 100);
  cfg.objects_min = cfg.objects_max = 2;
  cfg.occluder_bias = 1.0;
  for (const auto& s : generate(cfg)) {
    ASSERT_EQ(s.objects.size(), 2u);
    const auto& first = s.objects[0];
    const auto& second = s.objects[1];
    const double bearing = std::atan2(second.center.y(), second.center.x());
    const auto hit = ray_hit_distance(footprint_corners(first), bearing);
    ASSERT_TRUE(hit) << s.scene_id;
    EXPECT_LT(*hit, range_to(second));
  }
}

TEST(Generate, SingleClassMix) {
  auto cfg = config(6, 30);
  cfg.class_mix = {{ObjectClass::kCar, 1.0}};
  for (const auto& s : generate(cfg)) {
    for (const auto& o : s.objects) EXPECT_EQ(o.class_label, ObjectClass::kCar);
  }
}

TEST(Generate, OccluderBiasControlsOcclusion) {
  std::vector<double> bias;
  std::vector<double> fraction;
  for (int b = 0; b <= 10; ++b) {
    auto cfg = config(0, 100);
    cfg.occluder_bias = b / 10.0;
    std::size_t occluded = 0;
    std::size_t total = 0;
    for (const auto& s : generate(cfg)) {
      for (const auto& l : label_scene(s)) {
        occluded += l.occluded;
        ++total;
      }
    }
    bias.push_back(cfg.occluder_bias);
    fraction.push_back(static_cast<double>(occluded) / total);
  }
  EXPECT_GT(oracle::spearman(bias, fraction), 0.9);
}

TEST(Generate, TooDenseThrows) {
  auto cfg = config(7, 1);
  cfg.objects_min = cfg.objects_max = 400;
  cfg.class_mix = {{ObjectClass::kBus, 1.0}};
  try {
    generate(cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "scene too dense");
  }
}

TEST(GenConfig, JsonRoundTripAndValidation) {
  GenConfig cfg;
  cfg.seed = 9;
  cfg.occluder_bias = 0.55;
  cfg.class_mix = {{ObjectClass::kVan, 0.5}, {ObjectClass::kBus, 0.5}};
  const auto back = gen_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  cfg.occluder_bias = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Apportion, LargestRemainder) {
  const std::array<double, 3> mix = {0.30, 0.30, 0.40};
  EXPECT_EQ(apportion(mix, 1000), (std::vector<std::size_t>{300, 300, 400}));
  EXPECT_EQ(apportion(mix, 7), (std::vector<std::size_t>{2, 2, 3}));
  const std::array<double, 3> thirds = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_EQ(apportion(thirds, 10), (std::vector<std::size_t>{4, 3, 3}));
}

TEST(Split, PercentagesAndNoLeakage) {
  const auto scenes = stratified_split(generate(config(3, 100)), {0.76, 0.13, 0.11});
  std::map<SplitTag, std::set<std::string>> by_split;
  for (const auto& s : scenes) by_split[s.split_tag].insert(s.scene_id);
  EXPECT_EQ(by_split[SplitTag::kTrain].size(), 76u);
  EXPECT_EQ(by_split[SplitTag::kVal].size(), 13u);
  EXPECT_EQ(by_split[SplitTag::kTest].size(), 11u);
  std::set<std::string> all;
  for (const auto& [tag, ids] : by_split) {
    for (const auto& id : ids) EXPECT_TRUE(all.insert(id).second) << id;
  }
  EXPECT_EQ(split_manifest(scenes).size(), 100u);
}

TEST(Split, AllTrainAndErrors) {
  const auto scenes = stratified_split(generate(config(3, 10)), {1.0, 0.0, 0.0});
  for (const auto& s : scenes) EXPECT_EQ(s.split_tag, SplitTag::kTrain);
  EXPECT_THROW(stratified_split(generate(config(3, 2)), {0.76, 0.13, 0.11}), ConfigError);
  EXPECT_THROW(stratified_split(generate(config(3, 10)), {0.5, 0.5, 0.5}), ConfigError);
}

TEST(Split, IndependentOfInputOrder) {
  auto scenes = generate(config(4, 50));
  const auto a = stratified_split(scenes, {0.76, 0.13, 0.11});
  std::reverse(scenes.begin(), scenes.end());
  const auto b = stratified_split(scenes, {0.76, 0.13, 0.11});
  EXPECT_EQ(split_manifest(a).dump(), split_manifest(std::vector<Scene>(b.rbegin(), b.rend())).dump());
}

}  // namespace
}  // namespace coopsight
