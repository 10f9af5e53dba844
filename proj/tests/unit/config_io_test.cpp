// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "askcap/config_io.hpp"
#include "test_util.hpp"

namespace askcap {
namespace {

TEST(ConfigIo, JsonRoundTripPreservesEveryField) {
  ExperimentConfig c;
  c.world.num_scenes = 321;
  c.world.synonym_fraction = 0.25;
  c.mode = StudentMode::kEqualGt;
  c.dm = DmStrategy::kMaxEntropy;
  c.h_percent = 80;
  c.train.lr = 0.02;
  c.train.ss_pos_every = 4;
  c.teacher.epsilon = 0.1;
  c.teacher.weights.w[static_cast<std::size_t>(Metric::kBleu1)] = 3.0;
  c.seed = 99;
  const auto j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
}

TEST(ConfigIo, YamlOverlaysDefaults) {
  const ExperimentConfig c = parse_config(
      "mode: mute\n"
      "train:\n"
      "  lr: 0.01\n"
      "teacher:\n"
      "  weights:\n"
      "    cider: 5\n");
  EXPECT_EQ(c.mode, StudentMode::kMute);
  EXPECT_DOUBLE_EQ(c.train.lr, 0.01);
  EXPECT_EQ(c.train.epochs, ExperimentConfig{}.train.epochs);
  EXPECT_DOUBLE_EQ(c.teacher.weights.w[static_cast<std::size_t>(Metric::kCider)], 5.0);
  EXPECT_DOUBLE_EQ(c.teacher.weights.w[static_cast<std::size_t>(Metric::kRougeL)], 100.0);
  EXPECT_EQ(config_to_json(parse_config("")), config_to_json(ExperimentConfig{}));
}

TEST(ConfigIo, ErrorsNameTheOffendingKey) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("colour: red\n").find("colour"), std::string::npos);
  EXPECT_NE(message("train:\n  lr: fast\n").find("lr"), std::string::npos);
  EXPECT_NE(message("mode: loud\n").find("mode"), std::string::npos);
  EXPECT_NE(message("teacher:\n  weights:\n    bleu9: 1\n").find("bleu9"), std::string::npos);
  EXPECT_NE(message("h_percent: 150\n"), "no error");
  EXPECT_NE(message("teacher:\n  epsilon: 2\n"), "no error");
  EXPECT_NE(message("teacher:\n  weights:\n    rouge: -1\n"), "no error");
}

TEST(ConfigIo, LoadsFilesAndRejectsMissingOnes) {
  const auto dir = testing::scratch_dir("config_io");
  std::ofstream(dir / "c.yaml") << "chunks: 2\nseed: 8\n";
  const ExperimentConfig c = load_config(dir / "c.yaml");
  EXPECT_EQ(c.chunks, 2);
  EXPECT_EQ(c.seed, 8u);
  EXPECT_THROW(load_config(dir / "missing.yaml"), ConfigError);
}

TEST(ConfigIo, ShippedConfigsAreValid) {
  for (const auto& entry : std::filesystem::directory_iterator(ASKCAP_CONFIG_DIR)) {
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW(load_config(entry.path()).validate());
  }
}

}  // namespace
}  // namespace askcap
