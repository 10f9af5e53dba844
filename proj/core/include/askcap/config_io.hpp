// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "askcap/engine.hpp"

namespace askcap {

/// Nested key/value view of every ExperimentConfig field (the manifest
/// snapshot and the schema accepted by config files).
nlohmann::json config_to_json(const ExperimentConfig& config);
/// Overlays `j` onto `base`. Unknown keys and ill-typed values throw
/// ConfigError naming the key.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

/// Parses a YAML (or JSON) config file; missing keys keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

MixWeights weights_from_json(const nlohmann::json& j, MixWeights base = MixWeights{});
nlohmann::json weights_to_json(const MixWeights& w);

}  // namespace askcap
