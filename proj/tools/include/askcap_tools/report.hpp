// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace askcap::report {

/// Metrics aggregated per (mode, round).
const std::vector<std::string>& metric_columns();

/// Round summaries found under `root`, one per round_<k>.jsonl file. Files
/// are visited in lexicographic path order.
std::vector<nlohmann::json> collect_summaries(const std::filesystem::path& root);

/// Linear-interpolation quantile of sorted values (numpy's default).
double quantile(const std::vector<double>& sorted, double q);

struct Cell {
  std::optional<double> median, q1, q3;
};

struct Row {
  std::string mode;
  int round = 0;
  int runs = 0;
  std::vector<Cell> cells;  // aligned with metric_columns()
};

std::vector<Row> aggregate(const std::vector<nlohmann::json>& summaries);

std::vector<std::string> header();
void write_csv(const std::filesystem::path& path, const std::vector<Row>& rows);

/// Median-per-mode line charts: Mix against round and against supervision.
void write_svg_reward_by_round(const std::filesystem::path& path, const std::vector<Row>& rows);
void write_svg_mix_by_supervision(const std::filesystem::path& path, const std::vector<Row>& rows);

}  // namespace askcap::report
