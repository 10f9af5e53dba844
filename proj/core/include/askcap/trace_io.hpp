// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "askcap/engine.hpp"

namespace askcap {

std::string_view to_string(CaptionSource source);
std::optional<CaptionSource> parse_caption_source(std::string_view text);

/// GT captions handed to the learner (warmup data, give-ups, baselines).
struct TraceWrite {
  int scene_id = 0;
  std::string reason;  // warmup | give_up | equal_gt | all_gt
  std::vector<Caption> captions;
  bool charged = true;
};

struct TraceEval {
  int scene_id = 0;
  Caption caption;
};

/// Everything one round appends to the trace: interactions, GT writes and
/// the greedy evaluation captions of the retrained model.
struct RoundTrace {
  int round = 0;
  bool human = false;
  std::vector<Interaction> interactions;
  std::vector<TraceWrite> writes;
  std::vector<TraceEval> evals;
  nlohmann::json summary = nlohmann::json::object();
};

nlohmann::json interaction_to_json(const Interaction& it, const Vocabulary& vocab, bool human);
Interaction interaction_from_json(const nlohmann::json& j, const Vocabulary& vocab);

nlohmann::json stats_to_json(const RoundStats& s);
RoundStats stats_from_json(const nlohmann::json& j);

void write_round_trace(const std::filesystem::path& path, const RoundTrace& trace,
                       const Vocabulary& vocab);
RoundTrace read_round_trace(const std::filesystem::path& path, const Vocabulary& vocab);
/// All round_<k>.jsonl files of a trace directory, in round order.
std::vector<RoundTrace> read_trace_dir(const std::filesystem::path& dir, const Vocabulary& vocab);

/// Re-applies every recorded charge in order.
SupervisionLedger replay_ledger(std::span<const RoundTrace> rounds);
/// Collection and vocabulary statistics recomputed from a round's trace.
RoundStats replay_stats(const RoundTrace& trace, const Vocabulary& vocab);

}  // namespace askcap
