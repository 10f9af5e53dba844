// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "askcap/engine.hpp"

namespace askcap {

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

}  // namespace

void collection_stats(std::span<const Interaction> buffer, const Vocabulary& vocab, RoundStats& out) {
  int asked = 0;
  std::array<int, 3> hits{};
  constexpr std::array<std::size_t, 3> kDepth = {3, 5, 10};
  out.answer_pos_hist.fill(0);
  std::set<int> asking_scenes, improved_scenes;
  double reward_sum = 0.0;
  for (const auto& it : buffer) {
    reward_sum += it.best().reward;
    const bool asked_any = std::any_of(it.asks.begin(), it.asks.end(),
                                       [](const AskRecord& a) { return a.question.has_value(); });
    if (!asked_any) continue;
    asking_scenes.insert(it.scene_id);
    if (it.improved()) improved_scenes.insert(it.scene_id);
    for (const auto& a : it.asks) {
      if (!a.question) continue;
      ++asked;
      ++out.answer_pos_hist[static_cast<std::size_t>(vocab.pos(a.answer))];
      for (std::size_t k = 0; k < kDepth.size(); ++k) {
        const std::size_t n = std::min(kDepth[k], a.top10.size());
        for (std::size_t i = 0; i < n; ++i) {
          if (a.top10[i].first == a.answer) {
            ++hits[k];
            break;
          }
        }
      }
    }
  }
  out.questions_asked = asked;
  if (asked > 0) {
    out.atop3 = 100.0 * hits[0] / asked;
    out.atop5 = 100.0 * hits[1] / asked;
    out.atop10 = 100.0 * hits[2] / asked;
  } else {
    out.atop3 = out.atop5 = out.atop10 = std::nullopt;
  }
  if (!asking_scenes.empty()) {
    out.improved_pct = 100.0 * static_cast<double>(improved_scenes.size()) /
                       static_cast<double>(asking_scenes.size());
  } else {
    out.improved_pct = std::nullopt;
  }
  out.mean_collected_reward =
      buffer.empty() ? std::nullopt : std::optional<double>(reward_sum / static_cast<double>(buffer.size()));
}

void vocabulary_stats(std::span<const Caption> eval_captions, RoundStats& out) {
  std::set<WordId> nouns, verbs, adjs;
  for (const auto& c : eval_captions) {
    for (std::size_t i = 0; i < c.tokens.size(); ++i) {
      switch (c.pos[i]) {
        case Pos::kNoun: nouns.insert(c.tokens[i]); break;
        case Pos::kVerb: verbs.insert(c.tokens[i]); break;
        case Pos::kAdj: adjs.insert(c.tokens[i]); break;
        default: break;
      }
    }
  }
  out.uniq_nouns = static_cast<int>(nouns.size());
  out.uniq_verbs = static_cast<int>(verbs.size());
  out.uniq_adjs = static_cast<int>(adjs.size());
}

std::vector<std::string> results_header() {
  return {"round", "mode", "seed", "mix", "cider", "bleu4", "rouge", "meteor",
          "supervision_total", "gt_captions_used", "atop3", "atop5", "atop10", "improved_pct",
          "uniq_nouns", "uniq_verbs", "uniq_adjs"};
}

std::vector<std::string> results_row(const RoundStats& s) {
  return {std::to_string(s.round), s.mode, std::to_string(s.seed), fixed(s.mix), fixed(s.cider),
          fixed(s.bleu4), fixed(s.rouge), fixed(s.meteor), fixed(s.supervision_total),
          std::to_string(s.gt_captions_used), fixed(s.atop3), fixed(s.atop5), fixed(s.atop10),
          fixed(s.improved_pct), std::to_string(s.uniq_nouns), std::to_string(s.uniq_verbs),
          std::to_string(s.uniq_adjs)};
}

void write_results_csv(const std::filesystem::path& path, std::span<const RoundStats> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(results_header());
  for (const auto& r : rows) line(results_row(r));
}

}  // namespace askcap
