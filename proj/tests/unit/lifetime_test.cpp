// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "askcap/checkpoint.hpp"
#include "askcap/engine.hpp"
#include "askcap/trace_io.hpp"
#include "test_util.hpp"

namespace askcap {
namespace {

ExperimentConfig tiny(StudentMode mode = StudentMode::kInquisitive) {
  ExperimentConfig c;
  c.world.num_scenes = 60;
  c.eval_scenes = 10;
  c.warmup_fraction = 0.2;
  c.chunks = 2;
  c.passes_inquisitive = 2;
  c.passes_mute = 2;
  c.train.epochs = 3;
  c.train.width = 12;
  c.train.lr = 0.01;
  c.dm_lr = 1e-3;
  c.mode = mode;
  c.seed = 3;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunOptions to_dir(const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  RunOptions o;
  o.out_dir = dir;
  return o;
}

TEST(Lifetime, DeterministicResultsCsv) {
  const auto root = testing::scratch_dir("lifetime_det");
  const auto a = run_lifetime(tiny(), to_dir(root / "a"));
  const auto b = run_lifetime(tiny(), to_dir(root / "b"));
  ASSERT_EQ(a.rounds.size(), 3u);
  EXPECT_EQ(a.rounds, b.rounds);
  EXPECT_EQ(slurp(root / "a" / "results.csv"), slurp(root / "b" / "results.csv"));
  EXPECT_EQ(a.ledger, b.ledger);
  EXPECT_TRUE(std::filesystem::exists(root / "a" / "manifest.json"));
  for (int r = 0; r <= 2; ++r) {
    EXPECT_TRUE(std::filesystem::exists(root / "a" / "checkpoints" / ("round_" + std::to_string(r)) / "state.json"));
  }
  ExperimentConfig other = tiny();
  other.seed = 4;
  EXPECT_FALSE(run_lifetime(other).rounds == a.rounds);
}

TEST(Lifetime, ResumeMatchesUninterruptedRun) {
  const auto root = testing::scratch_dir("lifetime_resume");
  run_lifetime(tiny(), to_dir(root / "full"));
  RunOptions first = to_dir(root / "cut");
  first.stop_after_round = 1;
  const auto partial = run_lifetime(tiny(), first);
  EXPECT_FALSE(partial.completed);
  EXPECT_EQ(partial.rounds.size(), 2u);
  RunOptions second;
  second.out_dir = root / "cut";
  second.resume = true;
  const auto resumed = run_lifetime(tiny(), second);
  EXPECT_TRUE(resumed.completed);
  EXPECT_EQ(slurp(root / "full" / "results.csv"), slurp(root / "cut" / "results.csv"));
}

TEST(Lifetime, TraceReplayReproducesLedgerAndStats) {
  const auto root = testing::scratch_dir("lifetime_replay");
  const auto result = run_lifetime(tiny(), to_dir(root));
  const RunSetup setup = prepare_run(tiny());
  const auto traces = read_trace_dir(root / "traces", setup.corpus->vocab);
  ASSERT_EQ(traces.size(), result.rounds.size());
  EXPECT_EQ(replay_ledger(traces), result.ledger);
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const RoundStats replayed = replay_stats(traces[r], setup.corpus->vocab);
    const RoundStats& row = result.rounds[r];
    EXPECT_EQ(replayed.atop3, row.atop3);
    EXPECT_EQ(replayed.atop5, row.atop5);
    EXPECT_EQ(replayed.atop10, row.atop10);
    EXPECT_EQ(replayed.improved_pct, row.improved_pct);
    EXPECT_EQ(replayed.mean_collected_reward, row.mean_collected_reward);
    EXPECT_EQ(replayed.answer_pos_hist, row.answer_pos_hist);
    EXPECT_EQ(replayed.questions_asked, row.questions_asked);
    EXPECT_EQ(replayed.uniq_nouns, row.uniq_nouns);
    EXPECT_EQ(replayed.uniq_verbs, row.uniq_verbs);
    EXPECT_EQ(replayed.uniq_adjs, row.uniq_adjs);
    EXPECT_EQ(stats_from_json(traces[r].summary), row);
  }
  EXPECT_NEAR(result.ledger.total(), result.rounds.back().supervision_total, 1e-9);
}

TEST(Lifetime, ForcedNoAskDegeneratesToGreedySelfTraining) {
  ExperimentConfig c = tiny();
  c.chunks = 1;
  c.h_percent = 100;
  c.teacher.epsilon = 0.0;
  c.dm = DmStrategy::kNever;
  c.passes_inquisitive = 1;
  const auto result = run_lifetime(c);
  ASSERT_EQ(result.buffers.size(), 1u);
  const RunSetup setup = prepare_run(c);
  const Captioner warm(result.warmup, std::shared_ptr<const Vocabulary>(setup.corpus, &setup.corpus->vocab),
                       setup.layout);
  for (const auto& it : result.buffers[0]) {
    EXPECT_EQ(it.candidates.size(), 1u);
    EXPECT_EQ(it.best().caption.tokens, warm.decode_greedy(setup.corpus->scene(it.scene_id)).caption.tokens);
  }
  EXPECT_EQ(result.rounds[1].questions_asked, 0);
  EXPECT_EQ(result.rounds[1].gt_captions_used, result.rounds[0].gt_captions_used);
}

TEST(Lifetime, AllModesCompleteWithBaselineAccounting) {
  double supervision[4] = {};
  int gt_used[4] = {};
  for (int i = 0; i < 4; ++i) {
    const auto mode = static_cast<StudentMode>(i);
    const auto result = run_lifetime(tiny(mode));
    ASSERT_TRUE(result.completed);
    ASSERT_EQ(result.rounds.size(), 3u);
    EXPECT_EQ(result.rounds.back().mode, to_string(mode));
    supervision[i] = result.rounds.back().supervision_total;
    gt_used[i] = result.rounds.back().gt_captions_used;
  }
  const RunSetup setup = prepare_run(tiny());
  const int warm = static_cast<int>(setup.plan.warmup.size()) * kGtPerScene;
  int chunk_scenes = 0, give_ups = 0;
  for (const auto& chunk : setup.plan.chunks) {
    chunk_scenes += static_cast<int>(chunk.size());
    give_ups += static_cast<int>(chunk.size()) - kept_count(static_cast<int>(chunk.size()), 70);
  }
  EXPECT_EQ(gt_used[0], warm + 2 * give_ups);
  EXPECT_EQ(gt_used[1], warm + 2 * give_ups);
  EXPECT_EQ(gt_used[2], warm + 2 * give_ups);
  EXPECT_EQ(gt_used[3], warm + 2 * chunk_scenes);
  EXPECT_NEAR(supervision[2], 5.2 * gt_used[2], 1e-9);
  EXPECT_NEAR(supervision[3], 5.2 * gt_used[3], 1e-9);
  EXPECT_GT(supervision[0], supervision[2]);
}

TEST(Lifetime, ResumeWithoutCheckpointStartsFresh) {
  RunOptions o = to_dir(testing::scratch_dir("lifetime_empty") / "none");
  o.resume = true;
  EXPECT_EQ(run_lifetime(tiny(), o).rounds, run_lifetime(tiny()).rounds);
}

}  // namespace
}  // namespace askcap
