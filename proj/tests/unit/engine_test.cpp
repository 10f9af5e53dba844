// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "agent_fixture.hpp"

namespace askcap {
namespace {

TEST(SeekTeacher, BestRewardNeverBelowBase) {
  const testing::AgentFixture fx(2);
  SyntheticChannel channel(*fx.teacher);
  Rng pick(9);
  Rng init(4);
  const PolicyParams policy = PolicyParams::random(StepFeatures::vector_size(16), 16, init, 0.5);
  int asked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    SupervisionLedger ledger;
    const AgentView agent{*fx.captioner, fx.corpus(), channel, ledger};
    const int id = fx.setup.train_ids[static_cast<std::size_t>(trial) % fx.setup.train_ids.size()];
    const Scene& scene = fx.corpus().scene(id);
    Rng rng(static_cast<std::uint64_t>(trial));
    const Decoded base = trial % 2 ? fx.captioner->decode_greedy(scene)
                                   : fx.captioner->decode_sample_with_contexts(scene, 1.0, rng);
    const auto strategy = static_cast<DmStrategy>(trial % 4);
    const int questions = 1 + trial % 3;
    const auto it = seek_teacher(agent, scene, base, {strategy, &policy, ChooseMode::kSample}, questions, rng);
    ASSERT_TRUE(it.has_value());
    EXPECT_GE(it->best().reward, it->r0());
    EXPECT_EQ(it->candidates.front().caption.tokens, base.caption.tokens);
    EXPECT_DOUBLE_EQ(it->r0(), fx.teacher->reward(id, base.caption.tokens));
    EXPECT_LE(it->asks.size(), static_cast<std::size_t>(questions));
    for (const auto& c : it->candidates) EXPECT_DOUBLE_EQ(c.reward, fx.teacher->reward(id, c.caption.tokens));
    double running = it->r0();
    for (std::size_t k = 1; k < it->candidates.size(); k += 2) {
      running = std::max({running, it->candidates[k].reward, it->candidates[k + 1].reward});
    }
    EXPECT_DOUBLE_EQ(it->best().reward, running);
    EXPECT_EQ(ledger.scored(), 1);
    EXPECT_TRUE(it->charged_score);
    EXPECT_EQ(ledger.answered_human(), 0);
    for (const auto& a : it->asks) asked += a.question.has_value();
  }
  EXPECT_GT(asked, 100);
}

TEST(SeekTeacher, NoAskReturnsBase) {
  const testing::AgentFixture fx;
  SyntheticChannel channel(*fx.teacher);
  SupervisionLedger ledger;
  const AgentView agent{*fx.captioner, fx.corpus(), channel, ledger};
  const Scene& scene = fx.corpus().scene(fx.setup.train_ids[0]);
  const Decoded base = fx.captioner->decode_greedy(scene);
  Rng rng(1);
  const auto it = seek_teacher(agent, scene, base, {DmStrategy::kNever, nullptr, ChooseMode::kGreedy}, 3, rng);
  ASSERT_TRUE(it.has_value());
  ASSERT_EQ(it->candidates.size(), 1u);
  EXPECT_EQ(it->best().caption.tokens, base.caption.tokens);
  EXPECT_EQ(it->chosen, 0);
  ASSERT_EQ(it->asks.size(), 1u);
  EXPECT_EQ(it->asks[0].step, kNoAsk);
  EXPECT_FALSE(it->improved());
}

TEST(SeekTeacher, MaxOfThreePrefersEarlierOnTies) {
  EXPECT_EQ(max_of_three(1, 1, 1), 0);
  EXPECT_EQ(max_of_three(1, 2, 2), 1);
  EXPECT_EQ(max_of_three(1, 0, 2), 2);
  EXPECT_EQ(max_of_three(3, 2, 1), 0);
}

Interaction fake(int scene, Tokens tokens, double reward) {
  Interaction it;
  it.scene_id = scene;
  it.candidates.push_back({Caption{std::move(tokens), {}, CaptionSource::kGreedy, std::nullopt}, reward});
  return it;
}

TEST(KeepBest, KeptCountAndGiveUpCharges) {
  const testing::AgentFixture fx;
  const std::vector<int> chunk(fx.setup.plan.chunks[0].begin(), fx.setup.plan.chunks[0].begin() + 10);
  std::vector<Interaction> buffer;
  for (std::size_t i = 0; i < chunk.size(); ++i) buffer.push_back(fake(chunk[i], {5, 6}, static_cast<double>(i)));
  for (int h = 60; h <= 100; h += 10) {
    Teacher teacher(fx.setup.corpus, fx.config.teacher, fx.setup.teacher_idf);
    SyntheticChannel channel(teacher);
    SupervisionLedger ledger;
    const auto r = keep_best_and_give_up(buffer, chunk, h, 2, fx.corpus(), channel, ledger);
    ASSERT_TRUE(r.has_value());
    const int kept = h / 10;
    EXPECT_EQ(kept_count(10, h), kept);
    EXPECT_EQ(static_cast<int>(r->kept.size()), kept);
    EXPECT_EQ(static_cast<int>(r->gave_up.size()), 10 - kept);
    EXPECT_NEAR(ledger.total(), (10 - kept) * 2 * 5.2, 1e-9);
    EXPECT_EQ(static_cast<int>(r->collected.size()), kept);
    for (int id : r->gave_up) {
      ASSERT_EQ(r->written.at(id).size(), 2u);
      for (const auto& c : r->written.at(id)) {
        const auto& refs = fx.corpus().refs(id);
        EXPECT_TRUE(std::any_of(refs.begin(), refs.end(), [&](const Caption& g) { return g.tokens == c.tokens; }));
      }
    }
    // Highest rewards are at the end of the chunk.
    for (std::size_t i = 0; i < r->kept.size(); ++i) EXPECT_EQ(r->kept[i].scene_id, chunk[9 - i]);
  }
}

TEST(KeepBest, RankingMatchesSortOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int scenes = std::uniform_int_distribution<int>(1, 8)(rng);
    const int m = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<int> chunk;
    for (int i = 0; i < scenes; ++i) chunk.push_back(10 * i + 3);
    std::shuffle(chunk.begin(), chunk.end(), rng);
    std::vector<Interaction> buffer;
    const int n = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int i = 0; i < n; ++i) {
      const int id = chunk[std::uniform_int_distribution<std::size_t>(0, chunk.size() - 1)(rng)];
      const WordId w = std::uniform_int_distribution<WordId>(3, 6)(rng);
      const double r = std::uniform_int_distribution<int>(0, 8)(rng) * 0.25;
      buffer.push_back(fake(id, {w}, r));
    }

    // Oracle: best reward per distinct caption, top-m mean, sort by (-mean, id).
    std::map<int, std::map<Tokens, double>> best;
    for (const auto& it : buffer) {
      auto [pos, fresh] = best[it.scene_id].emplace(it.best().caption.tokens, it.best().reward);
      if (!fresh) pos->second = std::max(pos->second, it.best().reward);
    }
    std::vector<std::pair<double, int>> expected;
    for (int id : chunk) {
      std::vector<double> rewards;
      for (const auto& [tokens, r] : best[id]) rewards.push_back(r);
      std::sort(rewards.rbegin(), rewards.rend());
      if (rewards.size() > static_cast<std::size_t>(m)) rewards.resize(static_cast<std::size_t>(m));
      double mean = -INFINITY;
      if (!rewards.empty()) {
        mean = 0.0;
        for (double r : rewards) mean += r;
        mean /= static_cast<double>(rewards.size());
      }
      expected.emplace_back(-mean, id);
    }
    std::sort(expected.begin(), expected.end());

    const auto ranking = rank_scenes(buffer, chunk, m);
    ASSERT_EQ(ranking.size(), expected.size());
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      EXPECT_EQ(ranking[i].scene_id, expected[i].second);
      EXPECT_DOUBLE_EQ(ranking[i].mean, -expected[i].first);
      std::set<Tokens> distinct;
      for (const auto& c : ranking[i].top) EXPECT_TRUE(distinct.insert(c.caption.tokens).second);
      EXPECT_LE(ranking[i].top.size(), static_cast<std::size_t>(m));
    }
  }
}

TEST(Lambda, NearestRankQuantile) {
  std::vector<double> deciles;
  for (int i = 1; i <= 10; ++i) deciles.push_back(i / 10.0);
  std::shuffle(deciles.begin(), deciles.end(), Rng(1));
  EXPECT_DOUBLE_EQ(nearest_rank_quantile(deciles, 0.9), 0.9);
  EXPECT_DOUBLE_EQ(nearest_rank_quantile(deciles, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(nearest_rank_quantile(deciles, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(nearest_rank_quantile({7.0}, 0.9), 7.0);
  EXPECT_THROW(nearest_rank_quantile({}, 0.9), std::invalid_argument);
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 40)(rng)));
    for (auto& x : v) x = std::uniform_real_distribution<double>(0, 100)(rng);
    const double q = std::uniform_int_distribution<int>(1, 100)(rng) / 100.0;
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    // Smallest value with at least q n values at or below it.
    double oracle = sorted.back();
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (static_cast<double>(i + 1) >= q * static_cast<double>(v.size()) - 1e-12) {
        oracle = sorted[i];
        break;
      }
    }
    EXPECT_EQ(nearest_rank_quantile(v, q), oracle);
  }
}

TEST(Collection, InteractionCountsAndDeterminism) {
  const testing::AgentFixture fx;
  const std::vector<int> chunk(fx.setup.plan.chunks[0].begin(), fx.setup.plan.chunks[0].begin() + 4);
  auto run = [&](bool mute, PolicyParams& policy, SupervisionLedger& ledger) {
    SyntheticChannel channel(*fx.teacher);
    const AgentView agent{*fx.captioner, fx.corpus(), channel, ledger};
    CollectionOptions o;
    o.passes = 3;
    o.mute = mute;
    o.dm_lr = 0.01;
    o.seed = 5;
    return collection_phase(agent, chunk, policy, o);
  };
  Rng init(1);
  const PolicyParams start = PolicyParams::random(StepFeatures::vector_size(16), 16, init, 0.1);
  PolicyParams p1 = start, p2 = start;
  SupervisionLedger l1, l2;
  const auto a = run(false, p1, l1);
  const auto b = run(false, p2, l2);
  EXPECT_EQ(a.buffer.size(), 3u * 4u * 2u);
  EXPECT_EQ(a.dm_updates, 12);
  EXPECT_EQ(p1, p2);
  EXPECT_FALSE(p1 == start);
  EXPECT_EQ(l1, l2);
  for (std::size_t i = 0; i < a.buffer.size(); ++i) {
    EXPECT_EQ(a.buffer[i].best().caption.tokens, b.buffer[i].best().caption.tokens);
    EXPECT_EQ(a.buffer[i].sampled_branch, i % 2 == 0);
    EXPECT_EQ(a.buffer[i].pass, static_cast<int>(i / 8));
  }
  EXPECT_LE(l1.scored(), static_cast<int>(a.buffer.size()));

  PolicyParams p3 = start;
  SupervisionLedger l3;
  const auto mute = run(true, p3, l3);
  EXPECT_EQ(mute.buffer.size(), 3u * 4u);
  EXPECT_EQ(mute.dm_updates, 0);
  EXPECT_EQ(p3, start);
  for (const auto& it : mute.buffer) {
    EXPECT_TRUE(it.asks.empty());
    EXPECT_EQ(it.candidates.size(), 2u);
    EXPECT_GE(it.best().reward, it.r0());
  }
}

TEST(RoundStats, CollectionStatsMatchHandCount) {
  Vocabulary vocab;
  const WordId dog = vocab.add("dog", Pos::kNoun);
  const WordId cat = vocab.add("cat", Pos::kNoun);
  const WordId red = vocab.add("red", Pos::kAdj);
  auto ask = [&](WordId answer, std::vector<WordId> top) {
    AskRecord a;
    a.step = 0;
    a.question = Question{};
    a.answer = answer;
    for (WordId w : top) a.top10.emplace_back(w, 0.1);
    return a;
  };
  std::vector<Interaction> buffer(4);
  buffer[0] = fake(1, {dog}, 1.0);
  buffer[0].candidates.push_back({buffer[0].candidates[0].caption, 2.0});
  buffer[0].chosen = 1;
  buffer[0].asks.push_back(ask(dog, {cat, red, dog}));           // top3 hit
  buffer[1] = fake(2, {cat}, 4.0);
  buffer[1].asks.push_back(ask(red, {cat, dog, cat, dog, red})); // top5 hit
  buffer[2] = fake(2, {cat}, 3.0);
  buffer[2].asks.push_back(AskRecord{});                         // NO_ASK
  buffer[3] = fake(3, {dog}, 1.0);
  buffer[3].asks.push_back(AskRecord{});                         // NO_ASK only: not an asking scene
  RoundStats s;
  collection_stats(buffer, vocab, s);
  EXPECT_EQ(s.questions_asked, 2);
  EXPECT_DOUBLE_EQ(*s.atop3, 50.0);
  EXPECT_DOUBLE_EQ(*s.atop5, 100.0);
  EXPECT_DOUBLE_EQ(*s.atop10, 100.0);
  EXPECT_DOUBLE_EQ(*s.improved_pct, 50.0);
  EXPECT_DOUBLE_EQ(*s.mean_collected_reward, 2.5);
  EXPECT_EQ(s.answer_pos_hist[static_cast<std::size_t>(Pos::kNoun)], 1);
  EXPECT_EQ(s.answer_pos_hist[static_cast<std::size_t>(Pos::kAdj)], 1);

  RoundStats empty;
  collection_stats({}, vocab, empty);
  EXPECT_FALSE(empty.atop3.has_value());
  EXPECT_FALSE(empty.improved_pct.has_value());
  EXPECT_FALSE(empty.mean_collected_reward.has_value());
}

TEST(Config, ModeAndStrategyNamesRoundTrip) {
  for (auto m : {StudentMode::kInquisitive, StudentMode::kMute, StudentMode::kEqualGt, StudentMode::kAllGt}) {
    EXPECT_EQ(parse_student_mode(to_string(m)), m);
  }
  for (auto d : {DmStrategy::kLearned, DmStrategy::kRandom, DmStrategy::kMaxEntropy,
                 DmStrategy::kClosenessScore, DmStrategy::kNever}) {
    EXPECT_EQ(parse_dm_strategy(to_string(d)), d);
  }
  EXPECT_FALSE(parse_student_mode("loud").has_value());
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.h_percent = 120;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace askcap
