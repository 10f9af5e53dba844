// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "askcap/world.hpp"

namespace askcap {
namespace {

WorldConfig small_world(int scenes, std::uint64_t seed = 7) {
  WorldConfig c;
  c.num_scenes = scenes;
  c.seed = seed;
  return c;
}

TEST(Vocabulary, SpecialTokensAndDenseIds) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.word(Vocabulary::kBos), "<bos>");
  const auto dog = v.add("dog", Pos::kNoun);
  EXPECT_EQ(dog, 3);
  EXPECT_EQ(v.id("dog"), dog);
  EXPECT_EQ(v.id_or_unk("cat"), Vocabulary::kUnk);
  EXPECT_THROW(v.add("dog", Pos::kVerb), ConfigError);
  EXPECT_FALSE(askable(Pos::kOther));
  for (Pos p : {Pos::kNoun, Pos::kVerb, Pos::kAdj, Pos::kNum, Pos::kAdv}) EXPECT_TRUE(askable(p));
}

TEST(World, DeterministicUnderFixedSeed) {
  EXPECT_EQ(generate_world(small_world(100)), generate_world(small_world(100)));
  EXPECT_FALSE(generate_world(small_world(100, 7)) == generate_world(small_world(100, 8)));
}

TEST(World, CaptionTokensCarryLexiconTags) {
  WorldConfig c = small_world(500);
  c.nouns = 60;
  c.verbs = 20;
  c.adjs = 20;
  const Corpus corpus = generate_world(c);
  ASSERT_EQ(corpus.scenes.size(), 500u);
  std::size_t tokens = 0;
  for (const auto& refs : corpus.references) {
    for (const auto& cap : refs) {
      ASSERT_EQ(cap.tokens.size(), cap.pos.size());
      for (std::size_t i = 0; i < cap.tokens.size(); ++i) {
        ASSERT_EQ(cap.pos[i], corpus.vocab.pos(cap.tokens[i]));
        ++tokens;
      }
    }
  }
  EXPECT_GT(tokens, 5000u);
}

TEST(World, FiveDistinctGroundedCaptionsPerScene) {
  const Corpus corpus = generate_world(small_world(200));
  for (std::size_t i = 0; i < corpus.scenes.size(); ++i) {
    const Scene& s = corpus.scenes[i];
    const auto& refs = corpus.references[i];
    ASSERT_EQ(refs.size(), static_cast<std::size_t>(kGtPerScene));
    std::set<std::vector<WordId>> distinct;
    std::set<int> slots;
    for (const auto& o : s.objects) {
      EXPECT_TRUE(slots.insert(o.slot).second);
      EXPECT_EQ(corpus.vocab.pos(o.category), Pos::kNoun);
    }
    for (const auto& cap : refs) {
      distinct.insert(cap.tokens);
      EXPECT_LE(cap.tokens.size(), static_cast<std::size_t>(kMaxCaptionLength));
      bool names_object = false, describes = false;
      for (const auto t : cap.tokens) {
        for (const auto& o : s.objects) {
          if (corpus.canonical(t) == o.category) names_object = true;
          if (std::find(o.attributes.begin(), o.attributes.end(), t) != o.attributes.end()) describes = true;
          if (o.action && *o.action == t) describes = true;
        }
      }
      EXPECT_TRUE(names_object) << "scene " << s.id;
      EXPECT_TRUE(describes) << "scene " << s.id;
    }
    EXPECT_EQ(distinct.size(), refs.size());
  }
}

TEST(World, SynonymsNameExistingCategories) {
  const Corpus corpus = generate_world(small_world(50));
  EXPECT_FALSE(corpus.synonyms.empty());
  for (const auto& [alias, category] : corpus.synonyms) {
    EXPECT_EQ(corpus.vocab.pos(alias), Pos::kNoun);
    EXPECT_EQ(corpus.vocab.pos(category), Pos::kNoun);
    EXPECT_EQ(corpus.canonical(alias), category);
    EXPECT_EQ(corpus.canonical(category), category);
  }
}

TEST(World, RejectsBadConfigs) {
  WorldConfig c = small_world(10);
  c.nouns = 0;
  EXPECT_THROW(generate_world(c), ConfigError);
  c = small_world(0);
  EXPECT_THROW(generate_world(c), ConfigError);
}

TEST(SplitChunks, SizesAndPartition) {
  std::vector<int> ids(100);
  for (int i = 0; i < 100; ++i) ids[static_cast<std::size_t>(i)] = i;
  const auto plan = split_chunks(ids, 0.10, 3, 1);
  EXPECT_EQ(plan.warmup.size(), 10u);
  ASSERT_EQ(plan.chunks.size(), 3u);
  for (const auto& c : plan.chunks) EXPECT_EQ(c.size(), 30u);
  EXPECT_EQ(plan.gt_per_warmup_scene, 5);
  EXPECT_EQ(plan.m, 2);

  const auto other = split_chunks(ids, 0.10, 3, 2);
  EXPECT_NE(plan.warmup, other.warmup);
  EXPECT_EQ(other.chunks[0].size(), 30u);
}

TEST(SplitChunks, PartitionPropertyOverRandomShapes) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(5, 400)(rng);
    const double frac = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const int warm = static_cast<int>(std::lround(frac * n));
    const int k = std::uniform_int_distribution<int>(1, std::max(1, n - warm))(rng);
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = 1000 + 3 * i;
    const auto plan = split_chunks(ids, frac, k, static_cast<std::uint64_t>(trial));
    std::vector<int> all = plan.warmup;
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& c : plan.chunks) {
      all.insert(all.end(), c.begin(), c.end());
      lo = std::min(lo, c.size());
      hi = std::max(hi, c.size());
    }
    EXPECT_EQ(plan.warmup.size(), static_cast<std::size_t>(warm));
    EXPECT_LE(hi - lo, 1u);
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, ids);
  }
}

TEST(SplitChunks, Errors) {
  std::vector<int> ids = {1, 2, 3, 4};
  EXPECT_THROW(split_chunks(ids, 0.0, 1, 1), ConfigError);
  EXPECT_THROW(split_chunks(ids, 1.0, 1, 1), ConfigError);
  EXPECT_THROW(split_chunks(ids, 0.25, 0, 1), ConfigError);
  EXPECT_THROW(split_chunks(ids, 0.25, 4, 1), ConfigError);
  EXPECT_NO_THROW(split_chunks(ids, 0.25, 3, 1));
}

TEST(Caption, FromTokensTagsEveryWord) {
  const Corpus corpus = generate_world(small_world(5));
  const auto& ref = corpus.references[0][0];
  const auto c = Caption::from_tokens(ref.tokens, corpus.vocab, CaptionSource::kGreedy);
  EXPECT_EQ(c.pos, ref.pos);
  EXPECT_EQ(c.source, CaptionSource::kGreedy);
  EXPECT_FALSE(c.reward.has_value());
}

}  // namespace
}  // namespace askcap
