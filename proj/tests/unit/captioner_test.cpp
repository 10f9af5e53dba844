// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "askcap/captioner.hpp"
#include "askcap/checkpoint.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

namespace askcap {
namespace {

using testing::tiny_scene;
using testing::tiny_vocabulary;

struct Tiny {
  std::shared_ptr<Vocabulary> vocab = tiny_vocabulary();
  FeatureLayout layout{*vocab, 2};
  Scene scene = tiny_scene(*vocab);

  Captioner make(std::uint64_t seed, double scale = 0.8) const {
    Rng rng(seed);
    CaptionerShape shape{static_cast<int>(vocab->size()), 8, layout.width(), 4};
    return Captioner(CaptionerParams::random(shape, rng, scale), vocab, layout);
  }
};

TEST(CaptionerGradient, MatchesCentralDifferences) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = testing::captioner_gradcheck(seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst tensor " << r.worst;
    EXPECT_GT(r.checked, 500);
  }
}

TEST(CaptionerGradient, ZeroWeightIgnoresWordLoss) {
  const Tiny t;
  const Captioner c = t.make(4);
  const auto enc = c.encode(t.scene);
  const Tokens words = {t.vocab->id("a"), t.vocab->id("dog")};
  const std::vector<Pos> pos = {Pos::kOther, Pos::kNoun};
  EXPECT_EQ(caption_loss(c.params(), enc, words, pos, 0.0, 0.0, {}, nullptr), 0.0);
  const double both = caption_loss(c.params(), enc, words, pos, 1.0, 0.5, {}, nullptr);
  const double word = caption_loss(c.params(), enc, words, pos, 1.0, 0.0, {}, nullptr);
  const double tag = caption_loss(c.params(), enc, words, pos, 0.0, 0.5, {}, nullptr);
  EXPECT_NEAR(both, word + tag, 1e-12);
}

TEST(Decoding, TopKAndArgmaxBreakTiesLow) {
  Eigen::VectorXd p(5);
  p << 0.1, 0.3, 0.3, 0.05, 0.25;
  EXPECT_EQ(argmax_lowest(p), 1);
  const auto top = top_k(p, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].first, 1);
  EXPECT_EQ(top[1].first, 2);
  EXPECT_EQ(top[2].first, 4);
  EXPECT_EQ(top_k(p, 9).size(), 5u);
}

TEST(Decoding, GreedyIsDeterministicAndBounded) {
  const Tiny t;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Captioner c = t.make(seed, 1.5);
    const Decoded a = c.decode_greedy(t.scene);
    const Decoded b = c.decode_greedy(t.scene);
    EXPECT_EQ(a.caption, b.caption);
    EXPECT_LE(a.caption.tokens.size(), static_cast<std::size_t>(kMaxCaptionLength));
    ASSERT_EQ(a.contexts.size(), a.caption.tokens.size());
    for (std::size_t i = 0; i < a.contexts.size(); ++i) {
      EXPECT_EQ(a.contexts[i].chosen, a.caption.tokens[i]);
      EXPECT_EQ(a.contexts[i].topk.front().first, a.caption.tokens[i]);
      EXPECT_NE(a.caption.tokens[i], Vocabulary::kEos);
      EXPECT_NEAR(a.contexts[i].probs.sum(), 1.0, 1e-12);
      EXPECT_NEAR(a.contexts[i].attention.sum(), 1.0, 1e-12);
    }
    // Teacher forcing the greedy caption reproduces its contexts.
    const Decoded forced = c.teacher_force(t.scene, a.caption);
    for (std::size_t i = 0; i < a.contexts.size(); ++i) {
      EXPECT_TRUE(forced.contexts[i].probs.isApprox(a.contexts[i].probs, 1e-12));
    }
  }
}

TEST(Decoding, RolloutKeepsPrefixAndInjectsAnswer) {
  const Tiny t;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Captioner c = t.make(seed, 1.5);
    const Decoded base = c.decode_greedy(t.scene);
    for (int step = 0; step < static_cast<int>(base.caption.tokens.size()); ++step) {
      const WordId answer = t.vocab->id("cat");
      const Decoded ro = c.rollout_from(t.scene, base, step, answer);
      ASSERT_GT(ro.caption.tokens.size(), static_cast<std::size_t>(step));
      for (int i = 0; i < step; ++i) EXPECT_EQ(ro.caption.tokens[static_cast<std::size_t>(i)], base.caption.tokens[static_cast<std::size_t>(i)]);
      EXPECT_EQ(ro.caption.tokens[static_cast<std::size_t>(step)], answer);
      EXPECT_EQ(ro.caption.source, CaptionSource::kRollout);
      // Injecting the word the model chose anyway reproduces the base caption.
      const Decoded same = c.rollout_from(t.scene, base, step, base.caption.tokens[static_cast<std::size_t>(step)]);
      EXPECT_EQ(same.caption.tokens, base.caption.tokens);
      ++checked;
    }
    EXPECT_THROW(c.rollout_from(t.scene, base, static_cast<int>(base.caption.tokens.size()), 3), std::out_of_range);
  }
  EXPECT_GT(checked, 10);
}

TEST(Decoding, ReplaceSwapsOneWord) {
  const Tiny t;
  Caption c = Caption::from_tokens({t.vocab->id("a"), t.vocab->id("red"), t.vocab->id("dog")}, *t.vocab,
                                   CaptionSource::kGreedy);
  c.reward = 3.0;
  const Caption r = replace_word(c, 1, t.vocab->id("two"), *t.vocab);
  EXPECT_EQ(r.tokens, (Tokens{t.vocab->id("a"), t.vocab->id("two"), t.vocab->id("dog")}));
  EXPECT_EQ(r.pos[1], Pos::kNum);
  EXPECT_EQ(r.source, CaptionSource::kReplace);
  EXPECT_FALSE(r.reward.has_value());
  EXPECT_THROW(replace_word(c, 3, 4, *t.vocab), std::out_of_range);
  EXPECT_THROW(replace_word(c, -1, 4, *t.vocab), std::out_of_range);
}

// Pearson chi-square of first-word frequencies against the tempered softmax.
double first_word_chi_square(const Captioner& c, const Scene& scene, double temperature, int n,
                             Rng& rng) {
  const auto [probs, ctx] = c.step_distribution(scene, {});
  Eigen::VectorXd tempered = probs.array().pow(1.0 / temperature).matrix();
  tempered /= tempered.sum();
  std::vector<int> counts(static_cast<std::size_t>(probs.size()), 0);
  for (int i = 0; i < n; ++i) {
    const Caption cap = c.decode_sample(scene, temperature, rng);
    ++counts[static_cast<std::size_t>(cap.tokens.empty() ? Vocabulary::kEos : cap.tokens[0])];
  }
  double chi2 = 0.0;
  for (Eigen::Index w = 0; w < probs.size(); ++w) {
    const double expected = n * tempered[w];
    chi2 += (counts[static_cast<std::size_t>(w)] - expected) * (counts[static_cast<std::size_t>(w)] - expected) / expected;
  }
  return chi2;
}

TEST(Decoding, SamplingFollowsTemperedSoftmax) {
  const Tiny t;
  const Captioner c = t.make(9, 1.0);
  Rng rng(42);
  // 11 degrees of freedom; 31.26 is the 0.999 quantile.
  for (double temperature : {1.0, 0.7, 2.0}) {
    EXPECT_LT(first_word_chi_square(c, t.scene, temperature, 20000, rng), 31.26) << temperature;
  }
  EXPECT_THROW(c.decode_sample(t.scene, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(c.decode_sample(t.scene, -1.0, rng), std::invalid_argument);
}

TEST(Decoding, LowTemperatureApproachesGreedy) {
  const Tiny t;
  const Captioner c = t.make(5, 1.5);
  Rng rng(1);
  const auto greedy = c.decode_greedy(t.scene).caption.tokens;
  int same = 0;
  for (int i = 0; i < 200; ++i) same += c.decode_sample(t.scene, 1e-3, rng).tokens == greedy;
  EXPECT_EQ(same, 200);
}

TrainItem item(const Vocabulary& v, int scene, std::initializer_list<const char*> words, double w) {
  Tokens tokens;
  for (const char* s : words) tokens.push_back(v.id(s));
  return {scene, Caption::from_tokens(tokens, v, CaptionSource::kGt), w};
}

struct TinyCorpus {
  Corpus corpus;
  FeatureLayout layout;
  std::vector<TrainItem> items;
};

TinyCorpus tiny_corpus() {
  TinyCorpus t;
  t.corpus.vocab = *tiny_vocabulary();
  Scene s1 = tiny_scene(t.corpus.vocab);
  Scene s2;
  s2.id = 2;
  s2.objects.push_back({t.corpus.vocab.id("cat"), {t.corpus.vocab.id("red")}, std::nullopt, 1});
  t.corpus.scenes = {s1, s2};
  t.corpus.references.resize(2);
  t.corpus.reindex();
  t.layout = FeatureLayout(t.corpus.vocab, 2);
  const auto& v = t.corpus.vocab;
  t.items = {item(v, 1, {"a", "red", "dog", "runs"}, 1.0), item(v, 1, {"a", "dog", "runs", "left"}, 1.0),
             item(v, 2, {"a", "red", "cat"}, 1.0), item(v, 2, {"a", "cat", "is", "red"}, 1.0)};
  return t;
}

TEST(Training, LossFallsAndRunIsReproducible) {
  const TinyCorpus t = tiny_corpus();
  TrainConfig config;
  config.width = 8;
  config.pos_width = 4;
  config.epochs = 40;
  config.batch_size = 2;
  config.lr = 0.02;
  config.lr_decay_every = 10;
  std::vector<EpochStats> log;
  const auto a = train_mle(t.items, t.corpus, t.layout, config, &log);
  ASSERT_EQ(log.size(), 40u);
  EXPECT_LT(log.back().mean_loss, 0.5 * log.front().mean_loss);
  EXPECT_DOUBLE_EQ(log[10].lr, 0.02 * 0.8);
  const auto b = train_mle(t.items, t.corpus, t.layout, config);
  EXPECT_EQ(a, b);
  config.seed = 2;
  EXPECT_FALSE(train_mle(t.items, t.corpus, t.layout, config) == a);

  const Captioner c(a, std::make_shared<Vocabulary>(t.corpus.vocab), t.layout);
  EXPECT_EQ(c.decode_greedy(t.corpus.scene(2)).caption.tokens[1], t.corpus.vocab.id("red"));
}

TEST(Training, RejectsDivergence) {
  const TinyCorpus t = tiny_corpus();
  TrainConfig config;
  config.width = 8;
  config.pos_width = 4;
  config.epochs = 2;
  std::vector<TrainItem> items = t.items;
  items[0].weight = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train_mle(items, t.corpus, t.layout, config), TrainingError);
}

TEST(Checkpoint, RoundTripAndShapeChecks) {
  const Tiny t;
  const Captioner c = t.make(3);
  const auto dir = testing::scratch_dir("checkpoint");
  save_captioner(dir / "c.ckpt", c.params());
  EXPECT_EQ(load_captioner(dir / "c.ckpt"), c.params());
  CaptionerShape wrong = c.params().shape();
  wrong.width = 9;
  EXPECT_THROW(load_captioner(dir / "c.ckpt", &wrong), CheckpointError);
  {
    std::ofstream out(dir / "bad.ckpt", std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_captioner(dir / "bad.ckpt"), CheckpointError);
  EXPECT_THROW(load_captioner(dir / "missing.ckpt"), CheckpointError);
}

}  // namespace
}  // namespace askcap
