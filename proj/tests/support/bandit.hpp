// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

// Contextual bandit over caption steps: exactly one step per episode pays 1
// (the one whose POS distribution is concentrated on ADJ), all others and
// NO_ASK pay 0.

#pragma once

#include "gradcheck.hpp"

namespace askcap::testing {

struct BanditEpisode {
  DecisionFeatures features;
  int good = 0;
};

inline BanditEpisode bandit_episode(Rng& rng, int width) {
  BanditEpisode e;
  const int steps = std::uniform_int_distribution<int>(4, 8)(rng);
  e.features = random_features(steps, width, rng);
  for (auto& f : e.features) f.mask = true;
  e.good = std::uniform_int_distribution<int>(0, steps - 1)(rng);
  std::uniform_int_distribution<int> other_tag(0, kNumPos - 2);
  for (int i = 0; i < steps; ++i) {
    auto& p = e.features[static_cast<std::size_t>(i)].pos_dist;
    p.fill(0.0);
    if (i == e.good) {
      p[static_cast<std::size_t>(Pos::kAdj)] = 1.0;
    } else {
      int tag = other_tag(rng);
      if (tag >= static_cast<int>(Pos::kAdj)) ++tag;
      p[static_cast<std::size_t>(tag)] = 1.0;
    }
  }
  return e;
}

/// Trains with self-critical REINFORCE for `updates` episodes and returns
/// the greedy selection rate of the rewarding step on 500 fresh episodes.
inline double bandit_selection_rate(std::uint64_t seed, int updates, double lr) {
  constexpr int kWidth = 8;
  Rng rng(seed);
  PolicyParams params = PolicyParams::random(StepFeatures::vector_size(kWidth), 16, rng, 0.1);
  for (int i = 0; i < updates; ++i) {
    const BanditEpisode e = bandit_episode(rng, kWidth);
    const AskDecision sampled = choose(params, e.features, ChooseMode::kSample, rng);
    const AskDecision greedy = choose(params, e.features, ChooseMode::kGreedy, rng);
    const double r = sampled.t == e.good ? 1.0 : 0.0;
    const double r_star = greedy.t == e.good ? 1.0 : 0.0;
    reinforce_update(params, sampled, r, r_star, e.features, lr);
  }
  int hits = 0;
  constexpr int kTests = 500;
  for (int i = 0; i < kTests; ++i) {
    const BanditEpisode e = bandit_episode(rng, kWidth);
    hits += choose(params, e.features, ChooseMode::kGreedy, rng).t == e.good;
  }
  return static_cast<double>(hits) / kTests;
}

}  // namespace askcap::testing
