// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "askcap/captioner.hpp"

namespace askcap {

inline constexpr int kNoAsk = -1;

struct StepFeatures {
  std::array<double, kNumPos> pos_dist{};
  double entropy_topk = 0.0;
  // [0, k): cos(top-1, top-i); [k, 2k): cos(top-i, sentence); [2k, 3k): min
  // Euclidean distance from top-i to another top-k word.
  std::array<double, 3 * kTopK> closeness{};
  Eigen::VectorXd caption_enc;
  double position = 0.0;
  bool mask = false;

  /// Flattened input to the policy network.
  Eigen::VectorXd vector() const;
  static int vector_size(int width) { return kNumPos + 1 + 3 * kTopK + width + 1; }
};

using DecisionFeatures = std::vector<StepFeatures>;

/// `embeddings` is d x V, one column per word (the captioner output embedding).
DecisionFeatures featurize(std::span<const StepContext> contexts, const Caption& caption,
                           const Eigen::Ref<const Eigen::MatrixXd>& embeddings);
double topk_entropy(std::span<const std::pair<WordId, double>> topk);

/// Two-layer tanh MLP scoring each step, plus a learned NO_ASK logit.
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(int input, int hidden);
  static PolicyParams random(int input, int hidden, Rng& rng, double scale);

  int input() const { return input_; }
  int hidden() const { return hidden_; }

  Eigen::Map<Eigen::MatrixXd> w1() { return {data_.data(), hidden_, input_}; }
  Eigen::Map<const Eigen::MatrixXd> w1() const { return {data_.data(), hidden_, input_}; }
  Eigen::Map<Eigen::VectorXd> b1() { return {data_.data() + hidden_ * input_, hidden_}; }
  Eigen::Map<const Eigen::VectorXd> b1() const { return {data_.data() + hidden_ * input_, hidden_}; }
  Eigen::Map<Eigen::VectorXd> w2() { return {data_.data() + hidden_ * (input_ + 1), hidden_}; }
  Eigen::Map<const Eigen::VectorXd> w2() const { return {data_.data() + hidden_ * (input_ + 1), hidden_}; }
  double& b2() { return data_[hidden_ * (input_ + 2)]; }
  double b2() const { return data_[hidden_ * (input_ + 2)]; }
  double& no_ask() { return data_[hidden_ * (input_ + 2) + 1]; }
  double no_ask() const { return data_[hidden_ * (input_ + 2) + 1]; }

  Eigen::VectorXd& flat() { return data_; }
  const Eigen::VectorXd& flat() const { return data_; }

  friend bool operator==(const PolicyParams& a, const PolicyParams& b) {
    return a.input_ == b.input_ && a.hidden_ == b.hidden_ && a.data_ == b.data_;
  }

 private:
  int input_ = 0;
  int hidden_ = 0;
  Eigen::VectorXd data_;
};

double step_logit(const PolicyParams& params, const StepFeatures& f);

/// Probabilities over steps (index i) and NO_ASK (last entry). Masked steps
/// get exactly 0.
Eigen::VectorXd policy_forward(const PolicyParams& params, const DecisionFeatures& features);

struct AskDecision {
  int t = kNoAsk;
  double log_prob = 0.0;
  bool sampled = false;
};

enum class ChooseMode { kGreedy, kSample };

AskDecision choose(const PolicyParams& params, const DecisionFeatures& features, ChooseMode mode,
                   Rng& rng);

/// Gradient of log p(t) with respect to all policy parameters.
Eigen::VectorXd log_prob_gradient(const PolicyParams& params, const DecisionFeatures& features,
                                  int t);

/// params += lr (r - r_star) grad log p(t). Returns the applied delta.
/// Throws std::invalid_argument for greedy decisions and std::runtime_error
/// on a non-finite gradient.
Eigen::VectorXd reinforce_update(PolicyParams& params, const AskDecision& decision, double r,
                                 double r_star, const DecisionFeatures& features, double lr);

enum class Heuristic { kRandom, kMaxEntropy, kClosenessScore };

/// Fixed uncertainty score: top-k entropy plus the mean spread of the
/// alternatives, minus how close they sit to the top-1 word.
double closeness_score(const StepFeatures& f);

AskDecision heuristic_choose(const DecisionFeatures& features, Heuristic strategy, Rng& rng);

void save_policy(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_policy(const std::filesystem::path& path, const PolicyParams* expected_shape = nullptr);

}  // namespace askcap
