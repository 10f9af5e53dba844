// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "askcap/metrics.hpp"
#include "askcap/world.hpp"

namespace askcap {

struct CaptionerShape {
  int vocab = 0;
  int width = 32;          // d
  int feature_width = 0;   // f
  int pos_width = 8;       // d_p

  friend bool operator==(const CaptionerShape&, const CaptionerShape&) = default;
};

/// All captioner weights in one contiguous vector, with named matrix views.
/// Embedding tables are stored one column per word (d x V).
class CaptionerParams {
 public:
  using Matrix = Eigen::MatrixXd;
  using View = Eigen::Map<Matrix>;
  using ConstView = Eigen::Map<const Matrix>;

  enum Tensor : int {
    kInputEmbedding,   // d x V
    kOutputEmbedding,  // d x V, rows of E_out; also the decision module's word embeddings
    kHidden,           // d x d
    kInput,            // d x d
    kVisual,           // d x f
    kBias,             // d
    kAttention,        // d x f
    kAttentionScore,   // d
    kPosHead,          // P x d
    kPosBias,          // P
    kPosEmbedding,     // d_p x P
    kPosToWord,        // V x d_p
    kWordBias,         // V
    kNumTensors
  };

  CaptionerParams() = default;
  explicit CaptionerParams(const CaptionerShape& shape);

  static CaptionerParams random(const CaptionerShape& shape, Rng& rng, double scale);

  const CaptionerShape& shape() const { return shape_; }
  View view(Tensor t);
  ConstView view(Tensor t) const;
  static const char* name(Tensor t);

  Eigen::VectorXd& flat() { return data_; }
  const Eigen::VectorXd& flat() const { return data_; }

  friend bool operator==(const CaptionerParams& a, const CaptionerParams& b) {
    return a.shape_ == b.shape_ && a.data_.size() == b.data_.size() && a.data_ == b.data_;
  }

 private:
  struct Block {
    Eigen::Index offset = 0, rows = 0, cols = 0;
  };
  CaptionerShape shape_;
  Eigen::VectorXd data_;
  std::array<Block, kNumTensors> blocks_{};
};

/// Maps scene objects to feature columns: one-hot category, multi-hot
/// attributes, one-hot action and one-hot slot.
class FeatureLayout {
 public:
  FeatureLayout() = default;
  FeatureLayout(const Vocabulary& vocab, int num_slots);

  int width() const { return width_; }
  int num_slots() const { return num_slots_; }
  Eigen::MatrixXd encode(const Scene& scene) const;  // f x J

 private:
  std::unordered_map<WordId, int> index_;
  int slot_offset_ = 0;
  int num_slots_ = 0;
  int width_ = 0;
};

/// Scene features plus their per-parameter projections, computed once per
/// decode or training example.
struct EncodedScene {
  Eigen::MatrixXd features;   // f x J
  Eigen::MatrixXd attention;  // d x J, W_a F
  Eigen::MatrixXd visual;     // d x J, W_v F
};

EncodedScene encode_scene(const CaptionerParams& params, const Eigen::MatrixXd& features);

inline constexpr int kTopK = 6;

/// Per-step captioner state recorded during decoding.
struct StepContext {
  int t = 0;
  Eigen::VectorXd hidden;      // state that produced the distribution at step t
  Eigen::VectorXd attention;   // over scene objects
  std::array<double, kNumPos> pos_dist{};
  std::vector<std::pair<WordId, double>> topk;  // kTopK entries, descending
  Eigen::VectorXd probs;       // full softmax over the vocabulary
  WordId chosen = Vocabulary::kEos;

  Pos predicted_pos() const;
};

struct Decoded {
  Caption caption;
  std::vector<StepContext> contexts;  // one per caption word
};

/// Top `k` (word, probability) pairs, descending; ties go to the lower id.
std::vector<std::pair<WordId, double>> top_k(const Eigen::VectorXd& probs, int k);
/// Index of the largest entry; lowest index wins ties.
Eigen::Index argmax_lowest(const Eigen::VectorXd& v);

class Captioner {
 public:
  Captioner(CaptionerParams params, std::shared_ptr<const Vocabulary> vocab, FeatureLayout layout);

  const CaptionerParams& params() const { return params_; }
  const Vocabulary& vocab() const { return *vocab_; }
  const FeatureLayout& layout() const { return layout_; }

  EncodedScene encode(const Scene& scene) const;

  Decoded decode_greedy(const Scene& scene) const;
  /// Ancestral sampling from softmax(logits / temperature). Throws
  /// std::invalid_argument for temperature <= 0.
  Caption decode_sample(const Scene& scene, double temperature, Rng& rng) const;
  /// Like decode_sample but also records per-step contexts (untempered).
  Decoded decode_sample_with_contexts(const Scene& scene, double temperature, Rng& rng) const;

  /// base[0..t-1] + answer + greedy continuation from the state recorded at
  /// step t of `contexts`.
  Decoded rollout_from(const Scene& scene, const Decoded& base, int t, WordId answer) const;

  /// Contexts recorded while feeding `caption` word by word.
  Decoded teacher_force(const Scene& scene, const Caption& caption) const;

  /// Distribution over the next word after teacher-forcing `prefix`.
  std::pair<Eigen::VectorXd, StepContext> step_distribution(const Scene& scene,
                                                           TokenSpan prefix) const;

 private:
  struct StepOut {
    Eigen::VectorXd hidden;
    Eigen::VectorXd attention;
    Eigen::VectorXd pos_dist;
    Eigen::VectorXd logits;
  };
  StepOut step(const EncodedScene& enc, const Eigen::VectorXd& h_prev, WordId input) const;
  StepContext make_context(int t, const StepOut& out, const Eigen::VectorXd& probs) const;
  Decoded continue_decoding(const EncodedScene& enc, Decoded prefix, Eigen::VectorXd h,
                            WordId input, double temperature, Rng* rng) const;

  CaptionerParams params_;
  std::shared_ptr<const Vocabulary> vocab_;
  FeatureLayout layout_;
};

/// One-word replacement; throws std::out_of_range when t is outside the caption.
Caption replace_word(const Caption& caption, int t, WordId answer, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Training

struct TrainItem {
  int scene_id = 0;
  Caption caption;
  double weight = 1.0;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 20;
  double lr = 2e-4;
  double lr_decay = 0.8;
  int lr_decay_every = 3;
  // Probability of feeding the previous predicted word instead of the GT word.
  double ss_word_start = 0.0;
  double ss_word_step = 0.05;
  int ss_word_every = 5;
  // Probability of feeding the predicted POS distribution instead of GT POS.
  double ss_pos_start = 0.2;
  double ss_pos_step = 0.05;
  int ss_pos_every = 3;
  double pos_loss_weight = 0.5;  // alpha
  /// Multiplies every item weight in the word loss.
  double weight_scale = 1.0;
  int width = 32;
  int pos_width = 8;
  double init_scale = 0.1;
  double grad_clip = 0.0;  // global-norm clip, 0 disables
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-step choices for one forward pass. Empty vectors mean "GT word input"
/// and "predicted POS" at every step.
struct ForcingPlan {
  std::vector<char> predicted_word;  // step t >= 1 feeds argmax of step t-1
  std::vector<char> ground_truth_pos;
};

/// Weighted word NLL plus pos_weight * POS NLL for one caption (EOS appended).
/// Accumulates the gradient into `grad` when it is non-null.
double caption_loss(const CaptionerParams& params, const EncodedScene& enc, TokenSpan words,
                    std::span<const Pos> pos, double weight, double pos_weight,
                    const ForcingPlan& plan, CaptionerParams* grad);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

/// Reward-weighted MLE from freshly initialized parameters.
CaptionerParams train_mle(std::span<const TrainItem> items, const Corpus& corpus,
                          const FeatureLayout& layout, const TrainConfig& config,
                          std::vector<EpochStats>* log = nullptr);

}  // namespace askcap
