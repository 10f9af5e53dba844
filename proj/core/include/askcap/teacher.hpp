// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "askcap/metrics.hpp"
#include "askcap/qgen.hpp"
#include "askcap/world.hpp"

namespace askcap {

enum class TeacherMode { kSynthetic, kHuman };

struct TeacherConfig {
  double epsilon = 0.36;  // probability of a distractor answer
  MixWeights weights = MixWeights::defaults();
  TeacherMode mode = TeacherMode::kSynthetic;
  std::uint64_t seed = 11;
};

inline constexpr double kWriteCost = 5.2;
inline constexpr double kScoreCost = 1.0;
inline constexpr double kAnswerCost = 1.13;

/// Human-effort meter. Repeated (scene, caption) scorings and repeated
/// (scene, question) answers are free.
class SupervisionLedger {
 public:
  /// Charges one scoring event unless every caption was already scored for
  /// this scene. Returns whether a charge was made.
  bool charge_scoring(int scene_id, std::span<const Tokens> captions);
  bool charge_scoring(int scene_id, TokenSpan caption);
  /// Charges a human answer unless this question was already answered for
  /// the scene. Synthetic answers are recorded but never charged.
  bool charge_answer(int scene_id, const std::string& question, bool human);
  void charge_writes(int count);

  int written() const { return written_; }
  int scored() const { return scored_; }
  int answered_human() const { return answered_human_; }
  double total() const {
    return kWriteCost * written_ + kScoreCost * scored_ + kAnswerCost * answered_human_;
  }

  nlohmann::json to_json() const;
  static SupervisionLedger from_json(const nlohmann::json& j);

  friend bool operator==(const SupervisionLedger&, const SupervisionLedger&) = default;

 private:
  int written_ = 0;
  int scored_ = 0;
  int answered_human_ = 0;
  std::set<std::string> scored_keys_;
  std::set<std::string> answered_keys_;
};

std::string caption_key(int scene_id, TokenSpan caption);

/// Ground-truth oracle over a corpus: answers, Mix rewards and GT issuance.
class Teacher {
 public:
  Teacher(std::shared_ptr<const Corpus> corpus, TeacherConfig config, IdfTable idf);

  const TeacherConfig& config() const { return config_; }
  const Corpus& corpus() const { return *corpus_; }
  const IdfTable& idf() const { return idf_; }

  /// Noise-free answer; UNK when the question's referent is not in the scene.
  WordId true_answer(const Question& q, const Scene& scene) const;
  /// With probability 1 - epsilon the true answer, otherwise a uniformly drawn
  /// different word with the same POS.
  WordId answer(const Question& q, const Scene& scene, Rng& rng) const;
  /// Answer whose noise draw depends only on (seed, scene, question).
  WordId consistent_answer(const Question& q, const Scene& scene) const;

  double reward(int scene_id, TokenSpan caption) const;
  double score(int scene_id, TokenSpan caption, SupervisionLedger& ledger) const;

  /// `m` GT captions, drawn without replacement until the scene's references
  /// are exhausted and with replacement afterwards. Charges kWriteCost each.
  std::vector<Caption> write_captions(int scene_id, int m, SupervisionLedger& ledger, Rng& rng);

  const std::map<int, std::vector<int>>& issued() const { return issued_; }
  void set_issued(std::map<int, std::vector<int>> issued) { issued_ = std::move(issued); }

 private:
  std::shared_ptr<const Corpus> corpus_;
  TeacherConfig config_;
  IdfTable idf_;
  StemTable stems_;
  std::unordered_map<int, ReferenceSet> refs_;
  std::map<int, std::vector<int>> issued_;
};

/// IDF over the GT references of `scene_ids`.
IdfTable idf_for(const Corpus& corpus, std::span<const int> scene_ids);

/// What the engine asks of a teacher. Each call may fail (nullopt) when a
/// human teacher times out; nothing is charged in that case.
class TeacherChannel {
 public:
  virtual ~TeacherChannel() = default;
  virtual std::optional<WordId> answer(const Scene& scene, const Question& q) = 0;
  /// One reward per candidate.
  virtual std::optional<std::vector<double>> score(const Scene& scene,
                                                   std::span<const Caption> candidates) = 0;
  virtual std::optional<std::vector<Caption>> write(const Scene& scene, int m) = 0;
  virtual bool human() const = 0;
  virtual void set_progress(const nlohmann::json& /*progress*/) {}
};

class SyntheticChannel : public TeacherChannel {
 public:
  explicit SyntheticChannel(Teacher& teacher) : teacher_(teacher) {}

  std::optional<WordId> answer(const Scene& scene, const Question& q) override;
  std::optional<std::vector<double>> score(const Scene& scene,
                                           std::span<const Caption> candidates) override;
  std::optional<std::vector<Caption>> write(const Scene& scene, int m) override;
  bool human() const override { return false; }

 private:
  Teacher& teacher_;
  SupervisionLedger scratch_;
};

}  // namespace askcap
