// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "askcap/captioner.hpp"
#include "askcap/decision.hpp"
#include "askcap/metrics.hpp"
#include "askcap/qgen.hpp"
#include "askcap/teacher.hpp"
#include "askcap/world.hpp"

namespace askcap {

enum class StudentMode { kInquisitive, kMute, kEqualGt, kAllGt };
enum class DmStrategy { kLearned, kRandom, kMaxEntropy, kClosenessScore, kNever };

std::string_view to_string(StudentMode mode);
std::optional<StudentMode> parse_student_mode(std::string_view text);
std::string_view to_string(DmStrategy strategy);
std::optional<DmStrategy> parse_dm_strategy(std::string_view text);

struct ExperimentConfig {
  WorldConfig world;
  /// Extra held-out scenes generated after the training split, used only for
  /// evaluation.
  int eval_scenes = 100;
  double warmup_fraction = 0.10;
  int chunks = 3;
  int h_percent = 70;
  int m = 2;
  int questions = 1;  // N
  int passes_inquisitive = 8;
  int passes_mute = 4;
  double mute_temperature = 1.0;
  double jitter_temperature = 0.05;
  StudentMode mode = StudentMode::kInquisitive;
  DmStrategy dm = DmStrategy::kLearned;
  double dm_lr = 2e-5;
  int dm_hidden = 16;
  double dm_init_scale = 0.1;
  double lambda_quantile = 0.9;
  TeacherConfig teacher;
  TrainConfig train;
  std::uint64_t seed = 1;

  /// Throws ConfigError when a field is outside its allowed range.
  void validate() const;
};

/// One teacher-scored caption.
struct Candidate {
  Caption caption;
  double reward = 0.0;
};

/// One question-answer step inside a SeekTeacher call.
struct AskRecord {
  int step = kNoAsk;
  double log_prob = 0.0;
  bool sampled = false;
  std::optional<Question> question;
  WordId answer = Vocabulary::kUnk;
  std::vector<std::pair<WordId, double>> top10;  // captioner's top words at the ask step
  bool charged_answer = false;
};

/// A SeekTeacher call (inquisitive) or a sample-and-score step (mute).
/// candidates[0] is the base caption w^0; each question adds a rollout and a
/// replace candidate; mute interactions add one sampled caption.
struct Interaction {
  int round = 0;
  int pass = 0;
  int scene_id = 0;
  bool sampled_branch = false;
  std::vector<Candidate> candidates;
  std::vector<AskRecord> asks;
  int chosen = 0;
  bool charged_score = false;

  const Candidate& best() const { return candidates.at(static_cast<std::size_t>(chosen)); }
  double r0() const { return candidates.front().reward; }
  bool improved() const { return best().reward > r0(); }
};

/// How the decision module picks the step to ask about.
struct AskPolicy {
  DmStrategy strategy = DmStrategy::kLearned;
  const PolicyParams* policy = nullptr;
  ChooseMode mode = ChooseMode::kGreedy;
};

/// Everything SeekTeacher needs, bundled.
struct AgentView {
  const Captioner& captioner;
  const Corpus& corpus;
  TeacherChannel& teacher;
  SupervisionLedger& ledger;
};

/// Runs one SeekTeacher call on a decoded base caption. Returns nullopt when
/// the teacher timed out; nothing is charged in that case.
/// `features`, when given, receives the decision features behind each ask.
std::optional<Interaction> seek_teacher(const AgentView& agent, const Scene& scene,
                                        const Decoded& base, const AskPolicy& policy,
                                        int questions, Rng& rng,
                                        std::vector<DecisionFeatures>* features = nullptr);

/// Picks the best of {previous best, rollout, replace}; earlier entries win ties.
int max_of_three(double previous, double rollout, double replace);

struct CollectionResult {
  std::vector<Interaction> buffer;
  int dm_updates = 0;
};

struct CollectionOptions {
  int round = 1;
  int passes = 8;
  bool mute = false;
  double jitter_temperature = 0.05;
  double mute_temperature = 1.0;
  int questions = 1;
  DmStrategy strategy = DmStrategy::kLearned;
  double dm_lr = 2e-5;
  std::uint64_t seed = 1;
  int max_requeues = 3;
  std::function<void(const nlohmann::json&)> progress;
};

/// Collection phase over one chunk. `policy` is updated online (inquisitive,
/// learned strategy) in scene order.
CollectionResult collection_phase(const AgentView& agent, std::span<const int> chunk,
                                  PolicyParams& policy, const CollectionOptions& options);

struct SceneRanking {
  int scene_id = 0;
  std::vector<Candidate> top;  // up to m distinct captions, best first
  double mean = 0.0;
};

struct KeepResult {
  std::vector<SceneRanking> kept;
  std::vector<int> gave_up;
  std::vector<TrainItem> collected;  // weight = teacher reward
  std::map<int, std::vector<Caption>> written;
};

/// Ranks chunk scenes by their mean top-m reward (ties: lower scene id first).
std::vector<SceneRanking> rank_scenes(std::span<const Interaction> buffer, std::span<const int> chunk,
                                      int m);
int kept_count(int scenes, int h_percent);

/// Keeps the top H% of scenes and buys m GT captions for the rest. Returns
/// nullopt if the teacher times out while writing.
std::optional<KeepResult> keep_best_and_give_up(std::span<const Interaction> buffer,
                                                std::span<const int> chunk, int h_percent, int m,
                                                const Corpus& corpus, TeacherChannel& teacher,
                                                SupervisionLedger& ledger);

/// Nearest-rank quantile: the ceil(q n)-th smallest value.
double nearest_rank_quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Round statistics

struct RoundStats {
  int round = 0;
  std::string mode;
  std::uint64_t seed = 0;
  double mix = 0.0, cider = 0.0, bleu4 = 0.0, rouge = 0.0, meteor = 0.0;
  double supervision_total = 0.0;
  int gt_captions_used = 0;
  std::optional<double> atop3, atop5, atop10;  // percent
  std::optional<double> improved_pct;
  int uniq_nouns = 0, uniq_verbs = 0, uniq_adjs = 0;
  std::optional<double> mean_collected_reward;
  std::array<int, kNumPos> answer_pos_hist{};
  int questions_asked = 0;
  double lambda = 0.0;

  friend bool operator==(const RoundStats&, const RoundStats&) = default;
};

/// Collection statistics (ATop-k, improved %, answer POS histogram, mean
/// reward) from a round's interactions.
void collection_stats(std::span<const Interaction> buffer, const Vocabulary& vocab, RoundStats& out);
/// Unique words by POS over greedy evaluation captions.
void vocabulary_stats(std::span<const Caption> eval_captions, RoundStats& out);

std::vector<std::string> results_header();
std::vector<std::string> results_row(const RoundStats& s);
void write_results_csv(const std::filesystem::path& path, std::span<const RoundStats> rows);

// ---------------------------------------------------------------------------
// Lifetime

struct EvalResult {
  MetricScores mean;
  double mix = 0.0;
  std::vector<Caption> captions;
};

/// Greedy-decodes every eval scene and averages its metrics against the eval
/// references (IDF from those references).
EvalResult evaluate(const Captioner& captioner, const Corpus& corpus, std::span<const int> eval_ids,
                    const IdfTable& idf, const MixWeights& weights);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  bool resume = false;
  /// Stops after this round (simulates an interruption); -1 runs to the end.
  int stop_after_round = -1;
  /// Reuses a previously trained warmup model with the same seed and config.
  std::optional<CaptionerParams> warmup;
  TeacherChannel* channel = nullptr;  // defaults to the synthetic teacher
  std::function<void(const std::string&)> log;
};

struct LifetimeResult {
  CaptionerParams params;
  PolicyParams policy;
  std::vector<RoundStats> rounds;  // round 0 is the warmup model
  SupervisionLedger ledger;
  std::vector<std::vector<Interaction>> buffers;  // per lifetime round
  CaptionerParams warmup;
  bool completed = true;
};

/// Everything a run derives from its config before learning starts.
struct RunSetup {
  std::shared_ptr<const Corpus> corpus;
  std::vector<int> train_ids;
  std::vector<int> eval_ids;
  ChunkPlan plan;
  FeatureLayout layout;
  IdfTable teacher_idf;
  IdfTable eval_idf;
};

RunSetup prepare_run(const ExperimentConfig& config);

LifetimeResult run_lifetime(const ExperimentConfig& config, const RunOptions& options = {});
LifetimeResult run_lifetime(const ExperimentConfig& config, const RunSetup& setup,
                            const RunOptions& options);

}  // namespace askcap
