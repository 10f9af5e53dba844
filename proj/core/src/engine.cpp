// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "askcap/seed.hpp"

namespace askcap {

namespace {

constexpr std::array<std::string_view, 4> kModeNames = {"inquisitive", "mute", "equal_gt", "all_gt"};
constexpr std::array<std::string_view, 5> kStrategyNames = {"learned", "random", "max_entropy",
                                                            "closeness_score", "never"};

AskDecision decide(const AskPolicy& policy, const DecisionFeatures& features, Rng& rng) {
  switch (policy.strategy) {
    case DmStrategy::kLearned:
      if (policy.policy == nullptr) throw std::invalid_argument("learned strategy needs a policy");
      return choose(*policy.policy, features, policy.mode, rng);
    case DmStrategy::kRandom:
      return heuristic_choose(features, Heuristic::kRandom, rng);
    case DmStrategy::kMaxEntropy:
      return heuristic_choose(features, Heuristic::kMaxEntropy, rng);
    case DmStrategy::kClosenessScore:
      return heuristic_choose(features, Heuristic::kClosenessScore, rng);
    case DmStrategy::kNever:
      break;
  }
  return {kNoAsk, 0.0, false};
}

}  // namespace

std::string_view to_string(StudentMode mode) { return kModeNames.at(static_cast<std::size_t>(mode)); }

std::optional<StudentMode> parse_student_mode(std::string_view text) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == text) return static_cast<StudentMode>(i);
  }
  return std::nullopt;
}

std::string_view to_string(DmStrategy strategy) {
  return kStrategyNames.at(static_cast<std::size_t>(strategy));
}

std::optional<DmStrategy> parse_dm_strategy(std::string_view text) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i) {
    if (kStrategyNames[i] == text) return static_cast<DmStrategy>(i);
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("warmup_fraction must be in (0, 1)");
  }
  if (chunks < 1) throw ConfigError("chunks must be at least 1");
  if (h_percent < 0 || h_percent > 100) throw ConfigError("h_percent must be in [0, 100]");
  if (m < 1) throw ConfigError("m must be at least 1");
  if (questions < 0) throw ConfigError("questions must be nonnegative");
  if (passes_inquisitive < 1 || passes_mute < 1) throw ConfigError("passes must be at least 1");
  if (!(mute_temperature > 0.0) || !(jitter_temperature > 0.0)) {
    throw ConfigError("temperatures must be positive");
  }
  if (eval_scenes < 1) throw ConfigError("eval_scenes must be at least 1");
  if (!(lambda_quantile > 0.0 && lambda_quantile <= 1.0)) {
    throw ConfigError("lambda_quantile must be in (0, 1]");
  }
  if (dm_hidden < 1) throw ConfigError("dm_hidden must be at least 1");
  if (teacher.epsilon < 0.0 || teacher.epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
  teacher.weights.validate();
  if (world.num_scenes < 1) throw ConfigError("num_scenes must be at least 1");
}

int max_of_three(double previous, double rollout, double replace) {
  int best = 0;
  double r = previous;
  if (rollout > r) {
    best = 1;
    r = rollout;
  }
  if (replace > r) best = 2;
  return best;
}

std::optional<Interaction> seek_teacher(const AgentView& agent, const Scene& scene,
                                        const Decoded& base, const AskPolicy& policy,
                                        int questions, Rng& rng,
                                        std::vector<DecisionFeatures>* features) {
  const Vocabulary& vocab = agent.corpus.vocab;
  const auto embeddings = agent.captioner.params().view(CaptionerParams::kOutputEmbedding);
  Interaction it;
  it.scene_id = scene.id;
  it.sampled_branch = policy.mode == ChooseMode::kSample;

  const auto r0 = agent.teacher.score(scene, std::span<const Caption>(&base.caption, 1));
  if (!r0) return std::nullopt;
  it.candidates.push_back({base.caption, r0->front()});

  Decoded current = base;
  std::vector<std::string> asked;
  for (int n = 0; n < questions; ++n) {
    DecisionFeatures f = featurize(current.contexts, current.caption, embeddings);
    const AskDecision d = decide(policy, f, rng);
    if (features != nullptr) features->push_back(std::move(f));
    AskRecord rec;
    rec.step = d.t;
    rec.log_prob = d.log_prob;
    rec.sampled = d.sampled;
    if (d.t == kNoAsk) {
      it.asks.push_back(std::move(rec));
      break;
    }
    const StepContext& ctx = current.contexts.at(static_cast<std::size_t>(d.t));
    Question q = generate_question(scene, current.caption, ctx, vocab);
    const auto answer = agent.teacher.answer(scene, q);
    if (!answer) return std::nullopt;
    rec.answer = *answer;
    rec.top10 = top_k(ctx.probs, 10);

    Decoded rollout = agent.captioner.rollout_from(scene, current, d.t, *answer);
    Caption replace = replace_word(current.caption, d.t, *answer, vocab);
    const std::array<Caption, 2> pair = {rollout.caption, replace};
    const auto rewards = agent.teacher.score(scene, pair);
    if (!rewards) return std::nullopt;
    asked.push_back(q.text());
    rec.question = std::move(q);
    it.asks.push_back(std::move(rec));

    const int pick = max_of_three(it.best().reward, (*rewards)[0], (*rewards)[1]);
    it.candidates.push_back({rollout.caption, (*rewards)[0]});
    it.candidates.push_back({replace, (*rewards)[1]});
    if (pick == 1) {
      it.chosen = static_cast<int>(it.candidates.size()) - 2;
      current = std::move(rollout);
    } else if (pick == 2) {
      it.chosen = static_cast<int>(it.candidates.size()) - 1;
      current = agent.captioner.teacher_force(scene, replace);
    }
  }

  std::vector<Tokens> scored;
  for (const auto& c : it.candidates) scored.push_back(c.caption.tokens);
  it.charged_score = agent.ledger.charge_scoring(scene.id, scored);
  std::size_t k = 0;
  for (auto& rec : it.asks) {
    if (rec.question) rec.charged_answer = agent.ledger.charge_answer(scene.id, asked[k++], agent.teacher.human());
  }
  return it;
}

CollectionResult collection_phase(const AgentView& agent, std::span<const int> chunk,
                                  PolicyParams& policy, const CollectionOptions& options) {
  CollectionResult result;
  for (int pass = 0; pass < options.passes; ++pass) {
    std::deque<std::pair<int, int>> queue;  // (scene id, attempts)
    for (int id : chunk) queue.emplace_back(id, 0);
    int done = 0;
    while (!queue.empty()) {
      const auto [scene_id, attempts] = queue.front();
      queue.pop_front();
      const Scene& scene = agent.corpus.scene(scene_id);
      Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(options.round),
                                         static_cast<std::uint64_t>(pass),
                                         static_cast<std::uint64_t>(scene_id)}));
      const Decoded base = pass == 0 ? agent.captioner.decode_greedy(scene)
                                     : agent.captioner.decode_sample_with_contexts(
                                           scene, options.jitter_temperature, rng);
      bool ok = true;
      if (options.mute) {
        Caption sample = agent.captioner.decode_sample(scene, options.mute_temperature, rng);
        sample.source = CaptionSource::kSampled;
        const std::array<Caption, 2> pair = {base.caption, sample};
        const auto rewards = agent.teacher.score(scene, pair);
        if (rewards) {
          Interaction it;
          it.round = options.round;
          it.pass = pass;
          it.scene_id = scene_id;
          it.sampled_branch = true;
          it.candidates = {{base.caption, (*rewards)[0]}, {sample, (*rewards)[1]}};
          it.chosen = (*rewards)[1] > (*rewards)[0] ? 1 : 0;
          const std::array<Tokens, 2> scored = {base.caption.tokens, sample.tokens};
          it.charged_score = agent.ledger.charge_scoring(scene_id, scored);
          result.buffer.push_back(std::move(it));
        } else {
          ok = false;
        }
      } else {
        std::vector<DecisionFeatures> features;
        auto sampled = seek_teacher(agent, scene, base,
                                    {options.strategy, &policy, ChooseMode::kSample},
                                    options.questions, rng, &features);
        std::optional<Interaction> greedy;
        if (sampled) {
          greedy = seek_teacher(agent, scene, base, {options.strategy, &policy, ChooseMode::kGreedy},
                                options.questions, rng);
        }
        if (sampled && greedy) {
          if (options.strategy == DmStrategy::kLearned && !features.empty()) {
            const double r = sampled->best().reward;
            const double r_star = greedy->best().reward;
            for (std::size_t n = 0; n < sampled->asks.size(); ++n) {
              const auto& a = sampled->asks[n];
              reinforce_update(policy, {a.step, a.log_prob, true}, r, r_star, features[n], options.dm_lr);
            }
            ++result.dm_updates;
          }
          for (auto* it : {&*sampled, &*greedy}) {
            it->round = options.round;
            it->pass = pass;
            result.buffer.push_back(std::move(*it));
          }
        } else {
          ok = false;
        }
      }
      if (!ok && attempts + 1 <= options.max_requeues) queue.emplace_back(scene_id, attempts + 1);
      ++done;
      if (options.progress) {
        options.progress({{"round", options.round},
                          {"pass", pass},
                          {"scenes_done", done},
                          {"chunk_size", chunk.size()},
                          {"ledger_total", agent.ledger.total()}});
      }
    }
  }
  return result;
}

std::vector<SceneRanking> rank_scenes(std::span<const Interaction> buffer, std::span<const int> chunk,
                                      int m) {
  std::map<int, std::map<Tokens, std::pair<double, Caption>>> distinct;
  for (const auto& it : buffer) {
    const Candidate& best = it.best();
    auto& slot = distinct[it.scene_id];
    auto found = slot.find(best.caption.tokens);
    if (found == slot.end()) {
      slot.emplace(best.caption.tokens, std::make_pair(best.reward, best.caption));
    } else if (best.reward > found->second.first) {
      found->second.first = best.reward;
    }
  }
  std::vector<SceneRanking> out;
  for (int id : chunk) {
    SceneRanking r;
    r.scene_id = id;
    if (auto it = distinct.find(id); it != distinct.end()) {
      for (const auto& [tokens, entry] : it->second) r.top.push_back({entry.second, entry.first});
      std::stable_sort(r.top.begin(), r.top.end(), [](const Candidate& a, const Candidate& b) {
        return a.reward > b.reward;
      });
      if (r.top.size() > static_cast<std::size_t>(m)) r.top.resize(static_cast<std::size_t>(m));
    }
    if (r.top.empty()) {
      r.mean = -std::numeric_limits<double>::infinity();
    } else {
      double sum = 0.0;
      for (const auto& c : r.top) sum += c.reward;
      r.mean = sum / static_cast<double>(r.top.size());
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const SceneRanking& a, const SceneRanking& b) {
    return a.mean > b.mean || (a.mean == b.mean && a.scene_id < b.scene_id);
  });
  return out;
}

int kept_count(int scenes, int h_percent) {
  return static_cast<int>(std::lround(static_cast<double>(h_percent) * scenes / 100.0));
}

std::optional<KeepResult> keep_best_and_give_up(std::span<const Interaction> buffer,
                                                std::span<const int> chunk, int h_percent, int m,
                                                const Corpus& corpus, TeacherChannel& teacher,
                                                SupervisionLedger& ledger) {
  std::vector<SceneRanking> ranking = rank_scenes(buffer, chunk, m);
  const auto keep = static_cast<std::size_t>(kept_count(static_cast<int>(chunk.size()), h_percent));
  KeepResult out;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (i < keep && !ranking[i].top.empty()) {
      for (const auto& c : ranking[i].top) {
        out.collected.push_back({ranking[i].scene_id, c.caption, c.reward});
        out.collected.back().caption.reward = c.reward;
      }
      out.kept.push_back(std::move(ranking[i]));
    } else {
      out.gave_up.push_back(ranking[i].scene_id);
    }
  }
  std::sort(out.gave_up.begin(), out.gave_up.end());
  for (int id : out.gave_up) {
    auto written = teacher.write(corpus.scene(id), m);
    if (!written) return std::nullopt;
    ledger.charge_writes(static_cast<int>(written->size()));
    out.written.emplace(id, std::move(*written));
  }
  return out;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

}  // namespace askcap
