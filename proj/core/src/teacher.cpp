// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/teacher.hpp"

#include <algorithm>
#include <stdexcept>

#include "askcap/seed.hpp"

namespace askcap {

std::string caption_key(int scene_id, TokenSpan caption) {
  std::string key = std::to_string(scene_id) + ':';
  for (std::size_t i = 0; i < caption.size(); ++i) {
    if (i > 0) key += ',';
    key += std::to_string(caption[i]);
  }
  return key;
}

bool SupervisionLedger::charge_scoring(int scene_id, std::span<const Tokens> captions) {
  bool fresh = false;
  for (const auto& c : captions) fresh |= scored_keys_.insert(caption_key(scene_id, c)).second;
  if (fresh) ++scored_;
  return fresh;
}

bool SupervisionLedger::charge_scoring(int scene_id, TokenSpan caption) {
  const Tokens one(caption.begin(), caption.end());
  return charge_scoring(scene_id, std::span<const Tokens>(&one, 1));
}

bool SupervisionLedger::charge_answer(int scene_id, const std::string& question, bool human) {
  const bool fresh = answered_keys_.insert(std::to_string(scene_id) + ':' + question).second;
  if (!fresh || !human) return false;
  ++answered_human_;
  return true;
}

void SupervisionLedger::charge_writes(int count) {
  if (count < 0) throw std::invalid_argument("negative write count");
  written_ += count;
}

nlohmann::json SupervisionLedger::to_json() const {
  return {{"written", written_},
          {"scored", scored_},
          {"answered_human", answered_human_},
          {"total", total()},
          {"scored_keys", scored_keys_},
          {"answered_keys", answered_keys_}};
}

SupervisionLedger SupervisionLedger::from_json(const nlohmann::json& j) {
  SupervisionLedger l;
  l.written_ = j.at("written").get<int>();
  l.scored_ = j.at("scored").get<int>();
  l.answered_human_ = j.at("answered_human").get<int>();
  l.scored_keys_ = j.at("scored_keys").get<std::set<std::string>>();
  l.answered_keys_ = j.at("answered_keys").get<std::set<std::string>>();
  return l;
}

IdfTable idf_for(const Corpus& corpus, std::span<const int> scene_ids) {
  std::vector<std::vector<Tokens>> pools;
  pools.reserve(scene_ids.size());
  for (int id : scene_ids) {
    std::vector<Tokens> pool;
    for (const auto& c : corpus.refs(id)) pool.push_back(c.tokens);
    pools.push_back(std::move(pool));
  }
  return IdfTable::build(pools);
}

Teacher::Teacher(std::shared_ptr<const Corpus> corpus, TeacherConfig config, IdfTable idf)
    : corpus_(std::move(corpus)), config_(std::move(config)), idf_(std::move(idf)) {
  if (!corpus_) throw std::invalid_argument("Teacher needs a corpus");
  if (config_.epsilon < 0.0 || config_.epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
  config_.weights.validate();
  stems_ = StemTable::from_vocabulary(corpus_->vocab);
  for (std::size_t i = 0; i < corpus_->scenes.size(); ++i) {
    std::vector<Tokens> refs;
    for (const auto& c : corpus_->references[i]) refs.push_back(c.tokens);
    refs_.emplace(corpus_->scenes[i].id, ReferenceSet(std::move(refs)));
  }
}

WordId Teacher::true_answer(const Question& q, const Scene& scene) const {
  const Vocabulary& vocab = corpus_->vocab;
  std::optional<int> idx = q.referent.noun
                               ? scene.object_with_category(corpus_->canonical(*q.referent.noun))
                               : scene.object_at_slot(q.referent.slot);
  if (!idx) return Vocabulary::kUnk;
  const SceneObject& o = scene.objects[static_cast<std::size_t>(*idx)];
  auto lookup = [&](std::string_view word) { return vocab.find(word).value_or(Vocabulary::kUnk); };
  switch (q.qtype) {
    case QuestionType::kWhatObject:
      return o.category;
    case QuestionType::kWhatAction:
      return o.action.value_or(Vocabulary::kUnk);
    case QuestionType::kWhatAttribute:
      return o.attributes.empty() ? Vocabulary::kUnk : o.attributes.front();
    case QuestionType::kHowMany: {
      const auto n = std::count_if(scene.objects.begin(), scene.objects.end(),
                                   [&](const SceneObject& x) { return x.category == o.category; });
      return n >= 1 && n <= 4 ? lookup(number_word(static_cast<int>(n))) : Vocabulary::kUnk;
    }
    case QuestionType::kWhere:
      return o.slot >= 0 && o.slot < Lexicon::kMaxSlots ? lookup(slot_adverb(o.slot)) : Vocabulary::kUnk;
  }
  return Vocabulary::kUnk;
}

WordId Teacher::answer(const Question& q, const Scene& scene, Rng& rng) const {
  const WordId truth = true_answer(q, scene);
  if (truth == Vocabulary::kUnk) return truth;
  if (!std::bernoulli_distribution(config_.epsilon)(rng)) return truth;
  std::vector<WordId> pool = corpus_->vocab.words_with_pos(corpus_->vocab.pos(truth));
  std::erase(pool, truth);
  if (pool.empty()) return truth;
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

WordId Teacher::consistent_answer(const Question& q, const Scene& scene) const {
  Rng rng(derive_seed(config_.seed, {fnv1a("answer"), static_cast<std::uint64_t>(scene.id),
                                     fnv1a(q.text())}));
  return answer(q, scene, rng);
}

double Teacher::reward(int scene_id, TokenSpan caption) const {
  const auto it = refs_.find(scene_id);
  if (it == refs_.end()) throw std::out_of_range("no references for scene " + std::to_string(scene_id));
  return mix_score(caption, it->second, idf_, config_.weights, &stems_);
}

double Teacher::score(int scene_id, TokenSpan caption, SupervisionLedger& ledger) const {
  const double r = reward(scene_id, caption);
  ledger.charge_scoring(scene_id, caption);
  return r;
}

std::vector<Caption> Teacher::write_captions(int scene_id, int m, SupervisionLedger& ledger,
                                             Rng& rng) {
  const auto& refs = corpus_->refs(scene_id);
  if (refs.empty()) throw std::invalid_argument("scene has no GT captions");
  auto& issued = issued_[scene_id];
  std::vector<Caption> out;
  for (int i = 0; i < m; ++i) {
    std::vector<int> fresh;
    for (int k = 0; k < static_cast<int>(refs.size()); ++k) {
      if (std::find(issued.begin(), issued.end(), k) == issued.end()) fresh.push_back(k);
    }
    int pick;
    if (!fresh.empty()) {
      pick = fresh[std::uniform_int_distribution<std::size_t>(0, fresh.size() - 1)(rng)];
      issued.push_back(pick);
    } else {
      pick = std::uniform_int_distribution<int>(0, static_cast<int>(refs.size()) - 1)(rng);
    }
    Caption c = refs[static_cast<std::size_t>(pick)];
    c.source = CaptionSource::kGt;
    out.push_back(std::move(c));
  }
  ledger.charge_writes(m);
  return out;
}

std::optional<WordId> SyntheticChannel::answer(const Scene& scene, const Question& q) {
  return teacher_.consistent_answer(q, scene);
}

std::optional<std::vector<double>> SyntheticChannel::score(const Scene& scene,
                                                           std::span<const Caption> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(teacher_.reward(scene.id, c.tokens));
  return out;
}

std::optional<std::vector<Caption>> SyntheticChannel::write(const Scene& scene, int m) {
  const auto it = teacher_.issued().find(scene.id);
  const std::uint64_t issued = it == teacher_.issued().end() ? 0 : it->second.size();
  Rng rng(derive_seed(teacher_.config().seed,
                      {fnv1a("write"), static_cast<std::uint64_t>(scene.id), issued}));
  return teacher_.write_captions(scene.id, m, scratch_, rng);
}

}  // namespace askcap
