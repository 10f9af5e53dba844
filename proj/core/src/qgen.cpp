// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/qgen.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace askcap {

namespace {

constexpr std::array<std::string_view, 5> kTypeNames = {"WHAT_OBJECT", "WHAT_ACTION",
                                                        "WHAT_ATTRIBUTE", "HOW_MANY", "WHERE"};

bool usable_noun(const Caption& caption, std::size_t i, WordId target, const Vocabulary& vocab) {
  const WordId w = caption.tokens[i];
  return vocab.pos(w) == Pos::kNoun && w != target && !vocab.is_special(w);
}

std::optional<WordId> noun_before(const Caption& c, int t, WordId target, const Vocabulary& v) {
  for (int i = t - 1; i >= 0; --i) {
    if (usable_noun(c, static_cast<std::size_t>(i), target, v)) return c.tokens[static_cast<std::size_t>(i)];
  }
  return std::nullopt;
}

std::optional<WordId> noun_after(const Caption& c, int t, WordId target, const Vocabulary& v) {
  for (std::size_t i = static_cast<std::size_t>(t) + 1; i < c.tokens.size(); ++i) {
    if (usable_noun(c, i, target, v)) return c.tokens[i];
  }
  return std::nullopt;
}

std::optional<WordId> first_noun(const Caption& c, WordId target, const Vocabulary& v) {
  for (std::size_t i = 0; i < c.tokens.size(); ++i) {
    if (usable_noun(c, i, target, v)) return c.tokens[i];
  }
  return std::nullopt;
}

using Words = std::vector<std::string>;

Words slot_phrase(int slot) { return {"object", "in", "slot", std::to_string(slot)}; }

Words render(QuestionType type, const QuestionReferent& ref, const Vocabulary& vocab) {
  Words subject;
  if (ref.noun) {
    subject = {"this", vocab.word(*ref.noun)};
  } else {
    subject = slot_phrase(ref.slot);
    subject.insert(subject.begin(), "this");
  }
  auto cat = [](Words a, const Words& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  switch (type) {
    case QuestionType::kWhatObject:
      return {"what", "object", "occupies", "slot", std::to_string(ref.slot)};
    case QuestionType::kWhatAction:
      return cat(cat({"what", "does"}, subject), {"do"});
    case QuestionType::kWhatAttribute:
      return cat(cat({"what", "does"}, subject), {"look", "like"});
    case QuestionType::kHowMany:
      return cat(cat({"how", "many", "of"}, subject), {"appear"});
    case QuestionType::kWhere:
      return cat({"where", "does"}, cat(subject, {"appear"}));
  }
  return {};
}

}  // namespace

std::string_view to_string(QuestionType type) {
  return kTypeNames.at(static_cast<std::size_t>(type));
}

std::optional<QuestionType> parse_question_type(std::string_view text) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == text) return static_cast<QuestionType>(i);
  }
  return std::nullopt;
}

QuestionType question_type_for(Pos pos) {
  switch (pos) {
    case Pos::kNoun: return QuestionType::kWhatObject;
    case Pos::kVerb: return QuestionType::kWhatAction;
    case Pos::kAdj: return QuestionType::kWhatAttribute;
    case Pos::kNum: return QuestionType::kHowMany;
    case Pos::kAdv: return QuestionType::kWhere;
    case Pos::kOther: break;
  }
  throw std::invalid_argument("POS is not askable");
}

Pos answer_pos(QuestionType type) {
  switch (type) {
    case QuestionType::kWhatObject: return Pos::kNoun;
    case QuestionType::kWhatAction: return Pos::kVerb;
    case QuestionType::kWhatAttribute: return Pos::kAdj;
    case QuestionType::kHowMany: return Pos::kNum;
    case QuestionType::kWhere: return Pos::kAdv;
  }
  return Pos::kOther;
}

std::string Question::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

Question generate_question(const Scene& scene, const Caption& caption, const StepContext& ctx,
                           const Vocabulary& vocab) {
  const Pos pos = ctx.predicted_pos();
  Question q;
  q.qtype = question_type_for(pos);
  q.target_pos = pos;
  q.target_step = ctx.t;
  if (ctx.t < 0 || static_cast<std::size_t>(ctx.t) >= caption.tokens.size()) {
    throw std::out_of_range("question step outside the caption");
  }
  if (scene.objects.empty()) throw std::invalid_argument("scene has no objects");

  Eigen::Index attended = 0;
  if (ctx.attention.size() == static_cast<Eigen::Index>(scene.objects.size())) {
    attended = argmax_lowest(ctx.attention);
  }
  q.referent.slot = scene.objects[static_cast<std::size_t>(attended)].slot;

  const WordId target = caption.tokens[static_cast<std::size_t>(ctx.t)];
  switch (q.qtype) {
    case QuestionType::kWhatObject:
      break;
    case QuestionType::kWhatAction:
      q.referent.noun = first_noun(caption, target, vocab);
      break;
    case QuestionType::kWhatAttribute:
    case QuestionType::kWhere:
      q.referent.noun = noun_before(caption, ctx.t, target, vocab);
      if (!q.referent.noun) q.referent.noun = noun_after(caption, ctx.t, target, vocab);
      break;
    case QuestionType::kHowMany:
      q.referent.noun = noun_after(caption, ctx.t, target, vocab);
      if (!q.referent.noun) q.referent.noun = noun_before(caption, ctx.t, target, vocab);
      break;
  }

  const std::string& target_word = vocab.word(target);
  q.tokens = render(q.qtype, q.referent, vocab);
  for (auto& token : q.tokens) {
    if (token == target_word) token = "?";
  }
  if (q.tokens.size() > static_cast<std::size_t>(kMaxQuestionLength)) {
    q.tokens.resize(static_cast<std::size_t>(kMaxQuestionLength));
  }
  return q;
}

}  // namespace askcap
