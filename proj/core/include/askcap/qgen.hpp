// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "askcap/captioner.hpp"
#include "askcap/world.hpp"

namespace askcap {

inline constexpr int kMaxQuestionLength = 14;

enum class QuestionType : std::uint8_t { kWhatObject, kWhatAction, kWhatAttribute, kHowMany, kWhere };

std::string_view to_string(QuestionType type);
std::optional<QuestionType> parse_question_type(std::string_view text);

/// NOUN, VERB, ADJ, NUM and ADV map to one question type each; throws
/// std::invalid_argument for non-askable tags.
QuestionType question_type_for(Pos pos);
/// POS of the answer a question of this type asks for.
Pos answer_pos(QuestionType type);

/// What the question points at: a noun named in the caption, or a scene slot
/// when no usable noun exists.
struct QuestionReferent {
  std::optional<WordId> noun;
  int slot = 0;

  friend bool operator==(const QuestionReferent&, const QuestionReferent&) = default;
};

struct Question {
  std::vector<std::string> tokens;
  Pos target_pos = Pos::kNoun;
  int target_step = 0;
  QuestionType qtype = QuestionType::kWhatObject;
  QuestionReferent referent;

  std::string text() const;
  friend bool operator==(const Question&, const Question&) = default;
};

/// Template question about the word at ctx.t. The question type follows the
/// argmax of ctx.pos_dist; slot references use the most attended object.
/// Throws std::invalid_argument when that POS is not askable.
Question generate_question(const Scene& scene, const Caption& caption, const StepContext& ctx,
                           const Vocabulary& vocab);

}  // namespace askcap
