// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/vocabulary.hpp"

#include <array>

namespace askcap {

namespace {
constexpr std::array<std::string_view, kNumPos> kPosNames = {"NOUN", "VERB", "ADJ",
                                                            "NUM",  "ADV",  "OTHER"};
}

std::string_view to_string(Pos pos) { return kPosNames[static_cast<std::size_t>(pos)]; }

std::optional<Pos> parse_pos(std::string_view text) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i) {
    if (kPosNames[i] == text) return static_cast<Pos>(i);
  }
  return std::nullopt;
}

Vocabulary::Vocabulary() {
  add("<bos>", Pos::kOther);
  add("<eos>", Pos::kOther);
  add("<unk>", Pos::kOther);
}

WordId Vocabulary::add(std::string word, Pos pos) {
  if (auto it = index_.find(word); it != index_.end()) {
    if (tags_[static_cast<std::size_t>(it->second)] != pos) {
      throw ConfigError("word '" + word + "' already present with a different POS tag");
    }
    return it->second;
  }
  const auto id = static_cast<WordId>(words_.size());
  index_.emplace(word, id);
  words_.push_back(std::move(word));
  tags_.push_back(pos);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  return std::nullopt;
}

WordId Vocabulary::id(std::string_view word) const {
  if (auto found = find(word)) return *found;
  throw std::out_of_range("word not in vocabulary: " + std::string(word));
}

WordId Vocabulary::id_or_unk(std::string_view word) const { return find(word).value_or(kUnk); }

std::vector<WordId> Vocabulary::words_with_pos(Pos pos) const {
  std::vector<WordId> out;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (tags_[i] == pos && !is_special(static_cast<WordId>(i))) out.push_back(static_cast<WordId>(i));
  }
  return out;
}

std::string Vocabulary::join(const std::vector<WordId>& tokens) const {
  std::string out;
  for (const auto t : tokens) {
    if (!out.empty()) out += ' ';
    out += contains(t) ? word(t) : std::string("<?>");
  }
  return out;
}

}  // namespace askcap
