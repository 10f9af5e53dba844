// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace askcap {

/// Coarse part-of-speech tag. Every vocabulary word carries exactly one.
enum class Pos : std::uint8_t { kNoun, kVerb, kAdj, kNum, kAdv, kOther };

inline constexpr int kNumPos = 6;

/// True for the tags a question may target (everything but OTHER).
constexpr bool askable(Pos pos) { return pos != Pos::kOther; }

std::string_view to_string(Pos pos);
std::optional<Pos> parse_pos(std::string_view text);

using WordId = int;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense word <-> id map with a fixed POS tag per word. Ids 0..2 are the
/// special tokens BOS, EOS and UNK.
class Vocabulary {
 public:
  static constexpr WordId kBos = 0;
  static constexpr WordId kEos = 1;
  static constexpr WordId kUnk = 2;

  Vocabulary();

  /// Adds a word, or returns the existing id when the word is already present
  /// with the same tag. Re-adding with a different tag throws ConfigError.
  WordId add(std::string word, Pos pos);

  std::optional<WordId> find(std::string_view word) const;
  /// Like find() but throws std::out_of_range for unknown words.
  WordId id(std::string_view word) const;
  /// Unknown words map to UNK.
  WordId id_or_unk(std::string_view word) const;

  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  Pos pos(WordId id) const { return tags_.at(static_cast<std::size_t>(id)); }
  bool contains(WordId id) const { return id >= 0 && static_cast<std::size_t>(id) < words_.size(); }
  bool is_special(WordId id) const { return id >= 0 && id <= kUnk; }

  std::size_t size() const { return words_.size(); }
  std::vector<WordId> words_with_pos(Pos pos) const;

  std::string join(const std::vector<WordId>& tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.tags_ == b.tags_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<Pos> tags_;
  std::unordered_map<std::string, WordId> index_;
};

}  // namespace askcap
