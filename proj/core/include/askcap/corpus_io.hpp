// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "askcap/world.hpp"

namespace askcap {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Scene record as stored in corpus files: words as strings.
nlohmann::json scene_to_json(const Scene& scene, const Vocabulary& vocab);

/// Default vocabulary location next to a corpus file.
std::filesystem::path vocab_path_for(const std::filesystem::path& corpus_path);

/// Writes the line-delimited corpus records and the word/POS vocabulary file
/// (one "word<TAB>TAG" line per non-special word, in id order).
void save_corpus(const Corpus& corpus, const std::filesystem::path& corpus_path,
                 const std::filesystem::path& vocab_path);
inline void save_corpus(const Corpus& corpus, const std::filesystem::path& corpus_path) {
  save_corpus(corpus, corpus_path, vocab_path_for(corpus_path));
}

/// Reads a corpus written by save_corpus (or by hand). Errors name the
/// offending line. An empty corpus file yields an empty corpus.
Corpus load_corpus(const std::filesystem::path& corpus_path,
                   const std::filesystem::path& vocab_path);
inline Corpus load_corpus(const std::filesystem::path& corpus_path) {
  return load_corpus(corpus_path, vocab_path_for(corpus_path));
}

}  // namespace askcap
