// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "askcap/vocabulary.hpp"

namespace askcap {

using Tokens = std::vector<WordId>;
using TokenSpan = std::span<const WordId>;

/// Packed n-gram key (n <= 4, word ids < 65535).
using NgramKey = std::uint64_t;
inline constexpr int kMaxNgram = 4;

/// Sorted (n-gram, count) list for one order n.
using NgramCounts = std::vector<std::pair<NgramKey, int>>;

NgramCounts count_ngrams(TokenSpan tokens, int n);

/// Maps a word to its stem: the word with one of the suffixes
/// {s, es, ing, ed} removed when that stem is itself a vocabulary word.
class StemTable {
 public:
  StemTable() = default;
  static StemTable from_vocabulary(const Vocabulary& vocab);
  WordId stem(WordId word) const;

 private:
  std::unordered_map<WordId, WordId> stems_;
};

/// Document frequencies over reference pools (one pool = all references of
/// one scene). idf(g) = log(N / max(1, df(g))).
class IdfTable {
 public:
  IdfTable() = default;
  static IdfTable build(std::span<const std::vector<Tokens>> pools);

  double idf(NgramKey key, int n) const;
  std::size_t document_count() const { return documents_; }
  std::size_t size(int n) const { return df_[static_cast<std::size_t>(n - 1)].size(); }

 private:
  std::array<std::unordered_map<NgramKey, int>, kMaxNgram> df_;
  std::size_t documents_ = 0;
};

/// References of one scene with their n-gram statistics precomputed.
class ReferenceSet {
 public:
  ReferenceSet() = default;
  explicit ReferenceSet(std::vector<Tokens> refs);

  const std::vector<Tokens>& refs() const { return refs_; }
  const NgramCounts& counts(std::size_t ref, int n) const {
    return counts_[ref][static_cast<std::size_t>(n - 1)];
  }
  bool empty() const { return refs_.empty(); }

 private:
  std::vector<Tokens> refs_;
  std::vector<std::array<NgramCounts, kMaxNgram>> counts_;
};

enum class Metric : int { kBleu1 = 0, kBleu2, kBleu3, kBleu4, kRougeL, kMeteor, kCider };
inline constexpr int kNumMetrics = 7;

/// Clipped-precision BLEU-n with brevity penalty; 0 if any order's precision is 0.
double bleu(TokenSpan candidate, const ReferenceSet& refs, int n);
double bleu(TokenSpan candidate, std::span<const Tokens> refs, int n);

/// LCS F-measure (beta = 1.2), maximized over references.
double rouge_l(TokenSpan candidate, std::span<const Tokens> refs);
inline double rouge_l(TokenSpan candidate, const ReferenceSet& refs) {
  return rouge_l(candidate, refs.refs());
}

/// TF-IDF n-gram cosine averaged over n = 1..4 and references, times 10.
double cider(TokenSpan candidate, const ReferenceSet& refs, const IdfTable& idf);
double cider(TokenSpan candidate, std::span<const Tokens> refs, const IdfTable& idf);

/// Exact + stem matching METEOR: max over references of
/// Fmean * (1 - 0.5 (chunks / matches)^3), Fmean = 10PR / (R + 9P).
double meteor_simple(TokenSpan candidate, std::span<const Tokens> refs,
                     const StemTable* stems = nullptr);
inline double meteor_simple(TokenSpan candidate, const ReferenceSet& refs,
                            const StemTable* stems = nullptr) {
  return meteor_simple(candidate, refs.refs(), stems);
}

struct MetricScores {
  std::array<double, kNumMetrics> values{};
  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
};

MetricScores score_all(TokenSpan candidate, const ReferenceSet& refs, const IdfTable& idf,
                       const StemTable* stems = nullptr);

/// Nonnegative weights over {BLEU1..4, ROUGE-L, METEOR, CIDEr}; the Mix
/// score is the plain weighted sum of the raw metric values.
struct MixWeights {
  std::array<double, kNumMetrics> w{};

  /// BLEU4, ROUGE-L and METEOR at 100, CIDEr at 10 (i.e. CIDEr/10 at 100).
  static MixWeights defaults();
  static MixWeights only(Metric m, double weight = 1.0);

  double& operator[](Metric m) { return w[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const { return w[static_cast<std::size_t>(m)]; }

  /// Largest attainable Mix value (CIDEr contributes at most 10 per unit weight).
  double max_score() const;
  /// Throws ConfigError for negative weights or all-zero weights.
  void validate() const;

  friend MixWeights operator+(const MixWeights& a, const MixWeights& b);
  friend MixWeights operator*(double c, const MixWeights& a);
};

double mix_of(const MetricScores& scores, const MixWeights& weights);
double mix_score(TokenSpan candidate, const ReferenceSet& refs, const IdfTable& idf,
                 const MixWeights& weights, const StemTable* stems = nullptr);
double mix_score(TokenSpan candidate, std::span<const Tokens> refs, const IdfTable& idf,
                 const MixWeights& weights, const StemTable* stems = nullptr);

}  // namespace askcap
