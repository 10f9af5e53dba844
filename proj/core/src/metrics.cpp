// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace askcap {

namespace {

NgramKey pack(TokenSpan tokens, std::size_t start, int n) {
  NgramKey key = 0;
  for (int i = 0; i < n; ++i) {
    key = (key << 16) | static_cast<NgramKey>(tokens[start + static_cast<std::size_t>(i)] + 1);
  }
  return key;
}

int lookup(const NgramCounts& counts, NgramKey key) {
  const auto it = std::lower_bound(counts.begin(), counts.end(), key,
                                   [](const auto& p, NgramKey k) { return p.first < k; });
  return (it != counts.end() && it->first == key) ? it->second : 0;
}

std::vector<std::array<NgramCounts, kMaxNgram>> counts_for(std::span<const Tokens> refs) {
  std::vector<std::array<NgramCounts, kMaxNgram>> out(refs.size());
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (int n = 1; n <= kMaxNgram; ++n) {
      out[r][static_cast<std::size_t>(n - 1)] = count_ngrams(refs[r], n);
    }
  }
  return out;
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Aligns candidate to reference by repeatedly taking the longest run of
// consecutive equal tokens among still-unaligned positions (leftmost in the
// candidate, then in the reference, on ties). Returns ref index per
// candidate position, -1 when unaligned.
void align_runs(const std::vector<WordId>& cand, const std::vector<WordId>& ref,
                std::vector<int>& cand_to_ref, std::vector<char>& ref_used) {
  const auto nc = cand.size();
  const auto nr = ref.size();
  while (true) {
    std::size_t best_len = 0, best_i = 0, best_j = 0;
    for (std::size_t i = 0; i < nc; ++i) {
      if (cand_to_ref[i] >= 0) continue;
      for (std::size_t j = 0; j < nr; ++j) {
        std::size_t len = 0;
        while (i + len < nc && j + len < nr && cand_to_ref[i + len] < 0 && !ref_used[j + len] &&
               cand[i + len] == ref[j + len]) {
          ++len;
        }
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) return;
    for (std::size_t k = 0; k < best_len; ++k) {
      cand_to_ref[best_i + k] = static_cast<int>(best_j + k);
      ref_used[best_j + k] = 1;
    }
  }
}

double meteor_single(TokenSpan candidate, const Tokens& ref, const StemTable* stems) {
  if (candidate.empty() || ref.empty()) return 0.0;
  std::vector<WordId> cand(candidate.begin(), candidate.end());
  std::vector<int> cand_to_ref(cand.size(), -1);
  std::vector<char> ref_used(ref.size(), 0);
  align_runs(cand, ref, cand_to_ref, ref_used);
  if (stems != nullptr) {
    std::vector<WordId> cand_stem(cand.size()), ref_stem(ref.size());
    for (std::size_t i = 0; i < cand.size(); ++i) cand_stem[i] = stems->stem(cand[i]);
    for (std::size_t j = 0; j < ref.size(); ++j) ref_stem[j] = stems->stem(ref[j]);
    align_runs(cand_stem, ref_stem, cand_to_ref, ref_used);
  }
  std::size_t matches = 0, chunks = 0;
  int prev = -2;
  for (const auto j : cand_to_ref) {
    if (j < 0) {
      prev = -2;
      continue;
    }
    ++matches;
    if (j != prev + 1) ++chunks;
    prev = j;
  }
  if (matches == 0) return 0.0;
  const double p = static_cast<double>(matches) / static_cast<double>(cand.size());
  const double r = static_cast<double>(matches) / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
  return fmean * (1.0 - 0.5 * frag * frag * frag);
}

}  // namespace

NgramCounts count_ngrams(TokenSpan tokens, int n) {
  NgramCounts out;
  if (n < 1 || n > kMaxNgram || tokens.size() < static_cast<std::size_t>(n)) return out;
  std::vector<NgramKey> keys;
  keys.reserve(tokens.size());
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    keys.push_back(pack(tokens, i, n));
  }
  std::sort(keys.begin(), keys.end());
  for (const auto k : keys) {
    if (!out.empty() && out.back().first == k) {
      ++out.back().second;
    } else {
      out.emplace_back(k, 1);
    }
  }
  return out;
}

StemTable StemTable::from_vocabulary(const Vocabulary& vocab) {
  static const std::array<std::string, 4> kSuffixes = {"es", "ing", "ed", "s"};
  StemTable table;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto id = static_cast<WordId>(i);
    const auto& word = vocab.word(id);
    for (const auto& suffix : kSuffixes) {
      if (word.size() <= suffix.size() || !word.ends_with(suffix)) continue;
      if (auto stem = vocab.find(word.substr(0, word.size() - suffix.size()))) {
        table.stems_[id] = *stem;
        break;
      }
    }
  }
  return table;
}

WordId StemTable::stem(WordId word) const {
  if (auto it = stems_.find(word); it != stems_.end()) return it->second;
  return word;
}

IdfTable IdfTable::build(std::span<const std::vector<Tokens>> pools) {
  IdfTable table;
  table.documents_ = pools.size();
  for (const auto& pool : pools) {
    for (int n = 1; n <= kMaxNgram; ++n) {
      std::set<NgramKey> seen;
      for (const auto& ref : pool) {
        for (const auto& [key, count] : count_ngrams(ref, n)) seen.insert(key);
      }
      auto& df = table.df_[static_cast<std::size_t>(n - 1)];
      for (const auto key : seen) ++df[key];
    }
  }
  return table;
}

double IdfTable::idf(NgramKey key, int n) const {
  if (documents_ == 0) return 0.0;
  const auto& df = df_[static_cast<std::size_t>(n - 1)];
  const auto it = df.find(key);
  const double count = it == df.end() ? 1.0 : static_cast<double>(std::max(1, it->second));
  return std::log(static_cast<double>(documents_) / count);
}

ReferenceSet::ReferenceSet(std::vector<Tokens> refs)
    : refs_(std::move(refs)), counts_(counts_for(refs_)) {}

double bleu(TokenSpan candidate, const ReferenceSet& refs, int n) {
  if (n < 1 || n > kMaxNgram) throw std::invalid_argument("BLEU order must be in [1, 4]");
  if (refs.empty()) throw std::invalid_argument("BLEU needs at least one reference");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    const auto cand = count_ngrams(candidate, order);
    int total = 0, clipped = 0;
    for (const auto& [key, count] : cand) {
      total += count;
      int max_ref = 0;
      for (std::size_t r = 0; r < refs.refs().size(); ++r) {
        max_ref = std::max(max_ref, lookup(refs.counts(r, order), key));
      }
      clipped += std::min(count, max_ref);
    }
    if (total == 0 || clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }
  const auto c = static_cast<double>(candidate.size());
  double closest = 0.0;
  double best_gap = -1.0;
  for (const auto& ref : refs.refs()) {
    const auto len = static_cast<double>(ref.size());
    const double gap = std::abs(len - c);
    if (best_gap < 0.0 || gap < best_gap || (gap == best_gap && len < closest)) {
      best_gap = gap;
      closest = len;
    }
  }
  const double bp = c > closest ? 1.0 : std::exp(1.0 - closest / c);
  return bp * std::exp(log_sum / static_cast<double>(n));
}

double bleu(TokenSpan candidate, std::span<const Tokens> refs, int n) {
  return bleu(candidate, ReferenceSet({refs.begin(), refs.end()}), n);
}

double rouge_l(TokenSpan candidate, std::span<const Tokens> refs) {
  if (refs.empty()) throw std::invalid_argument("ROUGE-L needs at least one reference");
  constexpr double kBeta = 1.2;
  double best = 0.0;
  if (candidate.empty()) return 0.0;
  for (const auto& ref : refs) {
    if (ref.empty()) continue;
    const auto lcs = static_cast<double>(lcs_length(candidate, ref));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double f = (1.0 + kBeta * kBeta) * p * r / (r + kBeta * kBeta * p);
    best = std::max(best, f);
  }
  return best;
}

double cider(TokenSpan candidate, const ReferenceSet& refs, const IdfTable& idf) {
  if (refs.empty() || candidate.empty()) return 0.0;
  double total = 0.0;
  for (int n = 1; n <= kMaxNgram; ++n) {
    const auto cand = count_ngrams(candidate, n);
    std::vector<double> cand_w(cand.size());
    double cand_norm = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      cand_w[i] = cand[i].second * idf.idf(cand[i].first, n);
      cand_norm += cand_w[i] * cand_w[i];
    }
    cand_norm = std::sqrt(cand_norm);
    double sum_cos = 0.0;
    for (std::size_t r = 0; r < refs.refs().size(); ++r) {
      const auto& ref = refs.counts(r, n);
      double ref_norm = 0.0;
      for (const auto& [key, count] : ref) {
        const double w = count * idf.idf(key, n);
        ref_norm += w * w;
      }
      ref_norm = std::sqrt(ref_norm);
      if (cand_norm == 0.0 || ref_norm == 0.0) continue;
      double dot = 0.0;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        const int rc = lookup(ref, cand[i].first);
        if (rc != 0) dot += cand_w[i] * rc * idf.idf(cand[i].first, n);
      }
      sum_cos += dot / (cand_norm * ref_norm);
    }
    total += sum_cos / static_cast<double>(refs.refs().size());
  }
  return 10.0 * total / static_cast<double>(kMaxNgram);
}

double cider(TokenSpan candidate, std::span<const Tokens> refs, const IdfTable& idf) {
  return cider(candidate, ReferenceSet({refs.begin(), refs.end()}), idf);
}

double meteor_simple(TokenSpan candidate, std::span<const Tokens> refs, const StemTable* stems) {
  if (refs.empty()) throw std::invalid_argument("METEOR needs at least one reference");
  double best = 0.0;
  for (const auto& ref : refs) best = std::max(best, meteor_single(candidate, ref, stems));
  return best;
}

MetricScores score_all(TokenSpan candidate, const ReferenceSet& refs, const IdfTable& idf,
                       const StemTable* stems) {
  MetricScores s;
  for (int n = 1; n <= kMaxNgram; ++n) s.values[static_cast<std::size_t>(n - 1)] = bleu(candidate, refs, n);
  s.values[static_cast<std::size_t>(Metric::kRougeL)] = rouge_l(candidate, refs);
  s.values[static_cast<std::size_t>(Metric::kMeteor)] = meteor_simple(candidate, refs, stems);
  s.values[static_cast<std::size_t>(Metric::kCider)] = cider(candidate, refs, idf);
  return s;
}

MixWeights MixWeights::defaults() {
  MixWeights m;
  m[Metric::kBleu4] = 100.0;
  m[Metric::kRougeL] = 100.0;
  m[Metric::kMeteor] = 100.0;
  m[Metric::kCider] = 10.0;
  return m;
}

MixWeights MixWeights::only(Metric metric, double weight) {
  MixWeights m;
  m[metric] = weight;
  return m;
}

double MixWeights::max_score() const {
  double total = 0.0;
  for (int i = 0; i < kNumMetrics; ++i) {
    total += w[static_cast<std::size_t>(i)] * (i == static_cast<int>(Metric::kCider) ? 10.0 : 1.0);
  }
  return total;
}

void MixWeights::validate() const {
  bool any = false;
  for (const auto x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("mix weights must be finite and >= 0");
    any = any || x > 0.0;
  }
  if (!any) throw ConfigError("at least one mix weight must be positive");
}

MixWeights operator+(const MixWeights& a, const MixWeights& b) {
  MixWeights out;
  for (std::size_t i = 0; i < out.w.size(); ++i) out.w[i] = a.w[i] + b.w[i];
  return out;
}

MixWeights operator*(double c, const MixWeights& a) {
  MixWeights out;
  for (std::size_t i = 0; i < out.w.size(); ++i) out.w[i] = c * a.w[i];
  return out;
}

double mix_of(const MetricScores& scores, const MixWeights& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.values.size(); ++i) total += weights.w[i] * scores.values[i];
  return total;
}

double mix_score(TokenSpan candidate, const ReferenceSet& refs, const IdfTable& idf,
                 const MixWeights& weights, const StemTable* stems) {
  // Skip metrics with zero weight.
  double total = 0.0;
  for (int n = 1; n <= kMaxNgram; ++n) {
    const double w = weights.w[static_cast<std::size_t>(n - 1)];
    if (w != 0.0) total += w * bleu(candidate, refs, n);
  }
  if (weights[Metric::kRougeL] != 0.0) total += weights[Metric::kRougeL] * rouge_l(candidate, refs);
  if (weights[Metric::kMeteor] != 0.0) {
    total += weights[Metric::kMeteor] * meteor_simple(candidate, refs, stems);
  }
  if (weights[Metric::kCider] != 0.0) total += weights[Metric::kCider] * cider(candidate, refs, idf);
  return total;
}

double mix_score(TokenSpan candidate, std::span<const Tokens> refs, const IdfTable& idf,
                 const MixWeights& weights, const StemTable* stems) {
  return mix_score(candidate, ReferenceSet({refs.begin(), refs.end()}), idf, weights, stems);
}

}  // namespace askcap
