// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

// Straight-from-the-definition metric implementations over word strings.
// Everything here is brute force and shares no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace askcap::oracle {

using Words = std::vector<std::string>;
using Gram = std::vector<std::string>;

inline Words split(const std::string& text) {
  Words out;
  std::istringstream in(text);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::map<Gram, int> grams(const Words& s, int n) {
  std::map<Gram, int> out;
  for (int i = 0; i + n <= static_cast<int>(s.size()); ++i) {
    ++out[Gram(s.begin() + i, s.begin() + i + n)];
  }
  return out;
}

inline double bleu(const Words& cand, const std::vector<Words>& refs, int n) {
  if (cand.empty()) return 0.0;
  double product = 1.0;
  for (int k = 1; k <= n; ++k) {
    const auto c = grams(cand, k);
    int num = 0, den = 0;
    for (const auto& [g, count] : c) {
      int best = 0;
      for (const auto& r : refs) {
        const auto rg = grams(r, k);
        const auto it = rg.find(g);
        if (it != rg.end()) best = std::max(best, it->second);
      }
      num += std::min(count, best);
      den += count;
    }
    if (num == 0 || den == 0) return 0.0;
    product *= static_cast<double>(num) / den;
  }
  // Closest reference length, shorter wins ties.
  std::size_t r_len = refs.front().size();
  for (const auto& r : refs) {
    const auto d_new = std::abs(static_cast<long>(r.size()) - static_cast<long>(cand.size()));
    const auto d_old = std::abs(static_cast<long>(r_len) - static_cast<long>(cand.size()));
    if (d_new < d_old || (d_new == d_old && r.size() < r_len)) r_len = r.size();
  }
  const double bp = cand.size() > r_len ? 1.0 : std::exp(1.0 - double(r_len) / double(cand.size()));
  return bp * std::pow(product, 1.0 / n);
}

// LCS by enumerating every subsequence of `a` (|a| <= 16).
inline int lcs_enumerated(const Words& a, const Words& b) {
  int best = 0;
  const unsigned total = 1u << a.size();
  for (unsigned mask = 0; mask < total; ++mask) {
    Words sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    std::size_t j = 0;
    for (const auto& w : b) {
      if (j < sub.size() && sub[j] == w) ++j;
    }
    if (j == sub.size()) best = std::max(best, static_cast<int>(sub.size()));
  }
  return best;
}

inline double rouge_l(const Words& cand, const std::vector<Words>& refs) {
  double best = 0.0;
  const double beta2 = 1.2 * 1.2;
  for (const auto& r : refs) {
    const int l = lcs_enumerated(cand, r);
    if (l == 0) continue;
    const double p = double(l) / cand.size();
    const double rc = double(l) / r.size();
    best = std::max(best, (1 + beta2) * p * rc / (rc + beta2 * p));
  }
  return best;
}

// document frequency over reference pools, unseen n-grams count as df = 1
struct Idf {
  std::vector<std::vector<Words>> pools;
  double operator()(const Gram& g) const {
    int df = 0;
    for (const auto& pool : pools) {
      bool hit = false;
      for (const auto& r : pool) {
        const auto rg = grams(r, static_cast<int>(g.size()));
        hit = hit || rg.count(g) > 0;
      }
      df += hit ? 1 : 0;
    }
    return std::log(double(pools.size()) / std::max(df, 1));
  }
};

inline double cider(const Words& cand, const std::vector<Words>& refs, const Idf& idf) {
  if (cand.empty()) return 0.0;
  double total = 0.0;
  for (int n = 1; n <= 4; ++n) {
    std::map<Gram, double> cv;
    for (const auto& [g, c] : grams(cand, n)) cv[g] = c * idf(g);
    double per_ref = 0.0;
    for (const auto& r : refs) {
      std::map<Gram, double> rv;
      for (const auto& [g, c] : grams(r, n)) rv[g] = c * idf(g);
      double dot = 0.0, nc = 0.0, nr = 0.0;
      for (const auto& [g, v] : cv) {
        nc += v * v;
        if (rv.count(g)) dot += v * rv[g];
      }
      for (const auto& [g, v] : rv) nr += v * v;
      if (nc > 0 && nr > 0) per_ref += dot / std::sqrt(nc * nr);
    }
    total += per_ref / refs.size();
  }
  return 10.0 * total / 4.0;
}

// Exhaustive METEOR alignment: most matches, then fewest chunks. `same`
// decides whether two words may align.
inline double meteor(const Words& cand, const std::vector<Words>& refs,
                     const std::function<bool(const std::string&, const std::string&)>& same =
                         [](const std::string& a, const std::string& b) { return a == b; }) {
  double best_score = 0.0;
  for (const auto& ref : refs) {
    if (cand.empty() || ref.empty()) continue;
    int best_m = 0, best_chunks = 0;
    std::vector<int> map(cand.size(), -1);
    std::vector<bool> used(ref.size(), false);
    std::function<void(std::size_t)> search = [&](std::size_t i) {
      if (i == cand.size()) {
        int m = 0, chunks = 0, prev = -2;
        for (int j : map) {
          if (j < 0) {
            prev = -2;
            continue;
          }
          ++m;
          if (j != prev + 1) ++chunks;
          prev = j;
        }
        if (m > best_m || (m == best_m && chunks < best_chunks)) {
          best_m = m;
          best_chunks = chunks;
        }
        return;
      }
      search(i + 1);
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!used[j] && same(cand[i], ref[j])) {
          used[j] = true;
          map[i] = static_cast<int>(j);
          search(i + 1);
          map[i] = -1;
          used[j] = false;
        }
      }
    };
    search(0);
    if (best_m == 0) continue;
    const double p = double(best_m) / cand.size();
    const double r = double(best_m) / ref.size();
    const double f = 10 * p * r / (r + 9 * p);
    const double frag = double(best_chunks) / best_m;
    best_score = std::max(best_score, f * (1 - 0.5 * frag * frag * frag));
  }
  return best_score;
}

struct ToyCase {
  std::string candidate;
  std::vector<std::string> refs;
};

// Fixed suite of short cases. The first entries are identity and disjoint.
inline const std::vector<ToyCase>& toy_suite() {
  static const std::vector<ToyCase> kSuite = {
      {"a cat sits", {"a cat sits"}},
      {"dog runs fast", {"a cat sits"}},
      {"a a a", {"a cat"}},
      {"a b c", {"a c d"}},
      {"a dog sits on a mat", {"the dog sits on the mat", "a dog is on a mat"}},
      {"the cat", {"the cat is black", "a black cat"}},
      {"cat the", {"the cat"}},
      {"red red red red", {"red ball", "a red red ball"}},
      {"a man rides a horse", {"a man rides a brown horse", "man on a horse"}},
      {"one big dog", {"a big dog", "one dog", "the big dog barks"}},
      {"the plane is left", {"a plane left", "the plane is white", "there is a plane"}},
      {"b a", {"a b"}},
      {"x y z w", {"w z y x"}},
      {"a", {"a", "b"}},
      {"a b a b", {"a b", "b a b a"}},
      {"the dog is sleeping", {"a dog is sleeping left", "the dog sleeps"}},
      {"two red cars", {"two cars", "red cars", "two red cars park"}},
      {"a b c d e f", {"f e d c b a"}},
      {"a b c d e f", {"a b c x e f", "a c e"}},
      {"the bus is young", {"a bus is sleeping left", "the bus left is young", "one young bus"}},
      {"a horse below", {"there is a wooden horse below", "a horse is parked below"}},
      {"cat", {"dog", "cat cat"}},
  };
  return kSuite;
}

}  // namespace askcap::oracle
