// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "askcap/vocabulary.hpp"

namespace askcap {

using Rng = std::mt19937_64;

/// Captions hold at most this many words; EOS is implicit and not stored.
inline constexpr int kMaxCaptionLength = 16;

struct SceneObject {
  WordId category = Vocabulary::kUnk;
  std::vector<WordId> attributes;
  std::optional<WordId> action;
  int slot = 0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Relation {
  int subject = 0;
  WordId preposition = Vocabulary::kUnk;
  int object = 0;

  friend bool operator==(const Relation&, const Relation&) = default;
};

/// Synthetic stand-in for an image: the teacher's ground truth.
struct Scene {
  int id = 0;
  std::vector<SceneObject> objects;
  std::vector<Relation> relations;

  /// Index of the object occupying `slot`, if any.
  std::optional<int> object_at_slot(int slot) const;
  /// First object whose category is `noun`, if any.
  std::optional<int> object_with_category(WordId noun) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

enum class CaptionSource : std::uint8_t { kGt, kGreedy, kSampled, kRollout, kReplace };

struct Caption {
  std::vector<WordId> tokens;
  std::vector<Pos> pos;
  CaptionSource source = CaptionSource::kGt;
  std::optional<double> reward;

  static Caption from_tokens(std::vector<WordId> tokens, const Vocabulary& vocab,
                             CaptionSource source);

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const Caption&, const Caption&) = default;
};

/// Vocabulary, scenes and their ground-truth captions. Scene ids are unique
/// but need not be dense.
struct Corpus {
  Vocabulary vocab;
  std::vector<Scene> scenes;
  std::vector<std::vector<Caption>> references;  // parallel to scenes
  /// Alternative noun -> the category noun it names.
  std::unordered_map<WordId, WordId> synonyms;

  /// Category noun named by `noun` (itself unless it is a synonym).
  WordId canonical(WordId noun) const {
    const auto it = synonyms.find(noun);
    return it == synonyms.end() ? noun : it->second;
  }

  /// Rebuilds the id -> index map; call after mutating `scenes`.
  void reindex();
  int index_of(int scene_id) const;
  const Scene& scene(int scene_id) const { return scenes[static_cast<std::size_t>(index_of(scene_id))]; }
  const std::vector<Caption>& refs(int scene_id) const {
    return references[static_cast<std::size_t>(index_of(scene_id))];
  }
  std::vector<int> scene_ids() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.vocab == b.vocab && a.scenes == b.scenes && a.references == b.references &&
           a.synonyms == b.synonyms;
  }

 private:
  std::unordered_map<int, int> index_;
};

struct WorldConfig {
  int num_scenes = 500;
  int nouns = 60;
  int verbs = 20;
  int adjs = 20;
  int min_objects = 1;
  int max_objects = 3;
  int num_slots = 4;
  /// Fraction of noun categories that also have a synonym noun.
  double synonym_fraction = 0.15;
  /// Category frequencies follow 1 / rank^zipf_exponent.
  double zipf_exponent = 1.0;
  double action_probability = 0.75;
  int first_scene_id = 0;
  std::uint64_t seed = 7;
};

inline constexpr int kGtPerScene = 5;

/// Deterministic synthetic world: vocabulary, scenes and 5 distinct GT
/// captions per scene. Throws ConfigError on invalid configs.
Corpus generate_world(const WorldConfig& config);

/// Words available to generate_world, for callers that need the lexicon.
struct Lexicon {
  static constexpr int kMaxNouns = 80;
  static constexpr int kMaxVerbs = 30;
  static constexpr int kMaxAdjs = 30;
  static constexpr int kMaxSlots = 4;
};

/// Number word (NUM) for a count in 1..4.
std::string_view number_word(int count);

/// Slot adverb (ADV word) used for the region a slot index names.
std::string_view slot_adverb(int slot);

struct ChunkPlan {
  std::vector<int> warmup;
  std::vector<std::vector<int>> chunks;
  int gt_per_warmup_scene = kGtPerScene;
  int m = 2;
};

/// Shuffles `scene_ids`, takes round(warmup_fraction * N) as warmup and splits
/// the remainder into K chunks whose sizes differ by at most one.
ChunkPlan split_chunks(const std::vector<int>& scene_ids, double warmup_fraction, int chunks,
                       std::uint64_t seed);

}  // namespace askcap
