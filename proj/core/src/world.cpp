// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace askcap {

namespace {

// Ordered by intended frequency: categories early in the list are frequent.
constexpr std::array<std::string_view, Lexicon::kMaxNouns> kNouns = {
    "dog",      "cat",      "man",       "woman",    "car",      "boat",      "bike",
    "plane",    "couch",    "kid",       "horse",    "bird",     "train",     "bus",
    "truck",    "table",    "chair",     "clock",    "pizza",    "cake",      "sheep",
    "cow",      "elephant", "bear",      "zebra",    "giraffe",  "umbrella",  "kite",
    "surfboard", "skateboard", "laptop", "phone",    "bottle",   "cup",       "bowl",
    "banana",   "apple",    "orange",    "sandwich", "donut",    "bench",     "bed",
    "toilet",   "sink",     "oven",      "vase",     "book",     "teddy",     "frisbee",
    "racket",   "ball",     "tie",       "backpack", "suitcase", "hydrant",   "sign",
    "lamp",     "tree",     "flower",    "fence",    "tower",    "bridge",    "canoe",
    "tractor",  "camel",    "goat",      "duck",     "owl",      "penguin",   "lion",
    "tiger",    "monkey",   "rabbit",    "turtle",   "violin",   "guitar",    "piano",
    "drum",     "kettle",   "mirror"};

constexpr std::array<std::string_view, 16> kSynonyms = {
    "puppy", "kitten", "guy", "lady", "automobile", "ship", "bicycle", "airplane",
    "sofa",  "child", "pony", "sparrow", "locomotive", "coach", "lorry", "desk"};

constexpr std::array<std::string_view, Lexicon::kMaxVerbs> kVerbs = {
    "running",  "sitting",   "eating",   "standing", "sleeping", "jumping",
    "walking",  "flying",    "swimming", "riding",   "playing",  "looking",
    "drinking", "climbing",  "resting",  "waiting",  "moving",   "parked",
    "floating", "lying",     "holding",  "carrying", "pulling",  "grazing",
    "rolling",  "spinning",  "hanging",  "leaning",  "crossing", "turning"};

constexpr std::array<std::string_view, Lexicon::kMaxAdjs> kAdjs = {
    "brown",  "white", "black",  "red",    "small",  "large",  "young",  "old",
    "green",  "blue",  "yellow", "gray",   "wooden", "shiny",  "tall",   "short",
    "pink",   "dirty", "clean",  "fluffy", "striped", "spotted", "round", "square",
    "bright", "dark",  "wet",    "dry",    "empty",  "busy"};

constexpr std::array<std::string_view, 5> kPrepositions = {"on", "near", "beside", "behind",
                                                           "under"};
constexpr std::array<std::string_view, 4> kNumbers = {"one", "two", "three", "four"};
constexpr std::array<std::string_view, Lexicon::kMaxSlots> kSlotAdverbs = {"left", "right",
                                                                           "above", "below"};
constexpr std::array<std::string_view, 5> kFunctionWords = {"a", "the", "is", "and", "there"};

struct Lex {
  std::vector<WordId> categories;
  std::unordered_map<WordId, WordId> synonym;  // category -> synonym noun
  std::vector<WordId> verbs;
  std::vector<WordId> adjs;
  std::vector<WordId> preps;
  std::vector<WordId> numbers;
  std::vector<WordId> slot_advs;
  WordId a = 0, the = 0, is = 0, and_ = 0, there = 0;
};

Lex build_lexicon(const WorldConfig& config, Vocabulary& vocab) {
  Lex lex;
  lex.a = vocab.add("a", Pos::kOther);
  lex.the = vocab.add("the", Pos::kOther);
  lex.is = vocab.add("is", Pos::kOther);
  lex.and_ = vocab.add("and", Pos::kOther);
  lex.there = vocab.add("there", Pos::kOther);
  for (const auto p : kPrepositions) lex.preps.push_back(vocab.add(std::string(p), Pos::kOther));
  for (const auto n : kNumbers) lex.numbers.push_back(vocab.add(std::string(n), Pos::kNum));
  for (int s = 0; s < config.num_slots; ++s) {
    lex.slot_advs.push_back(vocab.add(std::string(kSlotAdverbs[static_cast<std::size_t>(s)]), Pos::kAdv));
  }
  for (int i = 0; i < config.nouns; ++i) {
    lex.categories.push_back(vocab.add(std::string(kNouns[static_cast<std::size_t>(i)]), Pos::kNoun));
  }
  const int with_synonym = std::min<int>(
      static_cast<int>(std::lround(config.synonym_fraction * config.nouns)),
      static_cast<int>(kSynonyms.size()));
  for (int i = 0; i < with_synonym; ++i) {
    lex.synonym[lex.categories[static_cast<std::size_t>(i)]] =
        vocab.add(std::string(kSynonyms[static_cast<std::size_t>(i)]), Pos::kNoun);
  }
  for (int i = 0; i < config.verbs; ++i) {
    lex.verbs.push_back(vocab.add(std::string(kVerbs[static_cast<std::size_t>(i)]), Pos::kVerb));
  }
  for (int i = 0; i < config.adjs; ++i) {
    lex.adjs.push_back(vocab.add(std::string(kAdjs[static_cast<std::size_t>(i)]), Pos::kAdj));
  }
  return lex;
}

void validate(const WorldConfig& c) {
  if (c.num_scenes < 1) throw ConfigError("num_scenes must be >= 1");
  if (c.nouns < 1) throw ConfigError("world needs at least one noun");
  if (c.adjs < 2) throw ConfigError("world needs at least two adjectives");
  if (c.verbs < 1) throw ConfigError("world needs at least one verb");
  if (c.nouns > Lexicon::kMaxNouns || c.verbs > Lexicon::kMaxVerbs || c.adjs > Lexicon::kMaxAdjs) {
    throw ConfigError("vocabulary sizes exceed the built-in lexicon");
  }
  if (c.num_slots < 1 || c.num_slots > Lexicon::kMaxSlots) {
    throw ConfigError("num_slots must be in [1, 4]");
  }
  if (c.min_objects < 1 || c.max_objects < c.min_objects || c.max_objects > c.num_slots) {
    throw ConfigError("object count range must satisfy 1 <= min <= max <= num_slots");
  }
  if (c.synonym_fraction < 0.0 || c.synonym_fraction > 1.0) {
    throw ConfigError("synonym_fraction must be in [0, 1]");
  }
}

std::size_t pick_weighted(const std::vector<double>& cdf, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cdf.back());
  const double x = u(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                          static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

std::vector<double> zipf_cdf(std::size_t n, double exponent) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    cdf[i] = acc;
  }
  return cdf;
}

// One realization of a caption template; empty when it does not apply.
using Template = std::function<std::vector<WordId>(const Scene&, const Lex&, Rng&)>;

std::vector<Template> caption_templates() {
  auto noun = [](const SceneObject& o, const Lex& lex, Rng& rng) {
    if (auto it = lex.synonym.find(o.category); it != lex.synonym.end()) {
      if (std::bernoulli_distribution(0.5)(rng)) return it->second;
    }
    return o.category;
  };
  auto count_of = [](const Scene& s, WordId category) {
    return static_cast<int>(std::count_if(s.objects.begin(), s.objects.end(),
                                          [&](const SceneObject& o) { return o.category == category; }));
  };
  auto prep01 = [](const Scene& s) -> std::optional<WordId> {
    for (const auto& r : s.relations) {
      if (r.subject == 0 && r.object == 1) return r.preposition;
    }
    return std::nullopt;
  };
  std::vector<Template> t;
  // a brown dog is running
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    if (!o.action) return {};
    return {lex.a, o.attributes[0], noun(o, lex, rng), lex.is, *o.action};
  });
  // the dog is brown
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    return {lex.the, noun(o, lex, rng), lex.is, o.attributes[0]};
  });
  // a brown dog near a cat
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto prep = prep01(s);
    if (!prep) return {};
    const auto& o = s.objects[0];
    return {lex.a, o.attributes[0], noun(o, lex, rng), *prep, lex.a, noun(s.objects[1], lex, rng)};
  });
  // a dog is running left
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    if (!o.action) return {};
    return {lex.a, noun(o, lex, rng), lex.is, *o.action, lex.slot_advs[static_cast<std::size_t>(o.slot)]};
  });
  // two brown dog
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    const int n = std::min<int>(count_of(s, o.category), static_cast<int>(lex.numbers.size()));
    return {lex.numbers[static_cast<std::size_t>(n - 1)], o.attributes[0], noun(o, lex, rng)};
  });
  // a brown small dog
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    if (o.attributes.size() < 2) return {};
    return {lex.a, o.attributes[0], o.attributes[1], noun(o, lex, rng)};
  });
  // a dog and a white cat
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    if (s.objects.size() < 2) return {};
    const auto& o = s.objects[1];
    return {lex.a, noun(s.objects[0], lex, rng), lex.and_, lex.a, o.attributes[0], noun(o, lex, rng)};
  });
  // the brown dog is running near the cat
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto prep = prep01(s);
    const auto& o = s.objects[0];
    if (!prep || !o.action) return {};
    return {lex.the, o.attributes[0], noun(o, lex, rng), lex.is, *o.action, *prep, lex.the,
            noun(s.objects[1], lex, rng)};
  });
  // there is a brown dog left
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    return {lex.there, lex.is, lex.a, o.attributes[0], noun(o, lex, rng),
            lex.slot_advs[static_cast<std::size_t>(o.slot)]};
  });
  // a brown dog left
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    return {lex.a, o.attributes[0], noun(o, lex, rng), lex.slot_advs[static_cast<std::size_t>(o.slot)]};
  });
  // the dog left is brown
  t.push_back([=](const Scene& s, const Lex& lex, Rng& rng) -> std::vector<WordId> {
    const auto& o = s.objects[0];
    return {lex.the, noun(o, lex, rng), lex.slot_advs[static_cast<std::size_t>(o.slot)], lex.is,
            o.attributes[0]};
  });
  return t;
}

}  // namespace

std::string_view number_word(int count) {
  return kNumbers.at(static_cast<std::size_t>(count - 1));
}

std::string_view slot_adverb(int slot) {
  return kSlotAdverbs.at(static_cast<std::size_t>(slot));
}

std::optional<int> Scene::object_at_slot(int slot) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].slot == slot) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> Scene::object_with_category(WordId noun) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].category == noun) return static_cast<int>(i);
  }
  return std::nullopt;
}

Caption Caption::from_tokens(std::vector<WordId> tokens, const Vocabulary& vocab,
                             CaptionSource source) {
  Caption c;
  c.pos.reserve(tokens.size());
  for (const auto t : tokens) c.pos.push_back(vocab.pos(t));
  c.tokens = std::move(tokens);
  c.source = source;
  return c;
}

void Corpus::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    index_.emplace(scenes[i].id, static_cast<int>(i));
  }
}

int Corpus::index_of(int scene_id) const {
  if (index_.size() != scenes.size()) throw std::logic_error("Corpus::reindex() not called");
  if (auto it = index_.find(scene_id); it != index_.end()) return it->second;
  throw std::out_of_range("unknown scene id " + std::to_string(scene_id));
}

std::vector<int> Corpus::scene_ids() const {
  std::vector<int> ids;
  ids.reserve(scenes.size());
  for (const auto& s : scenes) ids.push_back(s.id);
  return ids;
}

Corpus generate_world(const WorldConfig& config) {
  validate(config);
  Corpus corpus;
  const Lex lex = build_lexicon(config, corpus.vocab);
  Rng rng(config.seed);

  const auto noun_cdf = zipf_cdf(lex.categories.size(), config.zipf_exponent);
  const auto verb_cdf = zipf_cdf(lex.verbs.size(), 0.5 * config.zipf_exponent);
  const auto adj_cdf = zipf_cdf(lex.adjs.size(), 0.5 * config.zipf_exponent);
  const auto templates = caption_templates();

  for (int n = 0; n < config.num_scenes; ++n) {
    Scene scene;
    scene.id = config.first_scene_id + n;
    const int count = std::uniform_int_distribution<int>(config.min_objects, config.max_objects)(rng);
    std::vector<int> slots(static_cast<std::size_t>(config.num_slots));
    std::iota(slots.begin(), slots.end(), 0);
    std::shuffle(slots.begin(), slots.end(), rng);
    for (int i = 0; i < count; ++i) {
      SceneObject obj;
      obj.category = lex.categories[pick_weighted(noun_cdf, rng)];
      const int num_attrs = std::bernoulli_distribution(0.4)(rng) ? 2 : 1;
      while (static_cast<int>(obj.attributes.size()) < num_attrs) {
        const WordId adj = lex.adjs[pick_weighted(adj_cdf, rng)];
        if (std::find(obj.attributes.begin(), obj.attributes.end(), adj) == obj.attributes.end()) {
          obj.attributes.push_back(adj);
        }
      }
      if (std::bernoulli_distribution(config.action_probability)(rng)) {
        obj.action = lex.verbs[pick_weighted(verb_cdf, rng)];
      }
      obj.slot = slots[static_cast<std::size_t>(i)];
      scene.objects.push_back(std::move(obj));
    }
    for (int i = 0; i + 1 < count; ++i) {
      const auto p = std::uniform_int_distribution<std::size_t>(0, lex.preps.size() - 1)(rng);
      scene.relations.push_back(Relation{i, lex.preps[p], i + 1});
    }

    std::vector<std::size_t> order(templates.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Caption> refs;
    for (const auto ti : order) {
      if (static_cast<int>(refs.size()) == kGtPerScene) break;
      auto tokens = templates[ti](scene, lex, rng);
      if (tokens.empty()) continue;
      const bool duplicate = std::any_of(refs.begin(), refs.end(),
                                         [&](const Caption& c) { return c.tokens == tokens; });
      if (duplicate) continue;
      refs.push_back(Caption::from_tokens(std::move(tokens), corpus.vocab, CaptionSource::kGt));
    }
    if (static_cast<int>(refs.size()) != kGtPerScene) {
      throw std::logic_error("caption templates could not produce 5 distinct captions");
    }
    corpus.scenes.push_back(std::move(scene));
    corpus.references.push_back(std::move(refs));
  }
  for (const auto& [category, synonym] : lex.synonym) corpus.synonyms.emplace(synonym, category);
  corpus.reindex();
  return corpus;
}

ChunkPlan split_chunks(const std::vector<int>& scene_ids, double warmup_fraction, int chunks,
                       std::uint64_t seed) {
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("warmup_fraction must be in (0, 1)");
  }
  if (chunks < 1) throw ConfigError("chunk count must be >= 1");
  const auto n = scene_ids.size();
  const auto warm = static_cast<std::size_t>(std::lround(warmup_fraction * static_cast<double>(n)));
  const auto remaining = n - std::min(warm, n);
  if (static_cast<std::size_t>(chunks) > remaining) {
    throw ConfigError("more chunks than scenes left after warmup");
  }
  std::vector<int> ids = scene_ids;
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  ChunkPlan plan;
  plan.warmup.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(warm));
  const auto base = remaining / static_cast<std::size_t>(chunks);
  const auto extra = remaining % static_cast<std::size_t>(chunks);
  auto it = ids.begin() + static_cast<std::ptrdiff_t>(warm);
  for (std::size_t k = 0; k < static_cast<std::size_t>(chunks); ++k) {
    const auto size = base + (k < extra ? 1 : 0);
    plan.chunks.emplace_back(it, it + static_cast<std::ptrdiff_t>(size));
    it += static_cast<std::ptrdiff_t>(size);
  }
  return plan;
}

}  // namespace askcap
