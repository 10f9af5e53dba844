// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/corpus_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

namespace askcap {

using nlohmann::json;

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::filesystem::path vocab_path_for(const std::filesystem::path& corpus_path) {
  return corpus_path.parent_path() / "vocab.tsv";
}

json scene_to_json(const Scene& scene, const Vocabulary& vocab) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    json attrs = json::array();
    for (const auto a : o.attributes) attrs.push_back(vocab.word(a));
    json obj = {{"category", vocab.word(o.category)}, {"attributes", attrs}, {"slot", o.slot}};
    obj["action"] = o.action ? json(vocab.word(*o.action)) : json(nullptr);
    objects.push_back(std::move(obj));
  }
  json relations = json::array();
  for (const auto& r : scene.relations) {
    relations.push_back(
        {{"subject", r.subject}, {"preposition", vocab.word(r.preposition)}, {"object", r.object}});
  }
  return {{"id", scene.id}, {"objects", objects}, {"relations", relations}};
}

namespace {

class LineReader {
 public:
  LineReader(std::string file, const Vocabulary& vocab) : file_(std::move(file)), vocab_(vocab) {}

  void at(std::size_t line) { line_ = line; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, line_, what); }

  WordId word(const json& j, Pos expected, const char* field) const {
    if (!j.is_string()) fail(std::string("field '") + field + "' must be a string");
    const auto id = vocab_.find(j.get<std::string>());
    if (!id) fail("token '" + j.get<std::string>() + "' is not in the vocabulary");
    if (vocab_.pos(*id) != expected) {
      fail("word '" + j.get<std::string>() + "' in '" + field + "' must be " +
           std::string(to_string(expected)));
    }
    return *id;
  }

  Scene scene(const json& j) const {
    Scene s;
    s.id = j.at("id").get<int>();
    std::set<int> slots;
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      obj.category = word(o.at("category"), Pos::kNoun, "category");
      for (const auto& a : o.value("attributes", json::array())) {
        obj.attributes.push_back(word(a, Pos::kAdj, "attributes"));
      }
      if (o.contains("action") && !o.at("action").is_null()) {
        obj.action = word(o.at("action"), Pos::kVerb, "action");
      }
      obj.slot = o.at("slot").get<int>();
      if (!slots.insert(obj.slot).second) fail("duplicate slot in scene " + std::to_string(s.id));
      s.objects.push_back(std::move(obj));
    }
    if (s.objects.empty()) fail("scene " + std::to_string(s.id) + " has no objects");
    for (const auto& r : j.value("relations", json::array())) {
      Relation rel{r.at("subject").get<int>(), word(r.at("preposition"), Pos::kOther, "preposition"),
                   r.at("object").get<int>()};
      const auto n = static_cast<int>(s.objects.size());
      if (rel.subject < 0 || rel.subject >= n || rel.object < 0 || rel.object >= n) {
        fail("relation references a missing object");
      }
      s.relations.push_back(rel);
    }
    return s;
  }

  Caption caption(const json& j) const {
    Caption c;
    c.source = CaptionSource::kGt;
    const auto& tokens = j.at("tokens");
    if (tokens.size() > static_cast<std::size_t>(kMaxCaptionLength)) {
      fail("caption longer than " + std::to_string(kMaxCaptionLength) + " tokens");
    }
    for (const auto& t : tokens) {
      const auto id = vocab_.find(t.get<std::string>());
      if (!id) fail("token '" + t.get<std::string>() + "' is not in the vocabulary");
      c.tokens.push_back(*id);
    }
    if (j.contains("pos")) {
      const auto& tags = j.at("pos");
      if (tags.size() != tokens.size()) fail("pos list length differs from tokens");
      for (std::size_t i = 0; i < tags.size(); ++i) {
        const auto tag = parse_pos(tags[i].get<std::string>());
        if (!tag) fail("unknown POS tag '" + tags[i].get<std::string>() + "'");
        if (*tag != vocab_.pos(c.tokens[i])) fail("POS tag disagrees with the vocabulary");
        c.pos.push_back(*tag);
      }
    } else {
      for (const auto t : c.tokens) c.pos.push_back(vocab_.pos(t));
    }
    return c;
  }

 private:
  std::string file_;
  const Vocabulary& vocab_;
  std::size_t line_ = 0;
};

void load_vocab(const std::filesystem::path& path, Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open vocabulary file");
  std::vector<std::tuple<std::size_t, WordId, std::string>> aliases;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(path.string(), n, "expected word<TAB>POS[<TAB>category]");
    }
    const auto tag = parse_pos(fields[1]);
    if (!tag) throw ParseError(path.string(), n, "unknown POS tag '" + fields[1] + "'");
    WordId id;
    try {
      id = corpus.vocab.add(fields[0], *tag);
    } catch (const ConfigError& e) {
      throw ParseError(path.string(), n, e.what());
    }
    if (fields.size() == 3) aliases.emplace_back(n, id, fields[2]);
  }
  for (const auto& [line_no, id, category] : aliases) {
    const auto target = corpus.vocab.find(category);
    if (!target || corpus.vocab.pos(*target) != Pos::kNoun || corpus.vocab.pos(id) != Pos::kNoun) {
      throw ParseError(path.string(), line_no, "synonym must name a NOUN in the vocabulary");
    }
    corpus.synonyms.emplace(id, *target);
  }
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& corpus_path,
                 const std::filesystem::path& vocab_path) {
  if (corpus_path.has_parent_path()) std::filesystem::create_directories(corpus_path.parent_path());
  {
    std::ofstream out(vocab_path);
    if (!out) throw std::runtime_error("cannot write " + vocab_path.string());
    for (std::size_t i = 0; i < corpus.vocab.size(); ++i) {
      const auto id = static_cast<WordId>(i);
      if (corpus.vocab.is_special(id)) continue;
      out << corpus.vocab.word(id) << '\t' << to_string(corpus.vocab.pos(id));
      if (auto it = corpus.synonyms.find(id); it != corpus.synonyms.end()) {
        out << '\t' << corpus.vocab.word(it->second);
      }
      out << '\n';
    }
  }
  std::ofstream out(corpus_path);
  if (!out) throw std::runtime_error("cannot write " + corpus_path.string());
  for (std::size_t i = 0; i < corpus.scenes.size(); ++i) {
    const auto& scene = corpus.scenes[i];
    out << json{{"scene", scene_to_json(scene, corpus.vocab)}}.dump() << '\n';
    for (const auto& c : corpus.references[i]) {
      json tokens = json::array();
      json tags = json::array();
      for (std::size_t k = 0; k < c.tokens.size(); ++k) {
        tokens.push_back(corpus.vocab.word(c.tokens[k]));
        tags.push_back(std::string(to_string(c.pos[k])));
      }
      out << json{{"caption", {{"scene_id", scene.id}, {"tokens", tokens}, {"pos", tags}}}}.dump()
          << '\n';
    }
  }
}

Corpus load_corpus(const std::filesystem::path& corpus_path,
                   const std::filesystem::path& vocab_path) {
  std::ifstream in(corpus_path);
  if (!in) throw ParseError(corpus_path.string(), 0, "cannot open corpus file");

  Corpus corpus;
  if (std::filesystem::exists(vocab_path)) {
    load_vocab(vocab_path, corpus);
  }

  LineReader reader(corpus_path.string(), corpus.vocab);
  std::map<int, std::size_t> scene_index;
  std::vector<std::pair<std::size_t, json>> pending_captions;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    reader.at(n);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      reader.fail(std::string("malformed JSON: ") + e.what());
    }
    try {
      if (record.contains("scene")) {
        auto scene = reader.scene(record.at("scene"));
        if (!scene_index.emplace(scene.id, corpus.scenes.size()).second) {
          reader.fail("duplicate scene id " + std::to_string(scene.id));
        }
        corpus.scenes.push_back(std::move(scene));
        corpus.references.emplace_back();
      } else if (record.contains("caption")) {
        pending_captions.emplace_back(n, record.at("caption"));
      } else {
        reader.fail("record must contain 'scene' or 'caption'");
      }
    } catch (const json::exception& e) {
      reader.fail(std::string("bad record: ") + e.what());
    }
  }
  for (const auto& [line_no, j] : pending_captions) {
    reader.at(line_no);
    try {
      const int scene_id = j.at("scene_id").get<int>();
      const auto it = scene_index.find(scene_id);
      if (it == scene_index.end()) reader.fail("caption for unknown scene " + std::to_string(scene_id));
      corpus.references[it->second].push_back(reader.caption(j));
    } catch (const json::exception& e) {
      reader.fail(std::string("bad caption record: ") + e.what());
    }
  }
  corpus.reindex();
  return corpus;
}

}  // namespace askcap
