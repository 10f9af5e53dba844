// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/trace_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <regex>
#include <sstream>

#include "askcap/corpus_io.hpp"

namespace askcap {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kSourceNames = {"gt", "greedy", "sampled", "rollout",
                                                          "replace"};

json words(const Tokens& tokens, const Vocabulary& vocab) {
  json out = json::array();
  for (WordId w : tokens) out.push_back(vocab.word(w));
  return out;
}

Tokens ids(const json& j, const Vocabulary& vocab) {
  Tokens out;
  for (const auto& w : j) out.push_back(vocab.id(w.get<std::string>()));
  return out;
}

json caption_json(const Caption& c, const Vocabulary& vocab) {
  json j = {{"tokens", words(c.tokens, vocab)}, {"source", std::string(to_string(c.source))}};
  json pos = json::array();
  for (Pos p : c.pos) pos.push_back(std::string(to_string(p)));
  j["pos"] = pos;
  return j;
}

Caption caption_from(const json& j, const Vocabulary& vocab) {
  Caption c = Caption::from_tokens(ids(j.at("tokens"), vocab), vocab,
                                   parse_caption_source(j.at("source").get<std::string>()).value());
  return c;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

}  // namespace

std::string_view to_string(CaptionSource source) {
  return kSourceNames.at(static_cast<std::size_t>(source));
}

std::optional<CaptionSource> parse_caption_source(std::string_view text) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == text) return static_cast<CaptionSource>(i);
  }
  return std::nullopt;
}

json interaction_to_json(const Interaction& it, const Vocabulary& vocab, bool human) {
  json cands = json::array();
  for (const auto& c : it.candidates) {
    json cj = caption_json(c.caption, vocab);
    cj["reward"] = c.reward;
    cands.push_back(std::move(cj));
  }
  json asks = json::array();
  for (const auto& a : it.asks) {
    json aj = {{"step", a.step == kNoAsk ? json(nullptr) : json(a.step)},
               {"log_prob", a.log_prob},
               {"sampled", a.sampled},
               {"charged_answer", a.charged_answer}};
    if (a.question) {
      const Question& q = *a.question;
      aj["question"] = {{"qtype", std::string(to_string(q.qtype))},
                        {"text", q.text()},
                        {"target_step", q.target_step},
                        {"target_pos", std::string(to_string(q.target_pos))},
                        {"referent",
                         {{"noun", q.referent.noun ? json(vocab.word(*q.referent.noun)) : json(nullptr)},
                          {"slot", q.referent.slot}}}};
      aj["answer"] = vocab.word(a.answer);
      aj["answer_pos"] = std::string(to_string(vocab.pos(a.answer)));
      json top = json::array();
      for (const auto& [w, p] : a.top10) top.push_back({vocab.word(w), p});
      aj["top10"] = top;
    } else {
      aj["question"] = nullptr;
      aj["answer"] = nullptr;
    }
    asks.push_back(std::move(aj));
  }
  return {{"type", "interaction"},
          {"round", it.round},
          {"pass", it.pass},
          {"scene_id", it.scene_id},
          {"branch", it.sampled_branch ? "sampled" : "greedy"},
          {"human", human},
          {"candidates", cands},
          {"asks", asks},
          {"chosen", it.chosen},
          {"caption", words(it.best().caption.tokens, vocab)},
          {"reward", it.best().reward},
          {"charged_score", it.charged_score}};
}

Interaction interaction_from_json(const json& j, const Vocabulary& vocab) {
  Interaction it;
  it.round = j.at("round").get<int>();
  it.pass = j.at("pass").get<int>();
  it.scene_id = j.at("scene_id").get<int>();
  it.sampled_branch = j.at("branch").get<std::string>() == "sampled";
  it.chosen = j.at("chosen").get<int>();
  it.charged_score = j.at("charged_score").get<bool>();
  for (const auto& cj : j.at("candidates")) {
    it.candidates.push_back({caption_from(cj, vocab), cj.at("reward").get<double>()});
  }
  for (const auto& aj : j.at("asks")) {
    AskRecord a;
    a.step = aj.at("step").is_null() ? kNoAsk : aj.at("step").get<int>();
    a.log_prob = aj.at("log_prob").get<double>();
    a.sampled = aj.at("sampled").get<bool>();
    a.charged_answer = aj.at("charged_answer").get<bool>();
    if (!aj.at("question").is_null()) {
      const json& qj = aj.at("question");
      Question q;
      q.qtype = parse_question_type(qj.at("qtype").get<std::string>()).value();
      std::istringstream text(qj.at("text").get<std::string>());
      for (std::string w; text >> w;) q.tokens.push_back(w);
      q.target_step = qj.at("target_step").get<int>();
      q.target_pos = parse_pos(qj.at("target_pos").get<std::string>()).value();
      const json& ref = qj.at("referent");
      if (!ref.at("noun").is_null()) q.referent.noun = vocab.id(ref.at("noun").get<std::string>());
      q.referent.slot = ref.at("slot").get<int>();
      a.question = std::move(q);
      a.answer = vocab.id(aj.at("answer").get<std::string>());
      for (const auto& t : aj.at("top10")) {
        a.top10.emplace_back(vocab.id(t.at(0).get<std::string>()), t.at(1).get<double>());
      }
    }
    it.asks.push_back(std::move(a));
  }
  return it;
}

json stats_to_json(const RoundStats& s) {
  return {{"round", s.round},
          {"mode", s.mode},
          {"seed", s.seed},
          {"mix", s.mix},
          {"cider", s.cider},
          {"bleu4", s.bleu4},
          {"rouge", s.rouge},
          {"meteor", s.meteor},
          {"supervision_total", s.supervision_total},
          {"gt_captions_used", s.gt_captions_used},
          {"atop3", opt(s.atop3)},
          {"atop5", opt(s.atop5)},
          {"atop10", opt(s.atop10)},
          {"improved_pct", opt(s.improved_pct)},
          {"uniq_nouns", s.uniq_nouns},
          {"uniq_verbs", s.uniq_verbs},
          {"uniq_adjs", s.uniq_adjs},
          {"mean_collected_reward", opt(s.mean_collected_reward)},
          {"answer_pos_hist", s.answer_pos_hist},
          {"questions_asked", s.questions_asked},
          {"lambda", s.lambda}};
}

RoundStats stats_from_json(const json& j) {
  RoundStats s;
  s.round = j.at("round").get<int>();
  s.mode = j.at("mode").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.mix = j.at("mix").get<double>();
  s.cider = j.at("cider").get<double>();
  s.bleu4 = j.at("bleu4").get<double>();
  s.rouge = j.at("rouge").get<double>();
  s.meteor = j.at("meteor").get<double>();
  s.supervision_total = j.at("supervision_total").get<double>();
  s.gt_captions_used = j.at("gt_captions_used").get<int>();
  s.atop3 = opt_from(j.at("atop3"));
  s.atop5 = opt_from(j.at("atop5"));
  s.atop10 = opt_from(j.at("atop10"));
  s.improved_pct = opt_from(j.at("improved_pct"));
  s.uniq_nouns = j.at("uniq_nouns").get<int>();
  s.uniq_verbs = j.at("uniq_verbs").get<int>();
  s.uniq_adjs = j.at("uniq_adjs").get<int>();
  s.mean_collected_reward = opt_from(j.at("mean_collected_reward"));
  s.answer_pos_hist = j.at("answer_pos_hist").get<std::array<int, kNumPos>>();
  s.questions_asked = j.at("questions_asked").get<int>();
  s.lambda = j.at("lambda").get<double>();
  return s;
}

void write_round_trace(const std::filesystem::path& path, const RoundTrace& trace,
                       const Vocabulary& vocab) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << json{{"type", "round_begin"}, {"round", trace.round}, {"human", trace.human}}.dump() << '\n';
    for (const auto& it : trace.interactions) {
      out << interaction_to_json(it, vocab, trace.human).dump() << '\n';
    }
    for (const auto& w : trace.writes) {
      json caps = json::array();
      for (const auto& c : w.captions) caps.push_back(caption_json(c, vocab));
      out << json{{"type", "write"},     {"round", trace.round}, {"scene_id", w.scene_id},
                  {"reason", w.reason},  {"captions", caps},     {"charged", w.charged}}
                 .dump()
          << '\n';
    }
    for (const auto& e : trace.evals) {
      json cj = caption_json(e.caption, vocab);
      cj["type"] = "eval";
      cj["round"] = trace.round;
      cj["scene_id"] = e.scene_id;
      out << cj.dump() << '\n';
    }
    out << json{{"type", "round_end"}, {"round", trace.round}, {"summary", trace.summary}}.dump() << '\n';
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RoundTrace read_round_trace(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  RoundTrace trace;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "round_begin") {
        trace.round = j.at("round").get<int>();
        trace.human = j.at("human").get<bool>();
      } else if (type == "interaction") {
        trace.interactions.push_back(interaction_from_json(j, vocab));
      } else if (type == "write") {
        TraceWrite w;
        w.scene_id = j.at("scene_id").get<int>();
        w.reason = j.at("reason").get<std::string>();
        w.charged = j.at("charged").get<bool>();
        for (const auto& c : j.at("captions")) w.captions.push_back(caption_from(c, vocab));
        trace.writes.push_back(std::move(w));
      } else if (type == "eval") {
        trace.evals.push_back({j.at("scene_id").get<int>(), caption_from(j, vocab)});
      } else if (type == "round_end") {
        trace.summary = j.at("summary");
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw ParseError(path.string(), n, e.what());
    }
  }
  return trace;
}

std::vector<RoundTrace> read_trace_dir(const std::filesystem::path& dir, const Vocabulary& vocab) {
  std::vector<std::pair<int, std::filesystem::path>> files;
  const std::regex pattern(R"(round_(\d+)\.jsonl)");
  if (std::filesystem::exists(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (std::regex_match(name, m, pattern)) files.emplace_back(std::stoi(m[1].str()), entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RoundTrace> out;
  for (const auto& [round, path] : files) out.push_back(read_round_trace(path, vocab));
  return out;
}

SupervisionLedger replay_ledger(std::span<const RoundTrace> rounds) {
  SupervisionLedger ledger;
  for (const auto& r : rounds) {
    for (const auto& w : r.writes) {
      if (w.reason == "warmup" && w.charged) ledger.charge_writes(static_cast<int>(w.captions.size()));
    }
    for (const auto& it : r.interactions) {
      std::vector<Tokens> scored;
      for (const auto& c : it.candidates) scored.push_back(c.caption.tokens);
      ledger.charge_scoring(it.scene_id, scored);
      for (const auto& a : it.asks) {
        if (a.question) ledger.charge_answer(it.scene_id, a.question->text(), r.human);
      }
    }
    for (const auto& w : r.writes) {
      if (w.reason != "warmup" && w.charged) ledger.charge_writes(static_cast<int>(w.captions.size()));
    }
  }
  return ledger;
}

RoundStats replay_stats(const RoundTrace& trace, const Vocabulary& vocab) {
  RoundStats s;
  s.round = trace.round;
  collection_stats(trace.interactions, vocab, s);
  std::vector<Caption> evals;
  for (const auto& e : trace.evals) evals.push_back(e.caption);
  vocabulary_stats(evals, s);
  return s;
}

}  // namespace askcap
