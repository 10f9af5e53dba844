// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/config_io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace askcap {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumMetrics> kMetricKeys = {
    "bleu1", "bleu2", "bleu3", "bleu4", "rouge", "meteor", "cider"};

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& v : node) out.push_back(yaml_to_json(v));
      return out;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      if (s == "true" || s == "false") return s == "true";
      if (s == "null" || s == "~") return nullptr;
      try {
        std::size_t used = 0;
        const long long i = std::stoll(s, &used);
        if (used == s.size()) return i;
      } catch (const std::exception&) {
      }
      try {
        std::size_t used = 0;
        const double d = std::stod(s, &used);
        if (used == s.size()) return d;
      } catch (const std::exception&) {
      }
      return s;
    }
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      break;
  }
  return nullptr;
}

/// Walks one JSON object, handing each known key to its setter and
/// rejecting the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a mapping");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      if constexpr (std::is_floating_point_v<T>) {
        if (!j_.at(key).is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!j_.at(key).is_number_integer()) throw ConfigError("");
      }
      out = j_.at(key).get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  template <typename F>
  void sub(const char* key, F&& f) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    Reader r(j_.at(key), where(key));
    f(r);
    r.finish();
  }

  /// Hands the raw value to `f`, which does its own validation.
  template <typename F>
  void raw(const char* key, F&& f) {
    seen_.push_back(key);
    if (j_.contains(key)) f(j_.at(key));
  }

  template <typename E, typename Parse>
  void enumeration(const char* key, E& out, Parse parse) {
    std::string text;
    get(key, text);
    if (!j_.contains(key)) return;
    const auto v = parse(text);
    if (!v) throw ConfigError(where(key) + ": unknown value '" + text + "'");
    out = *v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw ConfigError("unknown config key '" + where(k.c_str()) + "'");
      }
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_;
    if (key != nullptr) p += (p.empty() ? "" : ".") + std::string(key);
    return p.empty() ? "<root>" : p;
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

std::optional<TeacherMode> parse_teacher_mode(std::string_view s) {
  if (s == "synthetic") return TeacherMode::kSynthetic;
  if (s == "human") return TeacherMode::kHuman;
  return std::nullopt;
}

}  // namespace

json weights_to_json(const MixWeights& w) {
  json out = json::object();
  for (std::size_t i = 0; i < kMetricKeys.size(); ++i) out[std::string(kMetricKeys[i])] = w.w[i];
  return out;
}

MixWeights weights_from_json(const json& j, MixWeights base) {
  Reader r(j, "weights");
  for (std::size_t i = 0; i < kMetricKeys.size(); ++i) r.get(std::string(kMetricKeys[i]).c_str(), base.w[i]);
  r.finish();
  base.validate();
  return base;
}

json config_to_json(const ExperimentConfig& c) {
  const auto& w = c.world;
  const auto& t = c.train;
  return {
      {"seed", c.seed},
      {"mode", std::string(to_string(c.mode))},
      {"world",
       {{"num_scenes", w.num_scenes}, {"nouns", w.nouns}, {"verbs", w.verbs}, {"adjs", w.adjs},
        {"min_objects", w.min_objects}, {"max_objects", w.max_objects}, {"num_slots", w.num_slots},
        {"synonym_fraction", w.synonym_fraction}, {"zipf_exponent", w.zipf_exponent},
        {"action_probability", w.action_probability}, {"seed", w.seed}}},
      {"eval_scenes", c.eval_scenes},
      {"warmup_fraction", c.warmup_fraction},
      {"chunks", c.chunks},
      {"h_percent", c.h_percent},
      {"m", c.m},
      {"questions", c.questions},
      {"passes", {{"inquisitive", c.passes_inquisitive}, {"mute", c.passes_mute}}},
      {"temperature", {{"mute", c.mute_temperature}, {"jitter", c.jitter_temperature}}},
      {"decision",
       {{"strategy", std::string(to_string(c.dm))}, {"lr", c.dm_lr}, {"hidden", c.dm_hidden},
        {"init_scale", c.dm_init_scale}}},
      {"lambda_quantile", c.lambda_quantile},
      {"teacher",
       {{"epsilon", c.teacher.epsilon},
        {"mode", c.teacher.mode == TeacherMode::kHuman ? "human" : "synthetic"},
        {"weights", weights_to_json(c.teacher.weights)}}},
      {"train",
       {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"lr", t.lr}, {"lr_decay", t.lr_decay},
        {"lr_decay_every", t.lr_decay_every},
        {"ss_word", {{"start", t.ss_word_start}, {"step", t.ss_word_step}, {"every", t.ss_word_every}}},
        {"ss_pos", {{"start", t.ss_pos_start}, {"step", t.ss_pos_step}, {"every", t.ss_pos_every}}},
        {"pos_loss_weight", t.pos_loss_weight}, {"width", t.width}, {"pos_width", t.pos_width},
        {"init_scale", t.init_scale}, {"grad_clip", t.grad_clip}}},
  };
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  Reader r(j, "");
  r.get("seed", c.seed);
  r.enumeration("mode", c.mode, parse_student_mode);
  r.sub("world", [&](Reader& w) {
    w.get("num_scenes", c.world.num_scenes);
    w.get("nouns", c.world.nouns);
    w.get("verbs", c.world.verbs);
    w.get("adjs", c.world.adjs);
    w.get("min_objects", c.world.min_objects);
    w.get("max_objects", c.world.max_objects);
    w.get("num_slots", c.world.num_slots);
    w.get("synonym_fraction", c.world.synonym_fraction);
    w.get("zipf_exponent", c.world.zipf_exponent);
    w.get("action_probability", c.world.action_probability);
    w.get("seed", c.world.seed);
  });
  r.get("eval_scenes", c.eval_scenes);
  r.get("warmup_fraction", c.warmup_fraction);
  r.get("chunks", c.chunks);
  r.get("h_percent", c.h_percent);
  r.get("m", c.m);
  r.get("questions", c.questions);
  r.sub("passes", [&](Reader& p) {
    p.get("inquisitive", c.passes_inquisitive);
    p.get("mute", c.passes_mute);
  });
  r.sub("temperature", [&](Reader& p) {
    p.get("mute", c.mute_temperature);
    p.get("jitter", c.jitter_temperature);
  });
  r.sub("decision", [&](Reader& d) {
    d.enumeration("strategy", c.dm, parse_dm_strategy);
    d.get("lr", c.dm_lr);
    d.get("hidden", c.dm_hidden);
    d.get("init_scale", c.dm_init_scale);
  });
  r.get("lambda_quantile", c.lambda_quantile);
  r.sub("teacher", [&](Reader& t) {
    t.get("epsilon", c.teacher.epsilon);
    t.enumeration("mode", c.teacher.mode, parse_teacher_mode);
    t.raw("weights", [&](const json& w) { c.teacher.weights = weights_from_json(w, c.teacher.weights); });
  });
  r.sub("train", [&](Reader& t) {
    auto& tc = c.train;
    t.get("epochs", tc.epochs);
    t.get("batch_size", tc.batch_size);
    t.get("lr", tc.lr);
    t.get("lr_decay", tc.lr_decay);
    t.get("lr_decay_every", tc.lr_decay_every);
    t.sub("ss_word", [&](Reader& s) {
      s.get("start", tc.ss_word_start);
      s.get("step", tc.ss_word_step);
      s.get("every", tc.ss_word_every);
    });
    t.sub("ss_pos", [&](Reader& s) {
      s.get("start", tc.ss_pos_start);
      s.get("step", tc.ss_pos_step);
      s.get("every", tc.ss_pos_every);
    });
    t.get("pos_loss_weight", tc.pos_loss_weight);
    t.get("width", tc.width);
    t.get("pos_width", tc.pos_width);
    t.get("init_scale", tc.init_scale);
    t.get("grad_clip", tc.grad_clip);
  });
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node node;
  try {
    node = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (node.IsNull()) return config_from_json(json::object());
  return config_from_json(yaml_to_json(node));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace askcap
