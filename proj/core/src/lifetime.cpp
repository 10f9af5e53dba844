// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <regex>

#include "askcap/checkpoint.hpp"
#include "askcap/config_io.hpp"
#include "askcap/engine.hpp"
#include "askcap/seed.hpp"
#include "askcap/trace_io.hpp"

namespace askcap {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct State {
  int round = 0;
  double lambda = 1.0;
  std::vector<TrainItem> gt;
  std::vector<TrainItem> collected;
  std::vector<RoundStats> rows;
};

json items_json(const std::vector<TrainItem>& items) {
  json out = json::array();
  for (const auto& it : items) {
    out.push_back({{"scene_id", it.scene_id},
                   {"tokens", it.caption.tokens},
                   {"weight", it.weight},
                   {"source", std::string(to_string(it.caption.source))}});
  }
  return out;
}

std::vector<TrainItem> items_from(const json& j, const Vocabulary& vocab) {
  std::vector<TrainItem> out;
  for (const auto& e : j) {
    TrainItem it;
    it.scene_id = e.at("scene_id").get<int>();
    it.caption = Caption::from_tokens(e.at("tokens").get<Tokens>(), vocab,
                                      parse_caption_source(e.at("source").get<std::string>()).value());
    it.weight = e.at("weight").get<double>();
    if (it.caption.source != CaptionSource::kGt) it.caption.reward = it.weight;
    out.push_back(std::move(it));
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

fs::path checkpoint_dir(const fs::path& out, int round) {
  return out / "checkpoints" / ("round_" + std::to_string(round));
}

std::optional<int> latest_checkpoint(const fs::path& out) {
  const fs::path dir = out / "checkpoints";
  if (!fs::exists(dir)) return std::nullopt;
  std::optional<int> best;
  const std::regex pattern(R"(round_(\d+))");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, pattern) && fs::exists(e.path() / "state.json")) {
      const int r = std::stoi(m[1].str());
      if (!best || r > *best) best = r;
    }
  }
  return best;
}

void save_checkpoint(const fs::path& out, const State& state, const CaptionerParams& params,
                     const PolicyParams& policy, const SupervisionLedger& ledger,
                     const Teacher& teacher) {
  const fs::path dir = checkpoint_dir(out, state.round);
  fs::create_directories(dir);
  save_captioner(dir / "captioner.ckpt", params);
  save_policy(dir / "policy.ckpt", policy);
  json rows = json::array();
  for (const auto& r : state.rows) rows.push_back(stats_to_json(r));
  json issued = json::object();
  for (const auto& [id, idx] : teacher.issued()) issued[std::to_string(id)] = idx;
  write_json(dir / "state.json", {{"round", state.round},
                                  {"lambda", state.lambda},
                                  {"gt", items_json(state.gt)},
                                  {"collected", items_json(state.collected)},
                                  {"rows", rows},
                                  {"ledger", ledger.to_json()},
                                  {"issued", issued}});
}

std::vector<TrainItem> training_set(const State& state, double lambda) {
  std::vector<TrainItem> items;
  items.reserve(state.gt.size() + state.collected.size());
  for (auto it : state.gt) {
    it.weight = lambda;
    items.push_back(std::move(it));
  }
  for (const auto& it : state.collected) items.push_back(it);
  return items;
}

}  // namespace

EvalResult evaluate(const Captioner& captioner, const Corpus& corpus, std::span<const int> eval_ids,
                    const IdfTable& idf, const MixWeights& weights) {
  EvalResult out;
  if (eval_ids.empty()) return out;
  const StemTable stems = StemTable::from_vocabulary(corpus.vocab);
  for (int id : eval_ids) {
    Decoded d = captioner.decode_greedy(corpus.scene(id));
    std::vector<Tokens> refs;
    for (const auto& c : corpus.refs(id)) refs.push_back(c.tokens);
    const ReferenceSet ref_set(std::move(refs));
    const MetricScores s = score_all(d.caption.tokens, ref_set, idf, &stems);
    for (int k = 0; k < kNumMetrics; ++k) out.mean.values[static_cast<std::size_t>(k)] += s.values[static_cast<std::size_t>(k)];
    out.captions.push_back(std::move(d.caption));
  }
  for (auto& v : out.mean.values) v /= static_cast<double>(eval_ids.size());
  out.mix = mix_of(out.mean, weights);
  return out;
}

RunSetup prepare_run(const ExperimentConfig& config) {
  config.validate();
  RunSetup s;
  WorldConfig world = config.world;
  world.num_scenes = config.world.num_scenes + config.eval_scenes;
  auto corpus = std::make_shared<Corpus>(generate_world(world));
  const std::vector<int> ids = corpus->scene_ids();
  s.train_ids.assign(ids.begin(), ids.begin() + config.world.num_scenes);
  s.eval_ids.assign(ids.begin() + config.world.num_scenes, ids.end());
  s.plan = split_chunks(s.train_ids, config.warmup_fraction, config.chunks,
                        derive_seed(config.seed, {fnv1a("split")}));
  s.plan.m = config.m;
  s.layout = FeatureLayout(corpus->vocab, config.world.num_slots);
  s.teacher_idf = idf_for(*corpus, s.train_ids);
  s.eval_idf = idf_for(*corpus, s.eval_ids);
  s.corpus = std::move(corpus);
  return s;
}

LifetimeResult run_lifetime(const ExperimentConfig& config, const RunOptions& options) {
  return run_lifetime(config, prepare_run(config), options);
}

LifetimeResult run_lifetime(const ExperimentConfig& config, const RunSetup& setup,
                            const RunOptions& options) {
  config.validate();
  const Corpus& corpus = *setup.corpus;
  const Vocabulary& vocab = corpus.vocab;
  const std::shared_ptr<const Vocabulary> vocab_ptr(setup.corpus, &corpus.vocab);
  const bool persist = !options.out_dir.empty();
  const fs::path trace_dir = options.out_dir / "traces";
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  TeacherConfig tc = config.teacher;
  tc.seed = derive_seed(config.seed, {fnv1a("teacher")});
  Teacher teacher(setup.corpus, tc, setup.teacher_idf);
  SyntheticChannel synthetic(teacher);
  TeacherChannel& channel = options.channel != nullptr ? *options.channel : synthetic;

  LifetimeResult result;
  State state;
  SupervisionLedger ledger;
  CaptionerParams params;
  Rng policy_rng(derive_seed(config.seed, {fnv1a("policy")}));
  PolicyParams policy = PolicyParams::random(StepFeatures::vector_size(config.train.width),
                                             config.dm_hidden, policy_rng, config.dm_init_scale);

  auto finish_row = [&](RoundStats& row, const Captioner& captioner, RoundTrace& trace) {
    const EvalResult ev = evaluate(captioner, corpus, setup.eval_ids, setup.eval_idf,
                                   config.teacher.weights);
    row.mode = std::string(to_string(config.mode));
    row.seed = config.seed;
    row.mix = ev.mix;
    row.cider = ev.mean[Metric::kCider];
    row.bleu4 = ev.mean[Metric::kBleu4];
    row.rouge = ev.mean[Metric::kRougeL];
    row.meteor = ev.mean[Metric::kMeteor];
    row.supervision_total = ledger.total();
    row.gt_captions_used = static_cast<int>(state.gt.size());
    vocabulary_stats(ev.captions, row);
    for (std::size_t i = 0; i < setup.eval_ids.size(); ++i) {
      trace.evals.push_back({setup.eval_ids[i], ev.captions[i]});
    }
    trace.summary = stats_to_json(row);
    if (persist) write_round_trace(trace_dir / ("round_" + std::to_string(trace.round) + ".jsonl"), trace, vocab);
  };

  int start_round = 1;
  std::optional<int> resume_from;
  if (persist && options.resume) resume_from = latest_checkpoint(options.out_dir);

  if (persist) {
    fs::create_directories(options.out_dir);
    write_json(options.out_dir / "manifest.json",
               {{"version", kVersion},
                {"seed", config.seed},
                {"mode", std::string(to_string(config.mode))},
                {"config", config_to_json(config)},
                {"outputs",
                 {{"results", "results.csv"}, {"traces", "traces"}, {"checkpoints", "checkpoints"}}}});
  }

  if (resume_from) {
    const fs::path dir = checkpoint_dir(options.out_dir, *resume_from);
    const json st = read_json(dir / "state.json");
    state.round = st.at("round").get<int>();
    state.lambda = st.at("lambda").get<double>();
    state.gt = items_from(st.at("gt"), vocab);
    state.collected = items_from(st.at("collected"), vocab);
    for (const auto& r : st.at("rows")) state.rows.push_back(stats_from_json(r));
    ledger = SupervisionLedger::from_json(st.at("ledger"));
    std::map<int, std::vector<int>> issued;
    for (const auto& [k, v] : st.at("issued").items()) issued[std::stoi(k)] = v.get<std::vector<int>>();
    teacher.set_issued(std::move(issued));
    params = load_captioner(dir / "captioner.ckpt");
    policy = load_policy(dir / "policy.ckpt", &policy);
    start_round = state.round + 1;
    log("resuming after round " + std::to_string(state.round));
  } else {
    RoundTrace trace;
    trace.round = 0;
    trace.human = channel.human();
    for (int id : setup.plan.warmup) {
      const auto& refs = corpus.refs(id);
      const int n = std::min<int>(setup.plan.gt_per_warmup_scene, static_cast<int>(refs.size()));
      std::vector<Caption> caps(refs.begin(), refs.begin() + n);
      for (const auto& c : caps) state.gt.push_back({id, c, 1.0});
      ledger.charge_writes(n);
      trace.writes.push_back({id, "warmup", std::move(caps), true});
    }
    if (options.warmup) {
      params = *options.warmup;
    } else {
      TrainConfig tc0 = config.train;
      tc0.seed = derive_seed(config.seed, {fnv1a("train"), 0});
      params = train_mle(training_set(state, 1.0), corpus, setup.layout, tc0);
    }
    result.warmup = params;
    RoundStats row;
    row.round = 0;
    row.lambda = 1.0;
    finish_row(row, Captioner(params, vocab_ptr, setup.layout), trace);
    state.rows.push_back(row);
    if (persist) save_checkpoint(options.out_dir, state, params, policy, ledger, teacher);
    log("round 0: mix " + std::to_string(row.mix));
  }

  const int rounds = static_cast<int>(setup.plan.chunks.size());
  result.completed = true;
  for (int r = start_round; r <= rounds; ++r) {
    if (options.stop_after_round >= 0 && r > options.stop_after_round) {
      result.completed = false;
      break;
    }
    const std::vector<int>& chunk = setup.plan.chunks[static_cast<std::size_t>(r - 1)];
    const Captioner captioner(params, vocab_ptr, setup.layout);
    const AgentView agent{captioner, corpus, channel, ledger};
    RoundTrace trace;
    trace.round = r;
    trace.human = channel.human();
    double lambda = 1.0;
    std::vector<Interaction> buffer;

    auto write_gt = [&](int id, const char* reason) {
      auto caps = channel.write(corpus.scene(id), config.m);
      if (!caps) throw std::runtime_error("teacher timed out while writing captions");
      ledger.charge_writes(static_cast<int>(caps->size()));
      for (const auto& c : *caps) state.gt.push_back({id, c, 1.0});
      trace.writes.push_back({id, reason, std::move(*caps), true});
    };

    if (config.mode == StudentMode::kInquisitive || config.mode == StudentMode::kMute) {
      const bool mute = config.mode == StudentMode::kMute;
      CollectionOptions opts;
      opts.round = r;
      opts.passes = mute ? config.passes_mute : config.passes_inquisitive;
      opts.mute = mute;
      opts.jitter_temperature = config.jitter_temperature;
      opts.mute_temperature = config.mute_temperature;
      opts.questions = config.questions;
      opts.strategy = config.dm;
      opts.dm_lr = config.dm_lr;
      opts.seed = derive_seed(config.seed, {fnv1a("collect")});
      opts.progress = [&](const json& p) { channel.set_progress(p); };
      CollectionResult res = collection_phase(agent, chunk, policy, opts);
      auto keep = keep_best_and_give_up(res.buffer, chunk, config.h_percent, config.m, corpus,
                                        channel, ledger);
      if (!keep) throw std::runtime_error("teacher timed out while writing captions");
      std::vector<double> rewards;
      for (const auto& it : keep->collected) rewards.push_back(it.weight);
      lambda = rewards.empty() ? state.lambda : nearest_rank_quantile(rewards, config.lambda_quantile);
      if (!(lambda > 0.0)) lambda = state.lambda;
      state.lambda = lambda;
      for (auto& it : keep->collected) state.collected.push_back(std::move(it));
      for (auto& [id, caps] : keep->written) {
        for (const auto& c : caps) state.gt.push_back({id, c, 1.0});
        trace.writes.push_back({id, "give_up", std::move(caps), true});
      }
      buffer = std::move(res.buffer);
    } else if (config.mode == StudentMode::kEqualGt) {
      std::vector<int> pool = chunk;
      Rng rng(derive_seed(config.seed, {fnv1a("equal_gt"), static_cast<std::uint64_t>(r)}));
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t n = chunk.size() - static_cast<std::size_t>(
                                               kept_count(static_cast<int>(chunk.size()), config.h_percent));
      pool.resize(n);
      std::sort(pool.begin(), pool.end());
      for (int id : pool) write_gt(id, "equal_gt");
    } else {
      for (int id : chunk) write_gt(id, "all_gt");
    }

    TrainConfig tcr = config.train;
    tcr.seed = derive_seed(config.seed, {fnv1a("train"), static_cast<std::uint64_t>(r)});
    tcr.weight_scale = 1.0 / lambda;
    params = train_mle(training_set(state, lambda), corpus, setup.layout, tcr);

    RoundStats row;
    row.round = r;
    row.lambda = lambda;
    collection_stats(buffer, vocab, row);
    trace.interactions = buffer;
    finish_row(row, Captioner(params, vocab_ptr, setup.layout), trace);
    state.rows.push_back(row);
    state.round = r;
    if (persist) save_checkpoint(options.out_dir, state, params, policy, ledger, teacher);
    result.buffers.push_back(std::move(buffer));
    log("round " + std::to_string(r) + ": mix " + std::to_string(row.mix) + ", supervision " +
        std::to_string(ledger.total()));
  }

  if (persist) write_results_csv(options.out_dir / "results.csv", state.rows);
  result.params = std::move(params);
  result.policy = std::move(policy);
  result.rounds = state.rows;
  result.ledger = ledger;
  return result;
}

}  // namespace askcap
