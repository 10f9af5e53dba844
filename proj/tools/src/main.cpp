// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "askcap/config_io.hpp"
#include "askcap/corpus_io.hpp"
#include "askcap/engine.hpp"
#include "askcap/human_bridge.hpp"
#include "askcap/metrics.hpp"
#include "askcap_tools/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_root(const std::string& flag, const char* fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ASKCAP_OUT"); env != nullptr && *env != '\0') {
    return fs::path(env) / fallback;
  }
  return fs::path("askcap_out") / fallback;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      if (const auto dots = part.find(".."); dots != std::string::npos) {
        const auto lo = std::stoull(part.substr(0, dots));
        const auto hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) throw UsageError("seed range '" + part + "' is empty");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      } else {
        out.push_back(std::stoull(part));
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad seed list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("no seeds given");
  return out;
}

// ---------------------------------------------------------------------------
// gen-world

struct GenWorldArgs {
  askcap::WorldConfig world;
  std::string out;
};

int gen_world(const GenWorldArgs& args) {
  const askcap::Corpus corpus = askcap::generate_world(args.world);
  const fs::path dir(args.out);
  fs::create_directories(dir);
  askcap::save_corpus(corpus, dir / "corpus.jsonl", dir / "vocab.tsv");
  std::cout << "wrote " << corpus.scenes.size() << " scenes to " << (dir / "corpus.jsonl").string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string config;
  std::string mode;
  std::string dm;
  std::string seeds = "1";
  std::string out;
  std::string serve;
  bool resume = false;
  int stop_after = -1;
  double teacher_timeout = 3600.0;
};

int run(const RunArgs& args) {
  askcap::ExperimentConfig base;
  if (!args.config.empty()) base = askcap::load_config(args.config);
  if (!args.mode.empty()) {
    const auto mode = askcap::parse_student_mode(args.mode);
    if (!mode) throw UsageError("unknown mode '" + args.mode + "'");
    base.mode = *mode;
  }
  if (!args.dm.empty()) {
    const auto dm = askcap::parse_dm_strategy(args.dm);
    if (!dm) throw UsageError("unknown decision strategy '" + args.dm + "'");
    base.dm = *dm;
  }
  const auto seeds = parse_seeds(args.seeds);
  const fs::path root = output_root(args.out, "runs");

  std::unique_ptr<askcap::TaskQueue> queue;
  std::unique_ptr<askcap::TeacherServer> server;
  if (!args.serve.empty()) {
    if (seeds.size() != 1) throw UsageError("--serve-teacher takes a single seed");
    const auto colon = args.serve.rfind(':');
    if (colon == std::string::npos) throw UsageError("--serve-teacher expects host:port");
    int port = 0;
    try {
      port = std::stoi(args.serve.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw UsageError("bad port in '" + args.serve + "'");
    }
    queue = std::make_unique<askcap::TaskQueue>();
    server = std::make_unique<askcap::TeacherServer>(*queue);
    server->start(args.serve.substr(0, colon), port);
    std::cerr << "teacher protocol listening on " << args.serve.substr(0, colon) << ':'
              << server->port() << '\n';
  }

  for (const auto seed : seeds) {
    askcap::ExperimentConfig config = base;
    config.seed = seed;
    config.validate();
    askcap::RunOptions options;
    options.out_dir = seeds.size() == 1 && !args.out.empty() ? root : root / ("seed_" + std::to_string(seed));
    options.resume = args.resume;
    options.stop_after_round = args.stop_after;
    options.log = [seed](const std::string& msg) {
      std::cerr << "[seed " << seed << "] " << msg << '\n';
    };
    const askcap::RunSetup setup = askcap::prepare_run(config);
    std::unique_ptr<askcap::HumanChannel> human;
    if (queue) {
      human = std::make_unique<askcap::HumanChannel>(
          *queue, setup.corpus, config.teacher.weights.max_score(),
          std::chrono::milliseconds(static_cast<long long>(args.teacher_timeout * 1000)));
      options.channel = human.get();
    }
    const auto result = askcap::run_lifetime(config, setup, options);
    const auto& last = result.rounds.back();
    std::cout << "seed " << seed << " " << askcap::to_string(config.mode) << ": round " << last.round
              << " mix " << last.mix << " supervision " << last.supervision_total << " -> "
              << options.out_dir.string() << '\n';
  }
  if (server) server->stop();
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string candidate;
  std::vector<std::string> refs;
  std::string metric = "all";
  std::string batch;
  std::string weights;
};

askcap::Tokens tokenize(const std::string& text, askcap::Vocabulary& vocab) {
  askcap::Tokens out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    const auto id = vocab.find(w);
    out.push_back(id ? *id : vocab.add(w, askcap::Pos::kOther));
  }
  return out;
}

const std::vector<std::pair<std::string, askcap::Metric>>& metric_names() {
  static const std::vector<std::pair<std::string, askcap::Metric>> kNames = {
      {"bleu1", askcap::Metric::kBleu1}, {"bleu2", askcap::Metric::kBleu2},
      {"bleu3", askcap::Metric::kBleu3}, {"bleu4", askcap::Metric::kBleu4},
      {"rouge", askcap::Metric::kRougeL}, {"meteor", askcap::Metric::kMeteor},
      {"cider", askcap::Metric::kCider}};
  return kNames;
}

int score(const ScoreArgs& args) {
  askcap::MixWeights weights = askcap::MixWeights::defaults();
  if (!args.weights.empty()) {
    std::ifstream in(args.weights);
    if (!in) throw UsageError("cannot open weights file " + args.weights);
    try {
      weights = askcap::weights_from_json(json::parse(in), askcap::MixWeights{});
    } catch (const json::exception& e) {
      throw askcap::ConfigError(std::string("bad weights file: ") + e.what());
    }
    weights.validate();
  }
  const auto& names = metric_names();
  const bool all = args.metric == "all";
  const bool is_mix = args.metric == "mix";
  if (!all && !is_mix &&
      std::none_of(names.begin(), names.end(), [&](const auto& p) { return p.first == args.metric; })) {
    throw UsageError("unknown metric '" + args.metric + "'");
  }

  askcap::Vocabulary vocab;
  std::vector<std::pair<askcap::Tokens, std::vector<askcap::Tokens>>> pairs;
  if (!args.batch.empty()) {
    std::ifstream in(args.batch);
    if (!in) throw UsageError("cannot open batch file " + args.batch);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      std::vector<askcap::Tokens> refs;
      for (const auto& r : j.at("refs")) refs.push_back(tokenize(r.get<std::string>(), vocab));
      pairs.emplace_back(tokenize(j.at("candidate").get<std::string>(), vocab), std::move(refs));
    }
  } else {
    if (args.refs.empty()) throw UsageError("--refs is required without --batch");
    std::vector<askcap::Tokens> refs;
    for (const auto& r : args.refs) refs.push_back(tokenize(r, vocab));
    pairs.emplace_back(tokenize(args.candidate, vocab), std::move(refs));
  }
  std::vector<std::vector<askcap::Tokens>> pools;
  for (const auto& p : pairs) pools.push_back(p.second);
  const auto idf = askcap::IdfTable::build(pools);

  for (const auto& [cand, refs] : pairs) {
    const askcap::ReferenceSet set(refs);
    const auto s = askcap::score_all(cand, set, idf);
    if (all) {
      std::string sep;
      for (const auto& [name, m] : names) {
        std::cout << sep << name << '=' << s[m];
        sep = " ";
      }
      std::cout << " mix=" << askcap::mix_of(s, weights) << '\n';
    } else if (is_mix) {
      std::cout << askcap::mix_of(s, weights) << '\n';
    } else {
      for (const auto& [name, m] : names) {
        if (name == args.metric) std::cout << s[m] << '\n';
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string traces;
  std::string out;
  bool charts = true;
};

int report(const ReportArgs& args) {
  const auto rows = askcap::report::aggregate(askcap::report::collect_summaries(args.traces));
  const fs::path out = output_root(args.out, "report");
  fs::create_directories(out);
  askcap::report::write_csv(out / "summary.csv", rows);
  if (args.charts && !rows.empty()) {
    askcap::report::write_svg_reward_by_round(out / "mix_by_round.svg", rows);
    askcap::report::write_svg_mix_by_supervision(out / "mix_by_supervision.svg", rows);
  }
  std::cout << "aggregated " << rows.size() << " rows into " << (out / "summary.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"askcap: captioning agents that learn by asking"};
  app.require_subcommand(1);
  std::cout.precision(12);

  GenWorldArgs gw;
  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic scene corpus");
  gen->add_option("--scenes", gw.world.num_scenes, "Number of scenes");
  gen->add_option("--seed", gw.world.seed, "World seed");
  gen->add_option("--nouns", gw.world.nouns, "Noun categories");
  gen->add_option("--verbs", gw.world.verbs, "Verbs");
  gen->add_option("--adjs", gw.world.adjs, "Adjectives");
  gen->add_option("--max-objects", gw.world.max_objects, "Objects per scene (upper bound)");
  gen->add_option("--synonyms", gw.world.synonym_fraction, "Fraction of nouns with a synonym");
  gen->add_option("--out", gw.out, "Output directory")->required();

  RunArgs ra;
  auto* runc = app.add_subcommand("run", "Run lifetime learning");
  runc->add_option("--config", ra.config, "YAML or JSON experiment config")->check(CLI::ExistingFile);
  runc->add_option("--mode", ra.mode, "inquisitive | mute | equal_gt | all_gt");
  runc->add_option("--dm", ra.dm, "learned | random | max_entropy | closeness_score | never");
  runc->add_option("--seed", ra.seeds, "Seed, list (1,3) or range (1..5)");
  runc->add_option("--out", ra.out, "Output directory");
  runc->add_option("--serve-teacher", ra.serve, "Serve the human-teacher protocol on host:port");
  runc->add_option("--teacher-timeout", ra.teacher_timeout, "Seconds to wait for a human response");
  runc->add_flag("--resume", ra.resume, "Continue from the latest checkpoint");
  runc->add_option("--stop-after", ra.stop_after, "Stop after this round");

  ScoreArgs sa;
  auto* scorec = app.add_subcommand("score", "Score captions against references");
  scorec->add_option("--candidate", sa.candidate, "Candidate caption");
  scorec->add_option("--refs", sa.refs, "Reference captions");
  scorec->add_option("--metric", sa.metric, "bleu1..bleu4 | rouge | meteor | cider | mix | all");
  scorec->add_option("--batch", sa.batch, "JSONL file of {candidate, refs} pairs");
  scorec->add_option("--weights", sa.weights, "JSON file of Mix weights");

  ReportArgs rp;
  auto* reportc = app.add_subcommand("report", "Aggregate traces into CSV and charts");
  reportc->add_option("--traces", rp.traces, "Directory searched for round_<k>.jsonl files")->required();
  reportc->add_option("--out", rp.out, "Output directory");
  reportc->add_flag("!--no-charts", rp.charts, "Skip SVG charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return gen_world(gw);
    if (*runc) return run(ra);
    if (*scorec) return score(sa);
    if (*reportc) return report(rp);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const askcap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const askcap::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
