// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/human_bridge.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>

#include "askcap/corpus_io.hpp"

namespace askcap {

using nlohmann::json;

namespace {

std::optional<WordId> answer_word(const std::string& word, const Vocabulary& vocab) {
  if (word == kUnknownAnswer) return Vocabulary::kUnk;
  const auto id = vocab.find(word);
  if (!id || vocab.is_special(*id)) return std::nullopt;
  return id;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kAnswer: return "answer";
    case TaskKind::kScore: return "score";
    case TaskKind::kWrite: return "write";
  }
  return "?";
}

std::string_view response_kind(TaskKind kind) {
  return kind == TaskKind::kWrite ? "caption" : to_string(kind);
}

json TeacherTask::to_json() const {
  return {{"id", id}, {"kind", std::string(to_string(kind))}, {"payload", payload}};
}

void TaskQueue::set_validator(Validator v) {
  std::lock_guard lock(mu_);
  validator_ = std::move(v);
}

std::int64_t TaskQueue::post(TaskKind kind, json payload) {
  std::lock_guard lock(mu_);
  const std::int64_t id = next_id_++;
  entries_.emplace(id, Entry{TeacherTask{id, kind, std::move(payload)}, State::kOpen, json()});
  return id;
}

std::optional<TeacherTask> TaskQueue::next() const {
  std::lock_guard lock(mu_);
  for (const auto& [id, e] : entries_) {
    if (e.state == State::kOpen) return e.task;
  }
  return std::nullopt;
}

TaskQueue::Submit TaskQueue::respond(std::int64_t id, std::string_view kind, const json& payload,
                                     std::string* error) {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(id);
  if (it == entries_.end()) return Submit::kUnknown;
  Entry& e = it->second;
  if (e.state == State::kAnswered) return Submit::kDuplicate;
  if (e.state == State::kExpired) return Submit::kExpired;
  if (kind != response_kind(e.task.kind)) {
    if (error) *error = "expected kind '" + std::string(response_kind(e.task.kind)) + "'";
    return Submit::kInvalid;
  }
  if (validator_) {
    if (auto msg = validator_(e.task, payload)) {
      if (error) *error = *msg;
      return Submit::kInvalid;
    }
  }
  e.state = State::kAnswered;
  e.response = payload;
  cv_.notify_all();
  return Submit::kAccepted;
}

std::optional<json> TaskQueue::wait(std::int64_t id, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw std::invalid_argument("unknown task id");
  const bool done = cv_.wait_for(lock, timeout, [&] { return it->second.state == State::kAnswered; });
  if (!done) {
    it->second.state = State::kExpired;
    return std::nullopt;
  }
  return it->second.response;
}

void TaskQueue::set_status(json status) {
  std::lock_guard lock(mu_);
  status_ = std::move(status);
}

json TaskQueue::status() const {
  std::lock_guard lock(mu_);
  json s = status_;
  std::size_t open = 0;
  for (const auto& [id, e] : entries_) open += e.state == State::kOpen;
  s["open_tasks"] = open;
  return s;
}

std::size_t TaskQueue::open_tasks() const {
  std::lock_guard lock(mu_);
  std::size_t open = 0;
  for (const auto& [id, e] : entries_) open += e.state == State::kOpen;
  return open;
}

struct TeacherServer::Impl {
  httplib::Server server;
  std::thread thread;
};

TeacherServer::TeacherServer(TaskQueue& queue) : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.Get("/tasks/next", [&queue](const httplib::Request&, httplib::Response& res) {
    auto task = queue.next();
    if (!task) {
      res.status = 204;
      return;
    }
    json body = task->to_json();
    body["status"] = queue.status();
    res.set_content(body.dump(), "application/json");
  });
  svr.Get("/status", [&queue](const httplib::Request&, httplib::Response& res) {
    res.set_content(queue.status().dump(), "application/json");
  });
  svr.Post(R"(/tasks/(\d+)/response)", [&queue](const httplib::Request& req, httplib::Response& res) {
    auto reply = [&](int status, json body) {
      res.status = status;
      res.set_content(body.dump(), "application/json");
    };
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return reply(400, {{"error", "body is not JSON"}});
    }
    if (!body.is_object() || !body.contains("kind") || !body["kind"].is_string() ||
        !body.contains("payload")) {
      return reply(400, {{"error", "expected {kind, payload}"}});
    }
    std::int64_t id = 0;
    try {
      id = std::stoll(req.matches[1].str());
    } catch (const std::exception&) {
      return reply(404, {{"error", "unknown task"}});
    }
    std::string error;
    switch (queue.respond(id, body["kind"].get<std::string>(), body["payload"], &error)) {
      case TaskQueue::Submit::kAccepted:
        return reply(200, {{"status", "accepted"}});
      case TaskQueue::Submit::kDuplicate:
        return reply(200, {{"status", "duplicate"}});
      case TaskQueue::Submit::kUnknown:
        return reply(404, {{"error", "unknown task"}});
      case TaskQueue::Submit::kExpired:
        return reply(409, {{"error", "task expired"}});
      case TaskQueue::Submit::kInvalid:
        return reply(400, {{"error", error}});
    }
  });
}

TeacherServer::~TeacherServer() { stop(); }

void TeacherServer::start(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    port_ = svr.bind_to_any_port(host);
    if (port_ < 0) throw std::runtime_error("cannot bind " + host);
  } else {
    if (!svr.bind_to_port(host, port)) {
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
  }
  impl_->thread = std::thread([&svr] { svr.listen_after_bind(); });
  svr.wait_until_ready();
}

void TeacherServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

json question_json(const Question& q) {
  return {{"qtype", std::string(to_string(q.qtype))},
          {"text", q.text()},
          {"target_step", q.target_step},
          {"target_pos", std::string(to_string(q.target_pos))}};
}

std::optional<Tokens> parse_caption_text(std::string_view text, const Vocabulary& vocab) {
  std::istringstream in{std::string(text)};
  Tokens out;
  std::string word;
  while (in >> word) {
    const auto id = vocab.find(word);
    if (!id || vocab.is_special(*id)) return std::nullopt;
    out.push_back(*id);
  }
  return out;
}

HumanChannel::HumanChannel(TaskQueue& queue, std::shared_ptr<const Corpus> corpus, double mix_max,
                           std::chrono::milliseconds timeout)
    : queue_(queue), corpus_(std::move(corpus)), mix_max_(mix_max), timeout_(timeout) {
  queue_.set_validator([this](const TeacherTask& t, const json& p) { return validate(t, p); });
}

std::optional<std::string> HumanChannel::validate(const TeacherTask& task, const json& payload) const {
  const Vocabulary& vocab = corpus_->vocab;
  switch (task.kind) {
    case TaskKind::kAnswer: {
      if (!payload.is_string()) return "answer payload must be a word";
      if (!answer_word(payload.get<std::string>(), vocab)) {
        return "unknown word '" + payload.get<std::string>() + "'";
      }
      return std::nullopt;
    }
    case TaskKind::kScore: {
      const std::size_t n = task.payload.at("candidates").size();
      json scores = payload.is_array() ? payload : json::array({payload});
      if (scores.size() != n) return "expected " + std::to_string(n) + " scores";
      for (const auto& s : scores) {
        if (!s.is_number() || s.get<double>() < 0.0 || s.get<double>() > 100.0) {
          return "scores must be numbers in [0, 100]";
        }
      }
      return std::nullopt;
    }
    case TaskKind::kWrite: {
      if (!payload.is_string()) return "caption payload must be a string";
      const auto tokens = parse_caption_text(payload.get<std::string>(), vocab);
      if (!tokens) return "caption contains words outside the vocabulary";
      if (tokens->empty() || tokens->size() > static_cast<std::size_t>(kMaxCaptionLength)) {
        return "caption must have 1 to " + std::to_string(kMaxCaptionLength) + " words";
      }
      return std::nullopt;
    }
  }
  return "unknown task kind";
}

void HumanChannel::set_progress(const json& progress) {
  progress_ = progress;
  queue_.set_status(progress);
}

std::optional<json> HumanChannel::ask(TaskKind kind, json payload) {
  payload["progress"] = progress_;
  payload["ledger_total"] = progress_.value("ledger_total", 0.0);
  const auto id = queue_.post(kind, std::move(payload));
  return queue_.wait(id, timeout_);
}

std::optional<WordId> HumanChannel::answer(const Scene& scene, const Question& q) {
  auto r = ask(TaskKind::kAnswer,
               {{"scene", scene_to_json(scene, corpus_->vocab)}, {"question", question_json(q)}});
  if (!r) return std::nullopt;
  return answer_word(r->get<std::string>(), corpus_->vocab);
}

std::optional<std::vector<double>> HumanChannel::score(const Scene& scene,
                                                       std::span<const Caption> candidates) {
  json texts = json::array();
  for (const auto& c : candidates) texts.push_back(corpus_->vocab.join(c.tokens));
  auto r = ask(TaskKind::kScore,
               {{"scene", scene_to_json(scene, corpus_->vocab)}, {"candidates", texts}});
  if (!r) return std::nullopt;
  const json scores = r->is_array() ? *r : json::array({*r});
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(s.get<double>() / 100.0 * mix_max_);
  return out;
}

std::optional<std::vector<Caption>> HumanChannel::write(const Scene& scene, int m) {
  std::vector<Caption> out;
  for (int i = 0; i < m; ++i) {
    auto r = ask(TaskKind::kWrite, {{"scene", scene_to_json(scene, corpus_->vocab)},
                                    {"index", i},
                                    {"count", m}});
    if (!r) return std::nullopt;
    auto tokens = parse_caption_text(r->get<std::string>(), corpus_->vocab);
    out.push_back(Caption::from_tokens(std::move(*tokens), corpus_->vocab, CaptionSource::kGt));
  }
  return out;
}

}  // namespace askcap
