// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "askcap/teacher.hpp"

namespace askcap {

/// Answer a human gives when the question does not apply to the scene.
inline constexpr std::string_view kUnknownAnswer = "unknown";

enum class TaskKind { kAnswer, kScore, kWrite };

std::string_view to_string(TaskKind kind);
/// Response kind expected for a task: answer, score or caption.
std::string_view response_kind(TaskKind kind);

struct TeacherTask {
  std::int64_t id = 0;
  TaskKind kind = TaskKind::kAnswer;
  nlohmann::json payload;

  nlohmann::json to_json() const;
};

/// Thread-safe queue between the engine (posting tasks and blocking for
/// responses) and the HTTP front end (handing tasks out and accepting
/// responses). Responses are idempotent by task id.
class TaskQueue {
 public:
  enum class Submit { kAccepted, kDuplicate, kUnknown, kExpired, kInvalid };
  /// Returns an error message when `payload` is not acceptable for `task`.
  using Validator = std::function<std::optional<std::string>(const TeacherTask&, const nlohmann::json&)>;

  void set_validator(Validator v);
  std::int64_t post(TaskKind kind, nlohmann::json payload);
  /// Oldest task still waiting for a response.
  std::optional<TeacherTask> next() const;
  Submit respond(std::int64_t id, std::string_view kind, const nlohmann::json& payload,
                 std::string* error = nullptr);
  /// Blocks until task `id` is answered; on timeout the task expires and
  /// nullopt is returned.
  std::optional<nlohmann::json> wait(std::int64_t id, std::chrono::milliseconds timeout);

  void set_status(nlohmann::json status);
  nlohmann::json status() const;
  std::size_t open_tasks() const;

 private:
  enum class State { kOpen, kAnswered, kExpired };
  struct Entry {
    TeacherTask task;
    State state = State::kOpen;
    nlohmann::json response;
  };
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::int64_t, Entry> entries_;
  std::int64_t next_id_ = 1;
  Validator validator_;
  nlohmann::json status_ = nlohmann::json::object();
};

/// HTTP/JSON front end:
///   GET  /tasks/next            -> 200 task | 204
///   POST /tasks/{id}/response   {kind: answer|score|caption, payload}
///   GET  /status                -> ledger total and progress
class TeacherServer {
 public:
  explicit TeacherServer(TaskQueue& queue);
  ~TeacherServer();
  TeacherServer(const TeacherServer&) = delete;
  TeacherServer& operator=(const TeacherServer&) = delete;

  /// Binds and starts serving on a background thread; port 0 picks a free
  /// port. Throws std::runtime_error when the address cannot be bound.
  void start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// Teacher channel backed by a human working through the task queue.
/// Scores in 0..100 map linearly onto 0..mix_max.
class HumanChannel : public TeacherChannel {
 public:
  HumanChannel(TaskQueue& queue, std::shared_ptr<const Corpus> corpus, double mix_max,
               std::chrono::milliseconds timeout);

  std::optional<WordId> answer(const Scene& scene, const Question& q) override;
  std::optional<std::vector<double>> score(const Scene& scene,
                                           std::span<const Caption> candidates) override;
  std::optional<std::vector<Caption>> write(const Scene& scene, int m) override;
  bool human() const override { return true; }
  void set_progress(const nlohmann::json& progress) override;

 private:
  std::optional<nlohmann::json> ask(TaskKind kind, nlohmann::json payload);
  std::optional<std::string> validate(const TeacherTask& task, const nlohmann::json& payload) const;

  TaskQueue& queue_;
  std::shared_ptr<const Corpus> corpus_;
  double mix_max_;
  std::chrono::milliseconds timeout_;
  nlohmann::json progress_ = nlohmann::json::object();
};

nlohmann::json question_json(const Question& q);
/// Splits on whitespace and maps each word; nullopt if any word is unknown.
std::optional<Tokens> parse_caption_text(std::string_view text, const Vocabulary& vocab);

}  // namespace askcap
