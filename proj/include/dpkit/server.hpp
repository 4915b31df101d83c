#pragma once

#include <chrono>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>

#include "dpkit/errors.hpp"
#include "dpkit/html_export.hpp"
#include "dpkit/quiz.hpp"
#include "dpkit/trace.hpp"
#include "dpkit/trace_json.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dpkit {

inline constexpr int default_server_port = 8050;

// DPKIT_PORT when set to a valid port, 8050 otherwise.
inline int default_port() {
  if (const char* env = std::getenv("DPKIT_PORT")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v < 65536) return static_cast<int>(v);
  }
  return default_server_port;
}

class StartupError : public Error {
 public:
  using Error::Error;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServiceOptions {
  std::chrono::steady_clock::duration idle_timeout = std::chrono::minutes(60);
};

/// Transport-independent request handling for the trace and quiz API.
///
/// Quiz state stays on the server; question payloads never include ground
/// truth. While any session is active, frames at or after the earliest frame
/// still being quizzed are withheld from the viewing endpoints.
class SessionService {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SessionService(Trace trace, ServiceOptions options = {})
      : trace_(std::make_shared<const Trace>(std::move(trace))),
        options_(options),
        rng_(std::random_device{}()) {}

  const Trace& trace() const { return *trace_; }

  ApiResponse get_trace() {
    const auto horizon = redaction_horizon();
    if (!horizon) return {200, serialize_trace(*trace_)};
    Trace visible = *trace_;
    visible.frames.resize(*horizon - 1);
    visible.traceback.reset();
    auto doc = trace_to_json(visible);
    doc["redacted_from"] = *horizon;
    return {200, json_detail::escape_html_sensitive(doc.dump())};
  }

  ApiResponse get_frame(const std::string& t_text) {
    std::size_t t = 0;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(t_text, &used);
      if (used != t_text.size() || v < 1) return error(404, "no frame " + t_text);
      t = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      return error(404, "no frame " + t_text);
    }
    if (t > trace_->frames.size()) return error(404, "no frame " + t_text);
    if (const auto horizon = redaction_horizon(); horizon && t >= *horizon) {
      return error(403, "frame " + t_text + " is hidden while a test session is active");
    }
    const Frame& frame = trace_->frames[t - 1];
    Trace one;
    one.shape = trace_->shape;
    one.frames = {frame};
    ojson body;
    body["frame"] = trace_to_json(one)["frames"][0];
    body["snapshot"] = snapshot_json(frame_snapshot(*trace_, t));
    return {200, json_detail::escape_html_sensitive(body.dump())};
  }

  ApiResponse create_session(const std::string& request_body) {
    KindSet enabled = all_question_kinds();
    std::size_t start_t = 1;
    try {
      const auto req = request_body.empty() ? nlohmann::json::object() : nlohmann::json::parse(request_body);
      if (!req.is_object()) return error(400, "expected JSON object");
      if (auto it = req.find("enabled"); it != req.end()) {
        if (!it->is_array()) return error(400, "enabled must be an array");
        enabled.clear();
        for (const auto& k : *it) {
          const auto kind = k.is_string() ? parse_question_kind(k.get<std::string>()) : std::nullopt;
          if (!kind) return error(400, "unknown question kind " + k.dump());
          enabled.insert(*kind);
        }
      }
      if (auto it = req.find("start_t"); it != req.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 1) return error(400, "start_t must be a positive integer");
        start_t = it->get<std::size_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      return error(400, e.what());
    }

    SessionState state;
    try {
      state = start_session(trace_, std::move(enabled), start_t);
    } catch (const Error& e) {
      return error(400, e.what());
    }

    std::lock_guard lock(mutex_);
    purge_expired_locked();
    std::string id;
    do {
      id = new_id_locked();
    } while (sessions_.contains(id));
    auto entry = std::make_shared<Entry>();
    entry->state = std::move(state);
    entry->last_used = Clock::now();
    ojson body;
    body["session_id"] = id;
    describe(entry->state, body);
    sessions_.emplace(id, std::move(entry));
    return {201, body.dump()};
  }

  ApiResponse post_answer(const std::string& session_id, const std::string& request_body) {
    std::shared_ptr<Entry> entry;
    {
      std::lock_guard lock(mutex_);
      purge_expired_locked();
      auto it = sessions_.find(session_id);
      if (it == sessions_.end()) return error(404, "unknown session " + session_id);
      entry = it->second;
    }

    std::string question_id;
    Answer answer;
    try {
      const auto req = nlohmann::json::parse(request_body);
      if (!req.is_object() || !req.contains("question_id") || !req["question_id"].is_string()) {
        return error(400, "question_id is required");
      }
      question_id = req["question_id"].get<std::string>();
      if (req.contains("cells") == req.contains("value")) return error(400, "give exactly one of cells or value");
      if (req.contains("value")) {
        if (!req["value"].is_number()) return error(400, "value must be a number");
        answer = Answer::value(req["value"].get<double>());
      } else {
        const auto& cells = req["cells"];
        if (!cells.is_array()) return error(400, "cells must be an array");
        CellSet set;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          set.push_back(json_detail::parse_index(cells[i], trace_->shape, "cells[" + std::to_string(i) + "]"));
        }
        answer = Answer::cells(std::move(set));
      }
    } catch (const nlohmann::json::exception& e) {
      return error(400, e.what());
    } catch (const ParseError& e) {
      return error(400, e.what());
    }

    std::lock_guard session_lock(entry->mutex);
    entry->last_used = Clock::now();
    const SessionState& before = entry->state;
    SessionState after;
    try {
      after = submit(before, question_id, answer);
    } catch (const StateError& e) {
      return error(409, e.what());
    } catch (const ArgumentError& e) {
      return error(400, e.what());
    }
    const Verdict& verdict = after.history.back().verdict;
    ojson body;
    body["correct"] = verdict.correct;
    // Missing cells are reported as a count only; listing them would reveal the answer.
    body["missing_count"] = verdict.missing.size();
    body["extra"] = json_detail::index_list(verdict.extra);
    body["value_mismatch"] = verdict.value_mismatch;
    body["advanced"] = after.t > before.t;
    describe(after, body);
    entry->state = std::move(after);
    return {200, body.dump()};
  }

  // Copy of a session's state; used by tests and diagnostics.
  std::optional<SessionState> session(const std::string& id) {
    std::shared_ptr<Entry> entry;
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return std::nullopt;
      entry = it->second;
    }
    std::lock_guard session_lock(entry->mutex);
    return entry->state;
  }

  std::size_t active_sessions() {
    std::lock_guard lock(mutex_);
    purge_expired_locked();
    return sessions_.size();
  }

 private:
  struct Entry {
    std::mutex mutex;
    SessionState state;
    Clock::time_point last_used;
  };

  static ApiResponse error(int status, const std::string& message) {
    return {status, nlohmann::json{{"error", message}}.dump()};
  }

  ojson snapshot_json(const Snapshot& snap) const {
    auto cell = [&](std::size_t flat) -> ojson {
      return snap[flat] ? json_detail::number(*snap[flat]) : ojson(nullptr);
    };
    ojson out = ojson::array();
    if (trace_->shape.dims() == 1) {
      for (std::size_t i = 0; i < snap.size(); ++i) out.push_back(cell(i));
      return out;
    }
    for (std::size_t r = 0; r < trace_->shape.extent(0); ++r) {
      ojson row = ojson::array();
      for (std::size_t c = 0; c < trace_->shape.extent(1); ++c) row.push_back(cell(trace_->shape.flat({r, c})));
      out.push_back(std::move(row));
    }
    return out;
  }

  static void describe(const SessionState& s, ojson& body) {
    body["t"] = s.t;
    body["complete"] = s.complete();
    body["mistakes"] = s.mistakes;
    ojson questions = ojson::array();
    for (const auto& q : s.pending) {
      ojson jq;
      jq["id"] = q.id;
      jq["kind"] = std::string(to_string(q.kind));
      jq["t"] = q.t;
      if (q.target) jq["target"] = json_detail::index(*q.target);
      questions.push_back(std::move(jq));
    }
    body["questions"] = std::move(questions);
  }

  // Earliest frame still being quizzed by any live session.
  std::optional<std::size_t> redaction_horizon() {
    std::lock_guard lock(mutex_);
    purge_expired_locked();
    std::optional<std::size_t> horizon;
    for (const auto& [id, entry] : sessions_) {
      std::lock_guard session_lock(entry->mutex);
      if (entry->state.complete()) continue;
      if (!horizon || entry->state.t < *horizon) horizon = entry->state.t;
    }
    return horizon;
  }

  void purge_expired_locked() {
    const auto now = Clock::now();
    std::erase_if(sessions_, [&](const auto& item) {
      std::lock_guard session_lock(item.second->mutex);
      return now - item.second->last_used > options_.idle_timeout;
    });
  }

  std::string new_id_locked() {
    static constexpr char hex[] = "0123456789abcdef";
    std::string id;
    for (int word = 0; word < 2; ++word) {
      auto bits = rng_();
      for (int i = 0; i < 16; ++i, bits >>= 4) id += hex[bits & 0xf];
    }
    return id;
  }

  std::shared_ptr<const Trace> trace_;
  ServiceOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mt19937_64 rng_;
};

/// HTTP front end for SessionService. The listener runs on a background thread
/// from start() until stop() or destruction.
class SessionServer {
 public:
  explicit SessionServer(Trace trace, ServiceOptions options = {}) : service_(std::move(trace), options) {
    auto send = [](httplib::Response& res, const ApiResponse& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    http_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    http_.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(viewer_page(), "text/html; charset=utf-8");
    });
    http_.Get("/api/trace", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, service_.get_trace());
    });
    http_.Get(R"(/api/frames/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.get_frame(req.matches[1]));
    });
    http_.Post("/api/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.create_session(req.body));
    });
    http_.Post(R"(/api/sessions/([^/]+)/answers)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.post_answer(req.matches[1], req.body));
    });
    http_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    http_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(nlohmann::json{{"error", "HTTP " + std::to_string(res.status)}}.dump(), "application/json");
      }
    });
  }

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  ~SessionServer() { stop(); }

  /// Binds and starts serving. Port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port) {
    if (port == 0) {
      port_ = http_.bind_to_any_port(host);
      if (port_ < 0) throw StartupError("cannot bind " + host + " to any port");
    } else {
      if (!http_.bind_to_port(host, port)) {
        throw StartupError("cannot bind " + host + ":" + std::to_string(port) + " (port unavailable?)");
      }
      port_ = port;
    }
    listener_ = std::thread([this] { http_.listen_after_bind(); });
    http_.wait_until_ready();
    return port_;
  }

  // Blocks until stop() is called from another thread.
  void wait() {
    if (listener_.joinable()) listener_.join();
  }

  void stop() {
    http_.stop();
    if (listener_.joinable()) listener_.join();
  }

  int port() const { return port_; }
  SessionService& service() { return service_; }

 private:
  SessionService service_;
  httplib::Server http_;
  std::thread listener_;
  int port_ = -1;
};

}  // namespace dpkit
