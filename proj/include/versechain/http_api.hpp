// Copyright 2026 The versechain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP surface of the session service.
//
//   POST /sessions                  {spec, config, provider} -> {session}
//   GET  /sessions                  -> {sessions: [...]}
//   GET  /sessions/{id}             -> {session}
//   POST /sessions/{id}/control     {command, n?, seed?} -> {status, session}
//   PUT  /sessions/{id}/constraints {spec} -> {session}
//   GET  /sessions/{id}/stream      text/event-stream of snapshot | emission |
//                                   status | constraints events
//   GET  /sessions/{id}/export      run log document (text/plain)
//
// Errors come back as {error: "E_...", message, position?}.

#ifndef VERSECHAIN_HTTP_API_HPP
#define VERSECHAIN_HTTP_API_HPP

#include <chrono>
#include <memory>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "versechain/error.hpp"
#include "versechain/session.hpp"

namespace versechain {

inline int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoSession: return 404;
    case ErrorCode::kBadTransition: return 409;
    case ErrorCode::kInfeasible:
    case ErrorCode::kConflictingPins: return 422;
    case ErrorCode::kProviderFailure: return 502;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

inline std::string format_sse(const SessionEvent& event) {
  return "id: " + std::to_string(event.seq) + "\nevent: " + event.type + "\ndata: " +
         json({{"seq", event.seq}, {"type", event.type}, {"data", event.data}}).dump() + "\n\n";
}

namespace detail {

inline void send_error(httplib::Response& res, const Error& e) {
  json body = {{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}};
  if (e.where()) body["position"] = *e.where();
  res.status = http_status_for(e.code());
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_error(res, Error(ErrorCode::kInvalidArgument, std::string("bad request body: ") + e.what()));
    }
  };
}

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body);
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be an object");
  return body;
}

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace detail

/// Registers every endpoint on `server`. The manager must outlive it.
inline void mount_session_api(httplib::Server& server, std::shared_ptr<SessionManager> manager) {
  using detail::guarded;
  using detail::parse_body;
  using detail::send_json;
  const std::string id_pattern = "([A-Za-z0-9]+)";

  server.Post("/sessions", guarded([manager](const httplib::Request& req, httplib::Response& res) {
                json body = parse_body(req);
                if (!body.contains("spec") || !body["spec"].is_string())
                  throw Error(ErrorCode::kInvalidArgument, "'spec' must be a string");
                const SamplerConfig cfg = config_from_json(body.value("config", json()));
                const std::string provider = body.value("provider", std::string());
                auto session = manager->create_session(body["spec"].get<std::string>(), cfg, provider);
                send_json(res, {{"session", session->to_json()}}, 201);
              }));

  server.Get("/sessions", guarded([manager](const httplib::Request&, httplib::Response& res) {
               json sessions = json::array();
               for (const auto& s : manager->list()) sessions.push_back(s->to_json());
               send_json(res, {{"sessions", sessions}});
             }));

  server.Get("/sessions/" + id_pattern, guarded([manager](const httplib::Request& req, httplib::Response& res) {
               send_json(res, {{"session", manager->get(req.matches[1])->to_json()}});
             }));

  server.Post("/sessions/" + id_pattern + "/control",
              guarded([manager](const httplib::Request& req, httplib::Response& res) {
                json body = parse_body(req);
                const std::string command = body.value("command", std::string());
                const std::uint64_t n = body.value("n", std::uint64_t{1});
                std::optional<std::uint64_t> seed;
                if (body.contains("seed") && !body["seed"].is_null()) seed = body["seed"].get<std::uint64_t>();
                const std::string id = req.matches[1];
                const SessionStatus status = manager->control(id, command, n, seed);
                send_json(res, {{"status", status_name(status)}, {"session", manager->get(id)->to_json()}});
              }));

  server.Put("/sessions/" + id_pattern + "/constraints",
             guarded([manager](const httplib::Request& req, httplib::Response& res) {
               json body = parse_body(req);
               if (!body.contains("spec") || !body["spec"].is_string())
                 throw Error(ErrorCode::kInvalidArgument, "'spec' must be a string");
               send_json(res, {{"session", manager->edit_constraints(req.matches[1], body["spec"].get<std::string>())}});
             }));

  server.Get("/sessions/" + id_pattern + "/export",
             guarded([manager](const httplib::Request& req, httplib::Response& res) {
               res.set_content(manager->export_run(req.matches[1]), "text/plain");
             }));

  server.Get("/sessions/" + id_pattern + "/stream",
             guarded([manager](const httplib::Request& req, httplib::Response& res) {
               auto sub = manager->stream_state(req.matches[1]);
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider("text/event-stream", [sub](std::size_t, httplib::DataSink& sink) {
                 while (!sub->finished()) {
                   auto event = sub->next(std::chrono::milliseconds(250));
                   if (!event) {
                     if (!sink.is_writable()) return false;
                     continue;
                   }
                   const std::string chunk = format_sse(*event);
                   return sink.write(chunk.data(), chunk.size());
                 }
                 sink.done();
                 return true;
               });
             }));
}

}  // namespace versechain

#endif  // VERSECHAIN_HTTP_API_HPP
