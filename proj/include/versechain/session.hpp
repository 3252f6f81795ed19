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

// Composition sessions: a chain plus its constraints, driven by control
// commands, broadcasting events to subscribers and appending to a run log.
//
// Status transitions:
//   idle    --start-->  running
//   running --pause-->  paused     (also automatic when max_steps is hit)
//   paused  --start-->  running
//   running|paused --provider failure--> errored
//   idle|paused|errored --reset--> idle
// step(n) and constraint edits are only legal while idle or paused.

#ifndef VERSECHAIN_SESSION_HPP
#define VERSECHAIN_SESSION_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "versechain/constraints.hpp"
#include "versechain/error.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/run_log.hpp"
#include "versechain/sampler.hpp"
#include "versechain/vocabulary.hpp"

namespace versechain {

using json = nlohmann::json;

enum class SessionStatus { kIdle, kRunning, kPaused, kErrored };

inline std::string status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::kIdle: return "idle";
    case SessionStatus::kRunning: return "running";
    case SessionStatus::kPaused: return "paused";
    case SessionStatus::kErrored: return "errored";
  }
  return "unknown";
}

struct SessionEvent {
  std::uint64_t seq = 0;  // per-session broadcast counter; snapshots carry the last one sent
  std::string type;       // snapshot | emission | status | constraints
  json data;
};

/// Ordered event queue for one subscriber.
class Subscription {
 public:
  static constexpr std::size_t kMaxQueued = 10000;

  /// Next event, or nullopt on timeout or once closed and drained.
  std::optional<SessionEvent> next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    SessionEvent event = std::move(queue_.front());
    queue_.pop_front();
    return event;
  }

  bool finished() const {
    std::lock_guard lock(mu_);
    return closed_ && queue_.empty();
  }

  void push(SessionEvent event) {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (queue_.size() >= kMaxQueued) {
      // A consumer this far behind has to resnapshot anyway.
      closed_ = true;
    } else {
      queue_.push_back(std::move(event));
    }
    cv_.notify_all();
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SessionEvent> queue_;
  bool closed_ = false;
};

/// Named providers. Factories run once, on first use.
class ProviderRegistry {
 public:
  void add(const std::string& name, ProviderPtr provider) {
    std::lock_guard lock(mu_);
    ready_[name] = std::move(provider);
  }

  void add_factory(const std::string& name, std::function<ProviderPtr()> factory) {
    std::lock_guard lock(mu_);
    factories_[name] = std::move(factory);
  }

  ProviderPtr get(const std::string& name) {
    std::lock_guard lock(mu_);
    if (auto it = ready_.find(name); it != ready_.end()) return it->second;
    auto it = factories_.find(name);
    if (it == factories_.end()) throw Error(ErrorCode::kProviderFailure, "unknown provider '" + name + "'");
    ProviderPtr provider;
    try {
      provider = it->second();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kProviderFailure) throw;
      throw Error(ErrorCode::kProviderFailure, "provider '" + name + "': " + e.what());
    }
    ready_[name] = provider;
    return provider;
  }

  std::vector<std::string> names() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [name, p] : ready_) out.push_back(name);
    for (const auto& [name, f] : factories_)
      if (!ready_.contains(name)) out.push_back(name);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, ProviderPtr> ready_;
  std::map<std::string, std::function<ProviderPtr()>> factories_;
};

inline json config_to_json(const SamplerConfig& cfg) {
  json j = {{"proposal_temperature", cfg.proposal_temperature},
            {"target_temperature", cfg.target_temperature},
            {"burn_in", cfg.burn_in},
            {"thinning", cfg.thinning},
            {"rng_seed", cfg.rng_seed}};
  j["max_steps"] = cfg.max_steps ? json(*cfg.max_steps) : json(nullptr);
  return j;
}

inline SamplerConfig config_from_json(const json& j) {
  SamplerConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be an object");
  try {
    cfg.proposal_temperature = j.value("proposal_temperature", cfg.proposal_temperature);
    cfg.target_temperature = j.value("target_temperature", cfg.target_temperature);
    cfg.burn_in = j.value("burn_in", cfg.burn_in);
    cfg.thinning = j.value("thinning", cfg.thinning);
    cfg.rng_seed = j.value("rng_seed", j.value("seed", cfg.rng_seed));
    if (j.contains("max_steps") && !j["max_steps"].is_null()) cfg.max_steps = j["max_steps"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline std::string iso_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SessionOptions {
  std::string log_dir;                         // empty: run logs kept in memory
  std::chrono::microseconds step_delay{1000};  // pause between steps while running
};

class Session {
 public:
  Session(std::string id, std::string spec_text, ConstraintSet cs, PositionMasks masks, SamplerConfig cfg,
          std::string provider_name, ProviderPtr provider, ChainState chain, RunLogWriter log,
          std::chrono::microseconds step_delay)
      : id_(std::move(id)),
        spec_text_(std::move(spec_text)),
        cs_(std::move(cs)),
        masks_(std::move(masks)),
        cfg_(cfg),
        provider_name_(std::move(provider_name)),
        provider_(std::move(provider)),
        chain_(std::move(chain)),
        log_(std::move(log)),
        step_delay_(step_delay),
        created_(std::chrono::system_clock::now()),
        updated_(created_) {}

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ~Session() { shutdown(); }

  const std::string& id() const { return id_; }

  SessionStatus status() const {
    std::lock_guard lock(mu_);
    return status_;
  }

  json to_json() const {
    std::lock_guard lock(mu_);
    return to_json_locked();
  }

  /// Current chain state; for tests and inspection.
  ChainState chain() const {
    std::lock_guard lock(mu_);
    return chain_;
  }

  ConstraintSet constraints() const {
    std::lock_guard lock(mu_);
    return cs_;
  }

  SessionStatus start() {
    std::lock_guard control(control_mu_);
    {
      std::lock_guard lock(mu_);
      if (status_ != SessionStatus::kIdle && status_ != SessionStatus::kPaused)
        throw Error(ErrorCode::kBadTransition, "cannot start a " + status_name(status_) + " session");
    }
    if (worker_.joinable()) worker_.join();  // a finished auto-paused worker
    std::lock_guard lock(mu_);
    stop_ = false;
    set_status_locked(SessionStatus::kRunning);
    worker_ = std::thread([this] { work(); });
    return status_;
  }

  SessionStatus pause() {
    std::lock_guard control(control_mu_);
    {
      std::lock_guard lock(mu_);
      if (status_ != SessionStatus::kRunning)
        throw Error(ErrorCode::kBadTransition, "cannot pause a " + status_name(status_) + " session");
      stop_ = true;
    }
    if (worker_.joinable()) worker_.join();
    std::lock_guard lock(mu_);
    if (status_ == SessionStatus::kRunning) set_status_locked(SessionStatus::kPaused);
    return status_;
  }

  /// Exactly n steps, synchronously.
  SessionStatus step_n(std::uint64_t n) {
    std::lock_guard control(control_mu_);
    std::lock_guard lock(mu_);
    if (status_ != SessionStatus::kIdle && status_ != SessionStatus::kPaused)
      throw Error(ErrorCode::kBadTransition, "cannot step a " + status_name(status_) + " session");
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!advance_locked()) {
        throw Error(ErrorCode::kProviderFailure, error_);
      }
    }
    return status_;
  }

  SessionStatus reset(std::uint64_t seed) {
    std::lock_guard control(control_mu_);
    {
      std::lock_guard lock(mu_);
      if (status_ == SessionStatus::kRunning)
        throw Error(ErrorCode::kBadTransition, "cannot reset a running session");
    }
    if (worker_.joinable()) worker_.join();
    std::lock_guard lock(mu_);
    SamplerConfig cfg = cfg_;
    cfg.rng_seed = seed;
    ChainState fresh = init_chain(std::nullopt, masks_, *provider_, cfg);
    cfg_ = cfg;
    chain_ = std::move(fresh);
    error_.clear();
    log_.append(LogRecord("reset")
                    .add("session", id_)
                    .add("step", std::to_string(chain_.step))
                    .add("seed", std::to_string(seed)));
    status_ = SessionStatus::kIdle;
    touch_locked();
    broadcast_locked("snapshot", to_json_locked());
    return status_;
  }

  /// Swaps in a new constraint spec. The chain keeps its rng stream and only
  /// positions that violate the new masks are re-sampled.
  json edit_constraints(const std::string& spec_text) {
    std::lock_guard control(control_mu_);
    std::lock_guard lock(mu_);
    if (status_ != SessionStatus::kIdle && status_ != SessionStatus::kPaused)
      throw Error(ErrorCode::kBadTransition, "constraints can only change while idle or paused");
    const Vocabulary& vocab = *provider_->vocabulary();
    ConstraintSet cs = parse_constraint_spec(spec_text, vocab);
    if (cs.length != cs_.length)
      throw Error(ErrorCode::kLengthChanged,
                  "length " + std::to_string(cs.length) + " differs from session length " + std::to_string(cs_.length));
    PositionMasks masks = compile_masks(cs, vocab);
    ChainState repaired = chain_;
    repair_chain(repaired, masks, *provider_);

    spec_text_ = spec_text;
    cs_ = std::move(cs);
    masks_ = std::move(masks);
    chain_ = std::move(repaired);
    log_.append(LogRecord("constraints")
                    .add("session", id_)
                    .add("step", std::to_string(chain_.step))
                    .add("rng", "preserved")
                    .add("spec", spec_text_));
    touch_locked();
    json state = to_json_locked();
    broadcast_locked("constraints", state);
    return state;
  }

  /// Queues a snapshot first. Errored sessions get the snapshot and an
  /// immediately closed stream.
  std::shared_ptr<Subscription> subscribe() {
    std::lock_guard lock(mu_);
    auto sub = std::make_shared<Subscription>();
    sub->push(SessionEvent{event_seq_, "snapshot", to_json_locked()});
    if (status_ == SessionStatus::kErrored || closed_) {
      sub->close();
    } else {
      subscribers_.push_back(sub);
    }
    return sub;
  }

  std::string export_log() const {
    std::lock_guard lock(mu_);
    return log_.contents();
  }

  void shutdown() {
    std::lock_guard control(control_mu_);
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    if (worker_.joinable()) worker_.join();
    std::lock_guard lock(mu_);
    if (status_ == SessionStatus::kRunning) status_ = SessionStatus::kPaused;
    closed_ = true;
    for (auto& weak : subscribers_)
      if (auto sub = weak.lock()) sub->close();
    subscribers_.clear();
  }

 private:
  void work() {
    for (;;) {
      {
        std::lock_guard lock(mu_);
        if (stop_) return;
        if (cfg_.max_steps && chain_.step >= *cfg_.max_steps) {
          set_status_locked(SessionStatus::kPaused);
          return;
        }
        if (!advance_locked()) return;
      }
      if (step_delay_.count() > 0) {
        std::this_thread::sleep_for(step_delay_);
      } else {
        std::this_thread::yield();
      }
    }
  }

  // One chain step plus any scheduled emission. On failure the session goes
  // to errored, subscribers are closed, and false is returned.
  bool advance_locked() {
    try {
      versechain::step(chain_, masks_, *provider_, cfg_);
      if (emission_due(cfg_, chain_.step)) emit_locked();
      touch_locked();
      return true;
    } catch (const Error& e) {
      error_ = e.what();
      set_status_locked(SessionStatus::kErrored);
      for (auto& weak : subscribers_)
        if (auto sub = weak.lock()) sub->close();
      subscribers_.clear();
      return false;
    }
  }

  void emit_locked() {
    RunLogEntry entry{id_,
                      emissions_++,
                      chain_.step,
                      std::vector<TokenId>(chain_.seq.ids().begin(), chain_.seq.ids().end()),
                      detokenize(chain_.seq),
                      chain_.energy,
                      chain_.acceptance_rate()};
    log_.append(entry.to_record());
    broadcast_locked("emission", {{"emission", entry.emission},
                                  {"step", entry.step},
                                  {"ids", entry.ids},
                                  {"text", entry.text},
                                  {"energy", entry.energy},
                                  {"acceptance_rate", entry.acceptance_rate}});
  }

  void set_status_locked(SessionStatus s) {
    status_ = s;
    touch_locked();
    json data = {{"status", status_name(s)}, {"step", chain_.step}};
    if (s == SessionStatus::kErrored) data["error"] = error_;
    broadcast_locked("status", std::move(data));
  }

  void broadcast_locked(const std::string& type, json data) {
    SessionEvent event{++event_seq_, type, std::move(data)};
    std::erase_if(subscribers_, [](const std::weak_ptr<Subscription>& w) { return w.expired(); });
    for (auto& weak : subscribers_)
      if (auto sub = weak.lock()) sub->push(event);
  }

  void touch_locked() { updated_ = std::chrono::system_clock::now(); }

  json to_json_locked() const {
    std::vector<std::size_t> pinned;
    for (std::size_t i = 0; i < masks_.length(); ++i)
      if (masks_.pinned(i)) pinned.push_back(i);
    json j = {{"id", id_},
              {"status", status_name(status_)},
              {"length", cs_.length},
              {"spec", spec_text_},
              {"provider", provider_name_},
              {"config", config_to_json(cfg_)},
              {"step", chain_.step},
              {"ids", std::vector<TokenId>(chain_.seq.ids().begin(), chain_.seq.ids().end())},
              {"text", detokenize(chain_.seq)},
              {"energy", chain_.energy},
              {"acceptance_rate", chain_.acceptance_rate()},
              {"pinned", pinned},
              {"emissions", emissions_},
              {"event_seq", event_seq_},
              {"created", iso_timestamp(created_)},
              {"updated", iso_timestamp(updated_)}};
    if (!error_.empty()) j["error"] = error_;
    return j;
  }

  const std::string id_;
  std::string spec_text_;
  ConstraintSet cs_;
  PositionMasks masks_;
  SamplerConfig cfg_;
  const std::string provider_name_;
  const ProviderPtr provider_;
  ChainState chain_;
  RunLogWriter log_;
  const std::chrono::microseconds step_delay_;
  std::chrono::system_clock::time_point created_;
  std::chrono::system_clock::time_point updated_;

  SessionStatus status_ = SessionStatus::kIdle;
  std::string error_;
  std::uint64_t emissions_ = 0;
  std::uint64_t event_seq_ = 0;
  bool stop_ = false;
  bool closed_ = false;
  std::vector<std::weak_ptr<Subscription>> subscribers_;

  std::mutex control_mu_;  // serializes control commands
  mutable std::mutex mu_;  // guards everything above
  std::thread worker_;
};

class SessionManager {
 public:
  SessionManager(std::shared_ptr<ProviderRegistry> providers, SessionOptions options)
      : providers_(std::move(providers)), options_(std::move(options)), ids_(std::random_device{}()) {
    if (!options_.log_dir.empty()) std::filesystem::create_directories(options_.log_dir);
  }

  ~SessionManager() {
    std::lock_guard lock(mu_);
    for (auto& [id, session] : sessions_) session->shutdown();
  }

  std::shared_ptr<Session> create_session(const std::string& spec_text, const SamplerConfig& cfg,
                                          const std::string& provider_name) {
    cfg.validate();
    ProviderPtr provider = providers_->get(provider_name);
    const Vocabulary& vocab = *provider->vocabulary();
    ConstraintSet cs = parse_constraint_spec(spec_text, vocab);
    PositionMasks masks = compile_masks(cs, vocab);
    ChainState chain = init_chain(std::nullopt, masks, *provider, cfg);

    std::lock_guard lock(mu_);
    std::string id = fresh_id_locked();
    RunLogWriter log = options_.log_dir.empty() ? RunLogWriter() : RunLogWriter(log_path(id));
    auto session = std::make_shared<Session>(id, spec_text, std::move(cs), std::move(masks), cfg, provider_name,
                                             std::move(provider), std::move(chain), std::move(log),
                                             options_.step_delay);
    sessions_.emplace(id, session);
    return session;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNoSession, "no session '" + id + "'");
    return it->second;
  }

  std::vector<std::shared_ptr<Session>> list() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& [id, s] : sessions_) out.push_back(s);
    return out;
  }

  /// Command names: start, pause, step (n), reset (seed).
  SessionStatus control(const std::string& id, const std::string& command, std::uint64_t n = 1,
                        std::optional<std::uint64_t> seed = std::nullopt) {
    auto session = get(id);
    if (command == "start") return session->start();
    if (command == "pause") return session->pause();
    if (command == "step") return session->step_n(n);
    if (command == "reset") return session->reset(seed.value_or(std::random_device{}()));
    throw Error(ErrorCode::kInvalidArgument, "unknown command '" + command + "'");
  }

  json edit_constraints(const std::string& id, const std::string& spec_text) {
    return get(id)->edit_constraints(spec_text);
  }

  std::shared_ptr<Subscription> stream_state(const std::string& id) { return get(id)->subscribe(); }

  /// Live sessions export their log; sessions from earlier service runs are
  /// served from their log file.
  std::string export_run(const std::string& id) const {
    {
      std::lock_guard lock(mu_);
      if (auto it = sessions_.find(id); it != sessions_.end()) return it->second->export_log();
    }
    if (!options_.log_dir.empty() && valid_id(id) && std::filesystem::exists(log_path(id)))
      return RunLogWriter::read_run_log_file(log_path(id));
    throw Error(ErrorCode::kNoSession, "no session '" + id + "'");
  }

  const ProviderRegistry& providers() const { return *providers_; }

 private:
  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
  }

  std::string log_path(const std::string& id) const {
    return (std::filesystem::path(options_.log_dir) / (id + ".log")).string();
  }

  std::string fresh_id_locked() {
    static constexpr char kHex[] = "0123456789abcdef";
    for (;;) {
      std::uint64_t bits = ids_();
      std::string id;
      for (int i = 0; i < 16; ++i, bits >>= 4) id.push_back(kHex[bits & 0xf]);
      if (sessions_.contains(id)) continue;
      if (!options_.log_dir.empty() && std::filesystem::exists(log_path(id))) continue;
      return id;
    }
  }

  std::shared_ptr<ProviderRegistry> providers_;
  SessionOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 ids_;
};

}  // namespace versechain

#endif  // VERSECHAIN_SESSION_HPP
