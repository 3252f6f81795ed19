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

// External model bridge: a line protocol spoken with an out-of-process
// masked LM.
//
//   bridge -> engine   vocabulary, one surface per line (optional "#mask"
//                      header), terminated by a blank line
//   engine -> bridge   "MASKED <position> <id id ...>"
//   bridge -> engine   |V| space-separated decimal logits ("-inf" allowed)
//
// Any malformed or missing line poisons the provider; every later query
// fails with E_PROVIDER_FAILURE.

#ifndef VERSECHAIN_BRIDGE_HPP
#define VERSECHAIN_BRIDGE_HPP

#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstring>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "versechain/error.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/vocabulary.hpp"

namespace versechain {

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Next line without its terminator; nullopt at end of stream.
  virtual std::optional<std::string> read_line() = 0;
  /// Writes `line` plus a newline and flushes. Returns false on failure.
  virtual bool write_line(std::string_view line) = 0;
};

class StreamChannel final : public LineChannel {
 public:
  StreamChannel(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

  std::optional<std::string> read_line() override {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  bool write_line(std::string_view line) override {
    out_ << line << '\n';
    out_.flush();
    return static_cast<bool>(out_);
  }

 private:
  std::istream& in_;
  std::ostream& out_;
};

/// Runs `/bin/sh -c command` with its stdin/stdout connected to pipes.
class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw Error(ErrorCode::kProviderFailure, "pipe: " + std::string(std::strerror(errno)));
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw Error(ErrorCode::kProviderFailure, "pipe: " + std::string(std::strerror(errno)));
    }
    pid_ = fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      throw Error(ErrorCode::kProviderFailure, "fork: " + std::string(std::strerror(errno)));
    }
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  ~ProcessChannel() override {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  std::optional<std::string> read_line() override {
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      ssize_t n = read(read_fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  bool write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    std::size_t done = 0;
    while (done < data.size()) {
      ssize_t n = write(write_fd_, data.data() + done, data.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

/// Provider backed by a bridge process. Queries are single-flight.
class BridgeProvider final : public MaskedModelProvider {
 public:
  explicit BridgeProvider(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {
    std::string listing;
    for (;;) {
      auto line = channel_->read_line();
      if (!line) throw Error(ErrorCode::kProviderFailure, "bridge closed during vocabulary handshake");
      if (line->empty()) break;
      listing += *line;
      listing += '\n';
    }
    try {
      vocab_ = parse_vocabulary(listing);
    } catch (const Error& e) {
      throw Error(ErrorCode::kProviderFailure, std::string("bad bridge vocabulary: ") + e.what());
    }
  }

  static std::shared_ptr<BridgeProvider> spawn(const std::string& command) {
    return std::make_shared<BridgeProvider>(std::make_unique<ProcessChannel>(command));
  }

  const VocabularyPtr& vocabulary() const override { return vocab_; }

  LogitVector logits_at(const TokenSequence& seq, std::size_t position) const override {
    std::lock_guard lock(mutex_);
    if (failed_) throw Error(ErrorCode::kProviderFailure, "bridge aborted after an earlier failure");
    std::string request = "MASKED " + std::to_string(position);
    for (TokenId id : seq.ids()) request += " " + std::to_string(id);
    if (!channel_->write_line(request)) fail("could not write request");
    auto response = channel_->read_line();
    if (!response) fail("bridge closed the stream");
    return parse_response(*response);
  }

  bool failed() const {
    std::lock_guard lock(mutex_);
    return failed_;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    failed_ = true;
    throw Error(ErrorCode::kProviderFailure, why);
  }

  LogitVector parse_response(std::string_view line) const {
    LogitVector logits;
    logits.reserve(vocab_->size());
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && line[pos] == ' ') ++pos;
      if (pos == line.size()) break;
      std::size_t end = line.find(' ', pos);
      if (end == std::string_view::npos) end = line.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, value);
      if (ec != std::errc() || ptr != line.data() + end || std::isnan(value) || value == -kNegInf)
        fail("malformed logit '" + std::string(line.substr(pos, end - pos)) + "'");
      logits.push_back(value);
      pos = end;
    }
    if (logits.size() != vocab_->size())
      fail("expected " + std::to_string(vocab_->size()) + " logits, got " + std::to_string(logits.size()));
    return logits;
  }

  std::unique_ptr<LineChannel> channel_;
  VocabularyPtr vocab_;
  mutable std::mutex mutex_;
  mutable bool failed_ = false;
};

}  // namespace versechain

#endif  // VERSECHAIN_BRIDGE_HPP
