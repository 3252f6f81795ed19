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

// Append-only run log. One record per line, tab-separated key=value fields,
// the first field always "kind=<emission|constraints|reset>". Token ids are
// space-separated inside the ids field. Values escape '\\', tab and newline.
//
//   kind=emission  session=ab12  emission=0  step=5  ids=0 1 2  text=...
//                  energy=4.15  acceptance_rate=0.6
//   kind=constraints  session=ab12  step=40  rng=preserved  spec=length 3\n...

#ifndef VERSECHAIN_RUN_LOG_HPP
#define VERSECHAIN_RUN_LOG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "versechain/error.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/vocabulary.hpp"

namespace versechain {

class LogRecord {
 public:
  LogRecord() = default;
  explicit LogRecord(std::string kind) { add("kind", std::move(kind)); }

  LogRecord& add(std::string key, std::string value) {
    fields_.emplace_back(std::move(key), std::move(value));
    return *this;
  }

  const std::string& kind() const { return fields_.front().second; }

  std::optional<std::string> get(std::string_view key) const {
    for (const auto& [k, v] : fields_)
      if (k == key) return v;
    return std::nullopt;
  }

  const std::string& require(std::string_view key) const {
    for (const auto& [k, v] : fields_)
      if (k == key) return v;
    throw Error(ErrorCode::kParse, "record lacks field '" + std::string(key) + "'");
  }

  std::string format() const {
    std::string out;
    for (const auto& [k, v] : fields_) {
      if (!out.empty()) out.push_back('\t');
      out += k;
      out.push_back('=');
      for (char c : v) {
        switch (c) {
          case '\\': out += "\\\\"; break;
          case '\t': out += "\\t"; break;
          case '\n': out += "\\n"; break;
          default: out.push_back(c);
        }
      }
    }
    return out;
  }

  static LogRecord parse(std::string_view line) {
    LogRecord record;
    std::size_t begin = 0;
    while (begin <= line.size()) {
      std::size_t end = line.find('\t', begin);
      if (end == std::string_view::npos) end = line.size();
      std::string_view field = line.substr(begin, end - begin);
      const std::size_t eq = field.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw Error(ErrorCode::kParse, "malformed field '" + std::string(field) + "'");
      std::string value;
      for (std::size_t i = eq + 1; i < field.size(); ++i) {
        if (field[i] != '\\') {
          value.push_back(field[i]);
          continue;
        }
        if (++i == field.size()) throw Error(ErrorCode::kParse, "dangling escape");
        switch (field[i]) {
          case '\\': value.push_back('\\'); break;
          case 't': value.push_back('\t'); break;
          case 'n': value.push_back('\n'); break;
          default: throw Error(ErrorCode::kParse, "bad escape");
        }
      }
      record.add(std::string(field.substr(0, eq)), std::move(value));
      begin = end + 1;
    }
    if (record.fields_.empty() || record.fields_.front().first != "kind")
      throw Error(ErrorCode::kParse, "record must start with kind=");
    return record;
  }

  friend bool operator==(const LogRecord&, const LogRecord&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

struct RunLogEntry {
  std::string session;  // empty outside the session service
  std::uint64_t emission = 0;
  std::uint64_t step = 0;
  std::vector<TokenId> ids;
  std::string text;
  double energy = 0.0;
  double acceptance_rate = 0.0;

  LogRecord to_record() const {
    LogRecord r("emission");
    if (!session.empty()) r.add("session", session);
    r.add("emission", std::to_string(emission)).add("step", std::to_string(step));
    std::string joined;
    for (std::size_t i = 0; i < ids.size(); ++i) joined += (i ? " " : "") + std::to_string(ids[i]);
    r.add("ids", joined).add("text", text);
    r.add("energy", format_double(energy)).add("acceptance_rate", format_double(acceptance_rate));
    return r;
  }

  static RunLogEntry from_record(const LogRecord& r) {
    if (r.kind() != "emission") throw Error(ErrorCode::kParse, "not an emission record");
    RunLogEntry e;
    e.session = r.get("session").value_or("");
    e.emission = parse_number<std::uint64_t>(r.require("emission"));
    e.step = parse_number<std::uint64_t>(r.require("step"));
    std::istringstream ids(r.require("ids"));
    for (std::string id; ids >> id;) e.ids.push_back(parse_number<TokenId>(id));
    e.text = r.require("text");
    e.energy = parse_number<double>(r.require("energy"));
    e.acceptance_rate = parse_number<double>(r.require("acceptance_rate"));
    return e;
  }

  friend bool operator==(const RunLogEntry&, const RunLogEntry&) = default;

 private:
  template <typename T>
  static T parse_number(const std::string& text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw Error(ErrorCode::kParse, "bad number '" + text + "'");
    return value;
  }
};

/// Parses a whole log document, skipping blank lines.
inline std::vector<LogRecord> parse_run_log(std::string_view text) {
  std::vector<LogRecord> records;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    if (end > begin) records.push_back(LogRecord::parse(text.substr(begin, end - begin)));
    begin = end + 1;
  }
  return records;
}

/// Append-only sink. With a path every line is flushed to disk as it is
/// written; without one the log lives in memory.
class RunLogWriter {
 public:
  RunLogWriter() = default;
  explicit RunLogWriter(std::string path) : path_(std::move(path)) {
    file_.open(path_, std::ios::app | std::ios::binary);
    if (!file_) throw Error(ErrorCode::kIo, "cannot open run log '" + path_ + "'");
  }

  void append(const LogRecord& record) {
    const std::string line = record.format() + "\n";
    if (path_.empty()) {
      memory_ += line;
      return;
    }
    file_ << line;
    file_.flush();
    if (!file_) throw Error(ErrorCode::kIo, "write to run log '" + path_ + "' failed");
  }

  std::string contents() const {
    if (path_.empty()) return memory_;
    return read_run_log_file(path_);
  }

  const std::string& path() const { return path_; }

  static std::string read_run_log_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot read run log '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::string memory_;
};

}  // namespace versechain

#endif  // VERSECHAIN_RUN_LOG_HPP
