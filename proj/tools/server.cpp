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

// Session service.
//
//   versechain-server --listen 127.0.0.1:8080 --log-dir runs
//       --vocab toy=data/toy.vocab --tabular toy=data/toy.tabular
//       --bridge roberta="python3 bridge.py"
//
// VERSECHAIN_LISTEN and VERSECHAIN_LOG_DIR stand in for the flags.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "versechain/bridge.hpp"
#include "versechain/http_api.hpp"
#include "versechain/session.hpp"

namespace vc = versechain;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vc::Error(vc::ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw vc::Error(vc::ErrorCode::kInvalidArgument, "expected name=value, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"versechain session service"};
  std::string listen = "127.0.0.1:8080";
  std::string log_dir = "runs";
  long step_delay_us = 1000;
  std::vector<std::string> vocabs;
  std::vector<std::string> tabulars;
  std::vector<std::string> bridges;
  app.add_option("--listen", listen, "host:port")->envname("VERSECHAIN_LISTEN");
  app.add_option("--log-dir", log_dir, "Directory for per-session run logs")->envname("VERSECHAIN_LOG_DIR");
  app.add_option("--step-delay-us", step_delay_us, "Sleep between steps of a running session");
  app.add_option("--vocab", vocabs, "name=path, vocabulary for a tabular provider");
  app.add_option("--tabular", tabulars, "name=path, tabular model provider");
  app.add_option("--bridge", bridges, "name=command, external model bridge provider");
  CLI11_PARSE(app, argc, argv);

  try {
    auto registry = std::make_shared<vc::ProviderRegistry>();
    std::map<std::string, std::string> vocab_paths;
    for (const auto& v : vocabs) vocab_paths.insert(split_assignment(v));
    for (const auto& t : tabulars) {
      auto [name, path] = split_assignment(t);
      auto vp = vocab_paths.find(name);
      if (vp == vocab_paths.end())
        throw vc::Error(vc::ErrorCode::kInvalidArgument, "tabular provider '" + name + "' has no --vocab");
      auto vocab = vc::parse_vocabulary(read_file(vp->second));
      registry->add(name, vc::parse_tabular_model(read_file(path), vocab));
    }
    for (const auto& b : bridges) {
      auto [name, command] = split_assignment(b);
      registry->add_factory(name, [command] { return vc::BridgeProvider::spawn(command); });
    }

    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw vc::Error(vc::ErrorCode::kInvalidArgument, "--listen needs host:port");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    auto manager = std::make_shared<vc::SessionManager>(
        registry, vc::SessionOptions{log_dir, std::chrono::microseconds(step_delay_us)});
    httplib::Server server;
    vc::mount_session_api(server, manager);
    g_server = &server;
    std::signal(SIGINT, [](int) { g_server->stop(); });
    std::signal(SIGTERM, [](int) { g_server->stop(); });

    std::cerr << "listening on " << host << ":" << port << '\n';
    if (!server.listen(host, port)) {
      std::cerr << "cannot listen on " << listen << '\n';
      return 1;
    }
  } catch (const vc::Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == vc::ErrorCode::kIo ? 1 : 2;
  }
  return 0;
}
