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

// Reference bridge: serves a tabular model over stdin/stdout using the
// external model bridge protocol. Handy for exercising bridge:<command>
// without a real masked LM.
//
//   versechain-tabular-bridge --vocab V --tabular T [--fail-after N]

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/vocabulary.hpp"

namespace vc = versechain;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vc::Error(vc::ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular model behind the bridge protocol"};
  std::string vocab_path;
  std::string tabular_path;
  long fail_after = -1;
  app.add_option("--vocab", vocab_path)->required();
  app.add_option("--tabular", tabular_path)->required();
  app.add_option("--fail-after", fail_after, "Answer N requests, then send a malformed line");
  CLI11_PARSE(app, argc, argv);

  try {
    auto vocab = vc::parse_vocabulary(read_file(vocab_path));
    auto model = vc::parse_tabular_model(read_file(tabular_path), vocab);
    std::cout << vc::render_vocabulary(*vocab) << '\n' << std::flush;

    long served = 0;
    for (std::string line; std::getline(std::cin, line);) {
      if (fail_after >= 0 && served >= fail_after) {
        std::cout << "not a logit line\n" << std::flush;
        continue;
      }
      std::istringstream request(line);
      std::string verb;
      std::size_t position = 0;
      request >> verb >> position;
      std::vector<vc::TokenId> ids;
      for (vc::TokenId id; request >> id;) ids.push_back(id);
      if (verb != "MASKED") {
        std::cout << "ERROR\n" << std::flush;
        continue;
      }
      vc::TokenSequence seq(vocab, ids);
      const auto logits = model->logits_at(seq, position);
      std::string out;
      for (std::size_t i = 0; i < logits.size(); ++i)
        out += (i ? " " : "") + (std::isinf(logits[i]) ? std::string("-inf") : vc::format_double(logits[i]));
      std::cout << out << '\n' << std::flush;
      ++served;
    }
  } catch (const vc::Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
