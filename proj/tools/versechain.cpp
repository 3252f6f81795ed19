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

// Batch front end.
//
//   versechain check  --spec S --vocab V
//   versechain sample --spec S --provider tabular:<path>|bridge:<command> [--vocab V]
//                     [--seed N] [--burn-in N] [--thinning N] [--max-steps N]
//                     [--temperature T] [--target-temperature T] [--log PATH|-]
//   versechain oracle --tabular T --spec S --vocab V [--target-temperature T]
//
// Exit codes: 0 ok, 1 I/O, 2 parse or infeasible, 3 provider failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "versechain/bridge.hpp"
#include "versechain/constraints.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/run_log.hpp"
#include "versechain/sampler.hpp"
#include "versechain/vocabulary.hpp"

namespace vc = versechain;

namespace {

int exit_code_for(vc::ErrorCode code) {
  switch (code) {
    case vc::ErrorCode::kIo: return 1;
    case vc::ErrorCode::kProviderFailure:
    case vc::ErrorCode::kInfiniteEnergy: return 3;
    default: return 2;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vc::Error(vc::ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

vc::ProviderPtr open_provider(const std::string& selector, const std::string& vocab_path) {
  if (selector.rfind("tabular:", 0) == 0) {
    if (vocab_path.empty()) throw vc::Error(vc::ErrorCode::kInvalidArgument, "tabular providers need --vocab");
    auto vocab = vc::parse_vocabulary(read_file(vocab_path));
    return vc::parse_tabular_model(read_file(selector.substr(8)), vocab);
  }
  if (selector.rfind("bridge:", 0) == 0) {
    auto bridge = vc::BridgeProvider::spawn(selector.substr(7));
    if (!vocab_path.empty() && !(*vc::parse_vocabulary(read_file(vocab_path)) == *bridge->vocabulary()))
      throw vc::Error(vc::ErrorCode::kProviderFailure, "bridge vocabulary differs from --vocab");
    return bridge;
  }
  throw vc::Error(vc::ErrorCode::kProviderFailure, "provider must be tabular:<path> or bridge:<command>");
}

struct Options {
  std::string spec;
  std::string vocab;
  std::string provider;
  std::string tabular;
  std::string log;
  std::uint64_t seed = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t thinning = 1;
  std::optional<std::uint64_t> max_steps;
  double temperature = 1.0;
  double target_temperature = 1.0;
};

int run_check(const Options& opt) {
  vc::VocabularyPtr vocab = opt.provider.empty() ? vc::parse_vocabulary(read_file(opt.vocab))
                                                 : open_provider(opt.provider, opt.vocab)->vocabulary();
  const auto cs = vc::parse_constraint_spec(read_file(opt.spec), *vocab);
  const auto masks = vc::compile_masks(cs, *vocab);
  std::cout << "position\tallowed\tpinned\n";
  for (std::size_t p = 0; p < masks.length(); ++p)
    std::cout << p << '\t' << masks[p].count() << '\t' << (masks.pinned(p) ? "yes" : "no") << '\n';
  return 0;
}

int run_sample(const Options& opt) {
  auto provider = open_provider(opt.provider, opt.vocab);
  const auto& vocab = *provider->vocabulary();
  const auto cs = vc::parse_constraint_spec(read_file(opt.spec), vocab);
  const auto masks = vc::compile_masks(cs, vocab);

  vc::SamplerConfig cfg;
  cfg.proposal_temperature = opt.temperature;
  cfg.target_temperature = opt.target_temperature;
  cfg.burn_in = opt.burn_in;
  cfg.thinning = opt.thinning;
  cfg.max_steps = opt.max_steps;
  cfg.rng_seed = opt.seed;
  cfg.validate();

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (opt.log == "-") {
    log = &std::cout;
  } else if (!opt.log.empty()) {
    log_file.open(opt.log, std::ios::binary | std::ios::trunc);
    if (!log_file) throw vc::Error(vc::ErrorCode::kIo, "cannot write '" + opt.log + "'");
    log = &log_file;
  }

  if (opt.max_steps && *opt.max_steps == 0) return 0;
  auto state = vc::init_chain(std::nullopt, masks, *provider, cfg);
  std::uint64_t emitted = 0;
  vc::run(state, masks, *provider, cfg, {.emit = [&](const vc::ChainState& s) {
                                          const std::string text = vc::detokenize(s.seq);
                                          if (log) {
                                            vc::RunLogEntry entry{"",     emitted, s.step,
                                                                  {s.seq.ids().begin(), s.seq.ids().end()},
                                                                  text,   s.energy, s.acceptance_rate()};
                                            *log << entry.to_record().format() << '\n';
                                          }
                                          if (log != &std::cout) std::cout << text << '\n';
                                          ++emitted;
                                          return static_cast<bool>(std::cout);
                                        },
                                        .on_step = {}});
  std::cout.flush();
  if (log_file) log_file.flush();
  return 0;
}

int run_oracle(const Options& opt) {
  auto vocab = vc::parse_vocabulary(read_file(opt.vocab));
  auto model = vc::parse_tabular_model(read_file(opt.tabular), vocab);
  const auto cs = vc::parse_constraint_spec(read_file(opt.spec), *vocab);
  if (cs.length != model->length())
    throw vc::Error(vc::ErrorCode::kLengthMismatch, "spec length differs from tabular length");
  const auto masks = vc::compile_masks(cs, *vocab);
  vc::SamplerConfig cfg;
  cfg.target_temperature = opt.target_temperature;
  cfg.validate();
  const auto dist = vc::exact_target_distribution(*model, masks, cfg);

  std::vector<std::pair<std::vector<vc::TokenId>, double>> rows(dist.begin(), dist.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [ids, p] : rows) {
    for (vc::TokenId id : ids) std::cout << id << ' ';
    std::cout << vc::format_double(p) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained composition with a masked-LM Metropolis-Hastings sampler"};
  app.require_subcommand(1);
  Options opt;

  auto* check = app.add_subcommand("check", "Parse and compile a constraint spec");
  check->add_option("--spec", opt.spec, "Constraint spec file")->required();
  check->add_option("--vocab", opt.vocab, "Vocabulary file");
  check->add_option("--provider", opt.provider, "Take the vocabulary from a provider instead");

  auto* sample = app.add_subcommand("sample", "Run a chain and print emissions");
  sample->add_option("--spec", opt.spec, "Constraint spec file")->required();
  sample->add_option("--vocab", opt.vocab, "Vocabulary file (required for tabular providers)");
  sample->add_option("--provider", opt.provider, "tabular:<path> or bridge:<command>")->required();
  sample->add_option("--seed", opt.seed, "RNG seed");
  sample->add_option("--burn-in", opt.burn_in, "Steps before the first emission");
  sample->add_option("--thinning", opt.thinning, "Emit every k-th step")->check(CLI::PositiveNumber);
  sample->add_option("--max-steps", opt.max_steps, "Stop after this many steps (default: run forever)");
  sample->add_option("--temperature", opt.temperature, "Proposal temperature")->check(CLI::PositiveNumber);
  sample->add_option("--target-temperature", opt.target_temperature, "Target temperature")
      ->check(CLI::PositiveNumber);
  sample->add_option("--log", opt.log, "Write run-log records to PATH ('-' for stdout)");

  auto* oracle = app.add_subcommand("oracle", "Dump the exact constrained target distribution");
  oracle->add_option("--tabular", opt.tabular, "Tabular model file")->required();
  oracle->add_option("--spec", opt.spec, "Constraint spec file")->required();
  oracle->add_option("--vocab", opt.vocab, "Vocabulary file")->required();
  oracle->add_option("--target-temperature", opt.target_temperature, "Target temperature")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) {
      if (opt.vocab.empty() && opt.provider.empty()) {
        std::cerr << "check needs --vocab or --provider\n";
        return 2;
      }
      return run_check(opt);
    }
    if (*sample) return run_sample(opt);
    return run_oracle(opt);
  } catch (const vc::Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e.code());
  }
}
