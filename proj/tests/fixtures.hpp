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

#ifndef VERSECHAIN_TESTS_FIXTURES_HPP
#define VERSECHAIN_TESTS_FIXTURES_HPP

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "versechain/constraints.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/vocabulary.hpp"

namespace fixtures {

namespace vc = versechain;

inline std::string data_path(const std::string& name) { return std::string(VERSECHAIN_DATA_DIR) + "/" + name; }

inline std::string read_data(const std::string& name) {
  std::ifstream in(data_path(name), std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// sun moon sea sky
inline vc::VocabularyPtr toy_vocab() { return vc::build_vocabulary({"sun", "moon", "sea", "sky"}); }

inline std::shared_ptr<vc::TabularModel> spike_model() {
  return vc::TabularModel::spike(toy_vocab(), {0, 1, 2}, 0.9);
}

inline std::shared_ptr<vc::TabularModel> uniform_model(std::size_t vocab_size = 4, std::size_t length = 3) {
  std::vector<std::string> surfaces;
  for (std::size_t i = 0; i < vocab_size; ++i) surfaces.push_back("w" + std::string(1, static_cast<char>('a' + i)));
  return vc::TabularModel::uniform(vc::build_vocabulary(surfaces), length);
}

/// Strictly positive joint with random weights in [0.05, 1).
inline std::shared_ptr<vc::TabularModel> random_model(vc::VocabularyPtr vocab, std::size_t length,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  return vc::TabularModel::from_weights(std::move(vocab), length,
                                        [&](std::span<const vc::TokenId>) { return weight(rng); });
}

/// Eight short words with varied letters for randomized constraint tests.
inline vc::VocabularyPtr weather_vocab() {
  return vc::build_vocabulary({"sun", "moon", "sea", "sky", "rain", "wind", "snow", "dusk", "<mask>"}, "<mask>");
}

/// Random constraint set over `vocab`; may be infeasible.
inline vc::ConstraintSet random_constraints(const vc::Vocabulary& vocab, std::size_t length, std::mt19937_64& rng) {
  vc::ConstraintSet cs;
  cs.length = length;
  auto below = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto scope = [&]() -> vc::PositionScope {
    if (below(2) == 0) return std::nullopt;
    std::vector<std::size_t> ps;
    for (std::size_t p = 0; p < length; ++p)
      if (below(2) == 0) ps.push_back(p);
    if (ps.empty()) ps.push_back(below(length));
    return ps;
  };
  auto content_token = [&]() {
    for (;;) {
      auto id = static_cast<vc::TokenId>(below(vocab.size()));
      if (!vocab.is_mask(id)) return id;
    }
  };
  std::vector<bool> pinned(length, false);
  const std::size_t count = below(4);
  static const std::string kLetters = "aeiouknrsdw";
  static const std::vector<std::string> kSuffixes = {"n", "a", "y", "w", "k", "on", "ky"};
  for (std::size_t i = 0; i < count; ++i) {
    switch (below(4)) {
      case 0: {
        const std::size_t p = below(length);
        if (pinned[p]) break;
        pinned[p] = true;
        cs.constraints.push_back(vc::Pin{p, content_token()});
        break;
      }
      case 1: {
        std::string letters(1, kLetters[below(kLetters.size())]);
        if (below(3) == 0) letters.push_back(kLetters[below(kLetters.size())]);
        cs.constraints.push_back(vc::Lipogram{vc::LetterSet::of(letters), scope()});
        break;
      }
      case 2:
        cs.constraints.push_back(vc::SuffixRhyme{below(length), kSuffixes[below(kSuffixes.size())]});
        break;
      default: {
        static const std::vector<std::pair<std::string, std::string>> kFilters = {
            {"prefix", "s"}, {"contains", "n"}, {"excludes", "o"}, {"only", "sunkydew"}, {"maxlen", "3"}, {"minlen", "4"}};
        const auto& [name, arg] = kFilters[below(kFilters.size())];
        cs.constraints.push_back(vc::SurfacePredicate{name, arg, scope()});
      }
    }
  }
  return cs;
}

inline vc::VocabularyPtr verse_vocab() { return vc::parse_vocabulary(read_data("verse.vocab")); }

}  // namespace fixtures

#endif  // VERSECHAIN_TESTS_FIXTURES_HPP
