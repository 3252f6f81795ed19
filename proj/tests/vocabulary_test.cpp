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

#include "versechain/vocabulary.hpp"

#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

namespace vc = versechain;

namespace {

vc::VocabularyPtr three() { return vc::build_vocabulary({"the", "cat", "sat"}); }

TEST(VocabularyTest, DenseIdsInListOrder) {
  auto vocab = three();
  ASSERT_EQ(vocab->size(), 3u);
  for (vc::TokenId id = 0; id < 3; ++id) EXPECT_EQ(vocab->token(id).id, id);
  EXPECT_EQ(vocab->surface(1), "cat");
  EXPECT_FALSE(vocab->mask_token_id());
}

TEST(VocabularyTest, RejectsDuplicateAndEmptySurfaces) {
  try {
    vc::build_vocabulary({"a", "a"});
    FAIL();
  } catch (const vc::Error& e) {
    EXPECT_EQ(e.code(), vc::ErrorCode::kDuplicateSurface);
  }
  try {
    vc::build_vocabulary({"a", "", "b"});
    FAIL();
  } catch (const vc::Error& e) {
    EXPECT_EQ(e.code(), vc::ErrorCode::kEmptySurface);
  }
}

TEST(VocabularyTest, RegistersMaskToken) {
  auto vocab = vc::build_vocabulary({"un", "foreseen", "<mask>"}, "<mask>");
  ASSERT_TRUE(vocab->mask_token_id());
  EXPECT_EQ(*vocab->mask_token_id(), 2u);
  EXPECT_EQ(vocab->content_size(), 2u);
}

TEST(VocabularyTest, NeedsTwoContentTokens) {
  EXPECT_THROW(vc::build_vocabulary({"only", "<mask>"}, "<mask>"), vc::Error);
  EXPECT_THROW(vc::build_vocabulary({"only"}), vc::Error);
}

TEST(VocabularyTest, TokenizeExactAndSegmented) {
  auto vocab = three();
  auto seq = vc::tokenize("the cat", vocab);
  EXPECT_EQ(std::vector<vc::TokenId>(seq.ids().begin(), seq.ids().end()), (std::vector<vc::TokenId>{0, 1}));
  auto glued = vc::tokenize("thecat", vocab);
  EXPECT_EQ(glued, seq);
}

TEST(VocabularyTest, TokenizePrefersLongestSurface) {
  auto vocab = vc::build_vocabulary({"un", "unfore", "fore", "seen", "foreseen"});
  auto seq = vc::tokenize("unforeseen", vocab);
  ASSERT_EQ(seq.length(), 2u);
  EXPECT_EQ(vocab->surface(seq[0]), "unfore");
  EXPECT_EQ(vocab->surface(seq[1]), "seen");
}

TEST(VocabularyTest, TokenizeUnknownWord) {
  try {
    vc::tokenize("dog", three());
    FAIL();
  } catch (const vc::Error& e) {
    EXPECT_EQ(e.code(), vc::ErrorCode::kUntokenizable);
  }
}

TEST(VocabularyTest, Detokenize) {
  auto vocab = three();
  EXPECT_EQ(vc::detokenize(vc::TokenSequence(vocab, {0, 1})), "the cat");
  EXPECT_EQ(vc::detokenize(vc::TokenSequence(vocab, {0})), "the");
}

TEST(VocabularyTest, RoundTripRandomWordSequences) {
  auto vocab = fixtures::verse_vocab();
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<vc::TokenId> pick(0, static_cast<vc::TokenId>(vocab->size() - 1));
  std::uniform_int_distribution<std::size_t> len(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<vc::TokenId> ids(len(rng));
    for (auto& id : ids) id = pick(rng);
    vc::TokenSequence seq(vocab, ids);
    EXPECT_EQ(vc::tokenize(vc::detokenize(seq), vocab), seq);
  }
}

TEST(VocabularyTest, TokenLetters) {
  auto vocab = vc::build_vocabulary({"Beyond", "unforeseen.", "..."});
  EXPECT_EQ(vc::token_letters(*vocab, 0).to_string(), "bdenoy");
  EXPECT_EQ(vc::token_letters(*vocab, 1).to_string(), "efnorsu");
  EXPECT_TRUE(vc::token_letters(*vocab, 2).empty());
  try {
    vc::token_letters(*vocab, 3);
    FAIL();
  } catch (const vc::Error& e) {
    EXPECT_EQ(e.code(), vc::ErrorCode::kBadTokenId);
  }
}

TEST(VocabularyTest, LettersAreLowercaseAlphabetic) {
  auto vocab = fixtures::verse_vocab();
  for (const auto& token : vocab->tokens())
    for (char c : token.letters.to_string()) EXPECT_TRUE(c >= 'a' && c <= 'z');
}

TEST(VocabularyTest, SequenceLengthIsFixed) {
  auto vocab = three();
  vc::TokenSequence seq(vocab, {0, 1, 2});
  EXPECT_THROW(seq.set(3, 0), vc::Error);
  EXPECT_THROW(seq.set(0, 9), vc::Error);
  EXPECT_THROW(vc::TokenSequence(vocab, {}), vc::Error);
  EXPECT_THROW(vc::TokenSequence(vocab, {5}), vc::Error);
}

TEST(VocabularyTest, FileFormatWithMaskHeader) {
  auto vocab = vc::parse_vocabulary("#mask <mask>\nsun\nmoon\n<mask>\n");
  EXPECT_EQ(vocab->size(), 3u);
  EXPECT_EQ(*vocab->mask_token_id(), 2u);
  EXPECT_EQ(*vc::parse_vocabulary(vc::render_vocabulary(*vocab)), *vocab);
}

}  // namespace
