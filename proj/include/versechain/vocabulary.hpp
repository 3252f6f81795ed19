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

#ifndef VERSECHAIN_VOCABULARY_HPP
#define VERSECHAIN_VOCABULARY_HPP

#include <algorithm>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "versechain/error.hpp"

namespace versechain {

using TokenId = std::uint32_t;

/// Set of lowercase ASCII letters a..z.
class LetterSet {
 public:
  LetterSet() = default;

  /// Collects the alphabetic characters of `text`, folded to lowercase.
  static LetterSet of(std::string_view text) {
    LetterSet set;
    for (char c : text) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (c >= 'a' && c <= 'z') set.bits_.set(static_cast<std::size_t>(c - 'a'));
    }
    return set;
  }

  bool contains(char c) const {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return c >= 'a' && c <= 'z' && bits_.test(static_cast<std::size_t>(c - 'a'));
  }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }
  bool intersects(const LetterSet& other) const { return (bits_ & other.bits_).any(); }

  LetterSet& operator|=(const LetterSet& other) {
    bits_ |= other.bits_;
    return *this;
  }

  /// Letters in alphabetical order, e.g. "bdenoy".
  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < 26; ++i)
      if (bits_.test(i)) out.push_back(static_cast<char>('a' + i));
    return out;
  }

  friend bool operator==(const LetterSet&, const LetterSet&) = default;

 private:
  std::bitset<26> bits_;
};

struct Token {
  TokenId id = 0;
  std::string surface;
  LetterSet letters;
};

/// Immutable, densely indexed token inventory. Letter metadata is computed
/// once here because lipogram compilation scans every token.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> surfaces, std::optional<std::string> mask_surface) {
    if (mask_surface && std::find(surfaces.begin(), surfaces.end(), *mask_surface) == surfaces.end())
      surfaces.push_back(*mask_surface);
    if (surfaces.empty()) throw Error(ErrorCode::kInvalidArgument, "vocabulary has no tokens");
    tokens_.reserve(surfaces.size());
    for (auto& surface : surfaces) {
      if (surface.empty())
        throw Error(ErrorCode::kEmptySurface, "empty surface at id " + std::to_string(tokens_.size()));
      const auto id = static_cast<TokenId>(tokens_.size());
      if (!by_surface_.emplace(surface, id).second)
        throw Error(ErrorCode::kDuplicateSurface, "duplicate surface '" + surface + "'");
      max_surface_length_ = std::max(max_surface_length_, surface.size());
      tokens_.push_back(Token{id, std::move(surface), {}});
      tokens_.back().letters = LetterSet::of(tokens_.back().surface);
    }
    if (mask_surface) mask_ = by_surface_.at(*mask_surface);
    if (content_size() < 2)
      throw Error(ErrorCode::kInvalidArgument, "vocabulary needs at least 2 non-mask tokens");
  }

  std::size_t size() const { return tokens_.size(); }
  /// Number of tokens that may appear in a composed sequence.
  std::size_t content_size() const { return tokens_.size() - (mask_ ? 1 : 0); }
  std::optional<TokenId> mask_token_id() const { return mask_; }
  bool is_mask(TokenId id) const { return mask_ && *mask_ == id; }
  bool valid(TokenId id) const { return id < tokens_.size(); }

  const Token& token(TokenId id) const {
    if (!valid(id)) throw Error(ErrorCode::kBadTokenId, "token id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }
  const std::string& surface(TokenId id) const { return token(id).surface; }
  std::span<const Token> tokens() const { return tokens_; }

  std::optional<TokenId> find(std::string_view surface) const {
    auto it = by_surface_.find(std::string(surface));
    if (it == by_surface_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t max_surface_length() const { return max_surface_length_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    if (a.mask_ != b.mask_ || a.tokens_.size() != b.tokens_.size()) return false;
    for (std::size_t i = 0; i < a.tokens_.size(); ++i)
      if (a.tokens_[i].surface != b.tokens_[i].surface) return false;
    return true;
  }

 private:
  std::vector<Token> tokens_;
  std::unordered_map<std::string, TokenId> by_surface_;
  std::optional<TokenId> mask_;
  std::size_t max_surface_length_ = 0;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

inline VocabularyPtr build_vocabulary(std::vector<std::string> surfaces,
                                      std::optional<std::string> mask_surface = std::nullopt) {
  return std::make_shared<const Vocabulary>(std::move(surfaces), std::move(mask_surface));
}

inline LetterSet token_letters(const Vocabulary& vocab, TokenId id) { return vocab.token(id).letters; }

/// Fixed-length chain state. The length is set at construction; only
/// individual positions can be overwritten afterwards.
class TokenSequence {
 public:
  TokenSequence(VocabularyPtr vocab, std::vector<TokenId> ids) : vocab_(std::move(vocab)), ids_(std::move(ids)) {
    if (!vocab_) throw Error(ErrorCode::kInvalidArgument, "sequence without vocabulary");
    if (ids_.empty()) throw Error(ErrorCode::kInvalidArgument, "sequence length must be positive");
    for (TokenId id : ids_)
      if (!vocab_->valid(id)) throw Error(ErrorCode::kBadTokenId, "token id " + std::to_string(id) + " out of range");
  }

  /// A sequence of `length` mask placeholders. Requires a mask token.
  static TokenSequence all_mask(VocabularyPtr vocab, std::size_t length) {
    if (!vocab || !vocab->mask_token_id())
      throw Error(ErrorCode::kInvalidArgument, "vocabulary has no mask token");
    const TokenId mask = *vocab->mask_token_id();
    return TokenSequence(std::move(vocab), std::vector<TokenId>(length, mask));
  }

  std::size_t length() const { return ids_.size(); }
  TokenId operator[](std::size_t position) const { return ids_[position]; }
  TokenId at(std::size_t position) const {
    if (position >= ids_.size())
      throw Error(ErrorCode::kBadPosition, "position " + std::to_string(position) + " out of range", position);
    return ids_[position];
  }

  void set(std::size_t position, TokenId id) {
    if (position >= ids_.size())
      throw Error(ErrorCode::kBadPosition, "position " + std::to_string(position) + " out of range", position);
    if (!vocab_->valid(id)) throw Error(ErrorCode::kBadTokenId, "token id " + std::to_string(id) + " out of range");
    ids_[position] = id;
  }

  TokenSequence with(std::size_t position, TokenId id) const {
    TokenSequence copy = *this;
    copy.set(position, id);
    return copy;
  }

  std::span<const TokenId> ids() const { return ids_; }
  const Vocabulary& vocabulary() const { return *vocab_; }
  const VocabularyPtr& vocabulary_ptr() const { return vocab_; }

  friend bool operator==(const TokenSequence& a, const TokenSequence& b) { return a.ids_ == b.ids_; }

 private:
  VocabularyPtr vocab_;
  std::vector<TokenId> ids_;
};

/// Splits on whitespace, then segments each word by greedy longest match.
inline TokenSequence tokenize(std::string_view text, const VocabularyPtr& vocab) {
  std::vector<TokenId> ids;
  std::istringstream words{std::string(text)};
  std::string word;
  while (words >> word) {
    std::size_t pos = 0;
    while (pos < word.size()) {
      const std::size_t longest = std::min(vocab->max_surface_length(), word.size() - pos);
      std::optional<TokenId> match;
      for (std::size_t len = longest; len > 0 && !match; --len)
        match = vocab->find(std::string_view(word).substr(pos, len));
      if (!match)
        throw Error(ErrorCode::kUntokenizable, "no surface matches '" + word.substr(pos) + "'");
      ids.push_back(*match);
      pos += vocab->surface(*match).size();
    }
  }
  if (ids.empty()) throw Error(ErrorCode::kUntokenizable, "text contains no tokens");
  return TokenSequence(vocab, std::move(ids));
}

inline std::string detokenize(const TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.length(); ++i) {
    if (i) out.push_back(' ');
    out += seq.vocabulary().surface(seq[i]);
  }
  return out;
}

/// Vocabulary file: one surface per line, line index = token id, with an
/// optional leading "#mask <surface>" header.
inline VocabularyPtr parse_vocabulary(std::string_view text) {
  std::vector<std::string> surfaces;
  std::optional<std::string> mask;
  std::size_t begin = 0;
  bool first = true;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(begin, end - begin));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    begin = end + 1;
    if (first && line.rfind("#mask ", 0) == 0) {
      mask = line.substr(6);
      first = false;
      continue;
    }
    first = false;
    surfaces.push_back(std::move(line));
  }
  return build_vocabulary(std::move(surfaces), std::move(mask));
}

inline std::string render_vocabulary(const Vocabulary& vocab) {
  std::string out;
  if (vocab.mask_token_id()) out += "#mask " + vocab.surface(*vocab.mask_token_id()) + "\n";
  for (const Token& token : vocab.tokens()) out += token.surface + "\n";
  return out;
}

}  // namespace versechain

#endif  // VERSECHAIN_VOCABULARY_HPP
