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

// Hard constraints on a fixed-length composition and their compilation into
// per-position vocabulary masks. Each constraint is an indicator expert; the
// product of experts is the intersection of the allowed-token sets at each
// position, enacted on the model by sending disallowed logits to -inf.
//
// Constraint spec format (line oriented, '#' starts a comment line):
//
//   length <l>                          must be the first statement
//   pin <position> <surface>            explicit prompt
//   lipogram <letters> [at <p,q,...>]   ban letters (everywhere by default)
//   rhyme <position> <suffix>           token at position ends with suffix
//   filter <name> <arg> at <p,q,...|all>

#ifndef VERSECHAIN_CONSTRAINTS_HPP
#define VERSECHAIN_CONSTRAINTS_HPP

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "versechain/error.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/vocabulary.hpp"

namespace versechain {

/// nullopt means every position.
using PositionScope = std::optional<std::vector<std::size_t>>;

struct Pin {
  std::size_t position = 0;
  TokenId token = 0;
  friend bool operator==(const Pin&, const Pin&) = default;
};

struct Lipogram {
  LetterSet banned;
  PositionScope positions;
  friend bool operator==(const Lipogram&, const Lipogram&) = default;
};

struct SuffixRhyme {
  std::size_t position = 0;
  std::string suffix;
  friend bool operator==(const SuffixRhyme&, const SuffixRhyme&) = default;
};

/// Named vocabulary filter. Known names: prefix, suffix, contains, excludes,
/// only (token letters drawn from arg), minlen, maxlen.
struct SurfacePredicate {
  std::string name;
  std::string argument;
  PositionScope positions;
  friend bool operator==(const SurfacePredicate&, const SurfacePredicate&) = default;
};

using Constraint = std::variant<Pin, Lipogram, SuffixRhyme, SurfacePredicate>;

struct ConstraintSet {
  std::size_t length = 1;
  std::vector<Constraint> constraints;
  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Allowed-token bitmap over a vocabulary.
class TokenMask {
 public:
  TokenMask() = default;
  explicit TokenMask(std::size_t vocab_size, bool value = true)
      : bits_(vocab_size, value), count_(value ? vocab_size : 0) {}

  bool allowed(TokenId id) const { return id < bits_.size() && bits_[id]; }
  std::size_t count() const { return count_; }
  std::size_t size() const { return bits_.size(); }

  void set(TokenId id, bool value) {
    if (bits_[id] == value) return;
    bits_[id] = value;
    value ? ++count_ : --count_;
  }

  template <typename Pred>
  void keep_if(Pred&& pred) {
    for (TokenId id = 0; id < bits_.size(); ++id)
      if (bits_[id] && !pred(id)) set(id, false);
  }

  std::vector<TokenId> allowed_ids() const {
    std::vector<TokenId> ids;
    for (TokenId id = 0; id < bits_.size(); ++id)
      if (bits_[id]) ids.push_back(id);
    return ids;
  }

  friend bool operator==(const TokenMask&, const TokenMask&) = default;

 private:
  std::vector<bool> bits_;
  std::size_t count_ = 0;
};

class PositionMasks {
 public:
  PositionMasks(std::vector<TokenMask> masks, std::vector<bool> pinned)
      : masks_(std::move(masks)), pinned_(std::move(pinned)) {
    for (std::size_t i = 0; i < pinned_.size(); ++i)
      if (!pinned_[i]) free_.push_back(i);
  }

  std::size_t length() const { return masks_.size(); }
  const TokenMask& operator[](std::size_t position) const { return masks_[position]; }
  bool pinned(std::size_t position) const { return pinned_[position]; }
  std::span<const std::size_t> free_positions() const { return free_; }

  bool allows(const TokenSequence& seq) const {
    if (seq.length() != masks_.size()) return false;
    for (std::size_t i = 0; i < masks_.size(); ++i)
      if (!masks_[i].allowed(seq[i])) return false;
    return true;
  }

  friend bool operator==(const PositionMasks& a, const PositionMasks& b) {
    return a.masks_ == b.masks_ && a.pinned_ == b.pinned_;
  }

 private:
  std::vector<TokenMask> masks_;
  std::vector<bool> pinned_;
  std::vector<std::size_t> free_;
};

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool in_scope(const PositionScope& scope, std::size_t position) {
  return !scope || std::find(scope->begin(), scope->end(), position) != scope->end();
}

inline std::size_t parse_count(std::string_view text) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorCode::kInvalidArgument, "'" + std::string(text) + "' is not a count");
  return value;
}

}  // namespace detail

/// Token filter for a SurfacePredicate; throws E_PARSE for unknown names.
inline std::function<bool(const Token&)> surface_filter(const std::string& name, const std::string& arg) {
  if (name == "prefix") return [arg](const Token& t) { return t.surface.rfind(arg, 0) == 0; };
  if (name == "suffix") return [arg](const Token& t) { return detail::ends_with(t.surface, arg); };
  if (name == "contains") return [arg](const Token& t) { return t.surface.find(arg) != std::string::npos; };
  if (name == "excludes") return [arg](const Token& t) { return t.surface.find(arg) == std::string::npos; };
  if (name == "only") {
    const LetterSet permitted = LetterSet::of(arg);
    return [permitted](const Token& t) {
      LetterSet merged = permitted;
      merged |= t.letters;
      return merged == permitted;
    };
  }
  if (name == "minlen" || name == "maxlen") {
    std::size_t bound = 0;
    try {
      bound = detail::parse_count(arg);
    } catch (const Error&) {
      throw Error(ErrorCode::kParse, "filter " + name + " needs a numeric argument");
    }
    if (name == "minlen") return [bound](const Token& t) { return t.surface.size() >= bound; };
    return [bound](const Token& t) { return t.surface.size() <= bound; };
  }
  throw Error(ErrorCode::kParse, "unknown filter '" + name + "'");
}

/// Structural checks: positions in range, valid pin tokens, non-empty
/// suffixes and letter sets, at most one pin per position.
inline void validate(const ConstraintSet& cs, const Vocabulary& vocab) {
  if (cs.length == 0) throw Error(ErrorCode::kInvalidArgument, "length must be at least 1");
  auto check_position = [&](std::size_t p) {
    if (p >= cs.length)
      throw Error(ErrorCode::kBadPosition,
                  "position " + std::to_string(p) + " out of range for length " + std::to_string(cs.length), p);
  };
  auto check_scope = [&](const PositionScope& scope) {
    if (!scope) return;
    if (scope->empty()) throw Error(ErrorCode::kInvalidArgument, "empty position list");
    for (std::size_t p : *scope) check_position(p);
  };
  std::vector<bool> pinned(cs.length, false);
  for (const Constraint& c : cs.constraints) {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Pin>) {
            check_position(k.position);
            if (!vocab.valid(k.token))
              throw Error(ErrorCode::kBadTokenId, "pin token id " + std::to_string(k.token) + " out of range");
            if (pinned[k.position])
              throw Error(ErrorCode::kConflictingPins, "position " + std::to_string(k.position) + " pinned twice",
                          k.position);
            pinned[k.position] = true;
          } else if constexpr (std::is_same_v<K, Lipogram>) {
            if (k.banned.empty()) throw Error(ErrorCode::kInvalidArgument, "lipogram bans no letters");
            check_scope(k.positions);
          } else if constexpr (std::is_same_v<K, SuffixRhyme>) {
            check_position(k.position);
            if (k.suffix.empty()) throw Error(ErrorCode::kInvalidArgument, "rhyme suffix is empty");
          } else {
            surface_filter(k.name, k.argument);
            check_scope(k.positions);
          }
        },
        c);
  }
}

/// Intersects every constraint's allowed set per position. The mask token is
/// never allowed. Throws E_INFEASIBLE at the first position left empty.
inline PositionMasks compile_masks(const ConstraintSet& cs, const Vocabulary& vocab) {
  validate(cs, vocab);
  std::vector<TokenMask> masks(cs.length, TokenMask(vocab.size()));
  std::vector<bool> pinned(cs.length, false);
  if (auto mask_id = vocab.mask_token_id())
    for (auto& m : masks) m.set(*mask_id, false);

  auto tokens = vocab.tokens();
  auto restrict_scope = [&](const PositionScope& scope, const auto& pred) {
    for (std::size_t p = 0; p < cs.length; ++p)
      if (detail::in_scope(scope, p)) masks[p].keep_if([&](TokenId id) { return pred(tokens[id]); });
  };

  for (const Constraint& c : cs.constraints) {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Pin>) {
            masks[k.position].keep_if([&](TokenId id) { return id == k.token; });
            pinned[k.position] = true;
          } else if constexpr (std::is_same_v<K, Lipogram>) {
            restrict_scope(k.positions, [&](const Token& t) { return !t.letters.intersects(k.banned); });
          } else if constexpr (std::is_same_v<K, SuffixRhyme>) {
            masks[k.position].keep_if([&](TokenId id) { return detail::ends_with(tokens[id].surface, k.suffix); });
          } else {
            restrict_scope(k.positions, surface_filter(k.name, k.argument));
          }
        },
        c);
  }
  for (std::size_t p = 0; p < cs.length; ++p)
    if (masks[p].count() == 0)
      throw Error(ErrorCode::kInfeasible, "infeasible at position " + std::to_string(p), p);
  return PositionMasks(std::move(masks), std::move(pinned));
}

/// Disallowed entries become -inf; allowed entries pass through unchanged.
inline LogitVector apply_mask(std::span<const double> logits, const TokenMask& mask) {
  if (logits.size() != mask.size())
    throw Error(ErrorCode::kLengthMismatch, "logits and mask differ in length");
  if (mask.count() == 0) throw Error(ErrorCode::kEmptyMask, "mask allows no token");
  LogitVector out(logits.begin(), logits.end());
  for (TokenId id = 0; id < out.size(); ++id)
    if (!mask.allowed(id)) out[id] = kNegInf;
  return out;
}

/// Evaluates every constraint's predicate on `seq` directly, without going
/// through compiled masks. Mask placeholders never satisfy.
inline bool satisfies(const TokenSequence& seq, const ConstraintSet& cs, const Vocabulary& vocab) {
  if (seq.length() != cs.length)
    throw Error(ErrorCode::kLengthMismatch, "sequence length " + std::to_string(seq.length()) +
                                                " differs from constraint length " + std::to_string(cs.length));
  for (std::size_t p = 0; p < seq.length(); ++p)
    if (vocab.is_mask(seq[p])) return false;
  auto token_at = [&](std::size_t p) -> const Token& { return vocab.token(seq[p]); };
  for (const Constraint& c : cs.constraints) {
    const bool ok = std::visit(
        [&](const auto& k) -> bool {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Pin>) {
            return seq[k.position] == k.token;
          } else if constexpr (std::is_same_v<K, Lipogram>) {
            for (std::size_t p = 0; p < seq.length(); ++p)
              if (detail::in_scope(k.positions, p) && token_at(p).letters.intersects(k.banned)) return false;
            return true;
          } else if constexpr (std::is_same_v<K, SuffixRhyme>) {
            return detail::ends_with(token_at(k.position).surface, k.suffix);
          } else {
            auto keep = surface_filter(k.name, k.argument);
            for (std::size_t p = 0; p < seq.length(); ++p)
              if (detail::in_scope(k.positions, p) && !keep(token_at(p))) return false;
            return true;
          }
        },
        c);
    if (!ok) return false;
  }
  return true;
}

namespace detail {

inline std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::istringstream in{std::string(line)};
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

inline PositionScope parse_scope(const std::string& text, std::size_t line_no) {
  if (text == "all") return std::nullopt;
  std::vector<std::size_t> positions;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find(',', begin);
    if (end == std::string::npos) end = text.size();
    try {
      positions.push_back(parse_count(std::string_view(text).substr(begin, end - begin)));
    } catch (const Error&) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad position list '" + text + "'",
                  line_no);
    }
    begin = end + 1;
  }
  return positions;
}

inline std::string render_scope(const PositionScope& scope) {
  if (!scope) return "all";
  std::string out;
  for (std::size_t i = 0; i < scope->size(); ++i) out += (i ? "," : "") + std::to_string((*scope)[i]);
  return out;
}

}  // namespace detail

/// Parses the constraint spec format. The first error aborts with its
/// 1-based line number.
inline ConstraintSet parse_constraint_spec(std::string_view text, const Vocabulary& vocab) {
  ConstraintSet cs;
  bool have_length = false;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;

    auto words = detail::split_words(line);
    if (words.empty() || words[0][0] == '#') continue;
    auto parse_error = [&](const std::string& reason) {
      return Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + reason, line_no);
    };
    auto position_of = [&](const std::string& word) {
      std::size_t p = 0;
      try {
        p = detail::parse_count(word);
      } catch (const Error&) {
        throw parse_error("bad position '" + word + "'");
      }
      if (p >= cs.length)
        throw Error(ErrorCode::kBadPosition,
                    "line " + std::to_string(line_no) + ": position " + word + " out of range for length " +
                        std::to_string(cs.length),
                    p);
      return p;
    };
    auto check_scope = [&](const PositionScope& scope) {
      if (scope)
        for (std::size_t p : *scope) position_of(std::to_string(p));
    };

    const std::string& keyword = words[0];
    if (!have_length) {
      if (keyword != "length") throw parse_error("length must come first");
      if (words.size() != 2) throw parse_error("expected 'length <l>'");
      try {
        cs.length = detail::parse_count(words[1]);
      } catch (const Error&) {
        throw parse_error("bad length '" + words[1] + "'");
      }
      if (cs.length == 0) throw parse_error("length must be at least 1");
      have_length = true;
    } else if (keyword == "length") {
      throw parse_error("length given twice");
    } else if (keyword == "pin") {
      if (words.size() != 3) throw parse_error("expected 'pin <position> <surface>'");
      const std::size_t p = position_of(words[1]);
      auto id = vocab.find(words[2]);
      if (!id)
        throw Error(ErrorCode::kUnknownToken,
                    "line " + std::to_string(line_no) + ": '" + words[2] + "' is not in the vocabulary", line_no);
      cs.constraints.push_back(Pin{p, *id});
    } else if (keyword == "lipogram") {
      if (words.size() != 2 && !(words.size() == 4 && words[2] == "at"))
        throw parse_error("expected 'lipogram <letters> [at <positions>]'");
      for (char c : words[1])
        if (!std::isalpha(static_cast<unsigned char>(c))) throw parse_error("lipogram letters must be alphabetic");
      Lipogram lipogram{LetterSet::of(words[1]), std::nullopt};
      if (words.size() == 4) lipogram.positions = detail::parse_scope(words[3], line_no);
      check_scope(lipogram.positions);
      cs.constraints.push_back(std::move(lipogram));
    } else if (keyword == "rhyme") {
      if (words.size() != 3) throw parse_error("expected 'rhyme <position> <suffix>'");
      cs.constraints.push_back(SuffixRhyme{position_of(words[1]), words[2]});
    } else if (keyword == "filter") {
      if (words.size() != 5 || words[3] != "at") throw parse_error("expected 'filter <name> <arg> at <positions|all>'");
      try {
        surface_filter(words[1], words[2]);
      } catch (const Error& e) {
        throw parse_error(e.what());
      }
      SurfacePredicate filter{words[1], words[2], detail::parse_scope(words[4], line_no)};
      check_scope(filter.positions);
      cs.constraints.push_back(std::move(filter));
    } else {
      throw parse_error("unknown statement '" + keyword + "'");
    }
  }
  if (!have_length) throw Error(ErrorCode::kParse, "line 1: length must come first", 1);
  validate(cs, vocab);
  return cs;
}

inline std::string render_constraint_spec(const ConstraintSet& cs, const Vocabulary& vocab) {
  std::string out = "length " + std::to_string(cs.length) + "\n";
  for (const Constraint& c : cs.constraints) {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Pin>) {
            out += "pin " + std::to_string(k.position) + " " + vocab.surface(k.token) + "\n";
          } else if constexpr (std::is_same_v<K, Lipogram>) {
            out += "lipogram " + k.banned.to_string();
            if (k.positions) out += " at " + detail::render_scope(k.positions);
            out += "\n";
          } else if constexpr (std::is_same_v<K, SuffixRhyme>) {
            out += "rhyme " + std::to_string(k.position) + " " + k.suffix + "\n";
          } else {
            out += "filter " + k.name + " " + k.argument + " at " + detail::render_scope(k.positions) + "\n";
          }
        },
        c);
  }
  return out;
}

}  // namespace versechain

#endif  // VERSECHAIN_CONSTRAINTS_HPP
