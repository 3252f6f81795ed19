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

#ifndef VERSECHAIN_MODEL_PROVIDER_HPP
#define VERSECHAIN_MODEL_PROVIDER_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "versechain/error.hpp"
#include "versechain/vocabulary.hpp"

namespace versechain {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// One real per vocabulary token; -inf marks a token with zero probability.
using LogitVector = std::vector<double>;

/// log(softmax(logits / temperature)). Entries at -inf stay at -inf, so they
/// map to exactly zero probability.
inline std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0) {
  double peak = kNegInf;
  for (double x : logits) peak = std::max(peak, x);
  if (!std::isfinite(peak)) throw Error(ErrorCode::kEmptyMask, "no finite logit");
  double sum = 0.0;
  for (double x : logits)
    if (x != kNegInf) sum += std::exp((x - peak) / temperature);
  const double log_z = std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = logits[i] == kNegInf ? kNegInf : (logits[i] - peak) / temperature - log_z;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0) {
  auto out = log_softmax(logits, temperature);
  for (double& x : out) x = x == kNegInf ? 0.0 : std::exp(x);
  return out;
}

/// A masked language model seen as an oracle: logits for one position given
/// every other position of the sequence.
class MaskedModelProvider {
 public:
  virtual ~MaskedModelProvider() = default;

  virtual const VocabularyPtr& vocabulary() const = 0;

  /// Implementations may assume 0 <= position < seq.length() and that the
  /// sequence is over vocabulary(). Same inputs must give the same logits.
  virtual LogitVector logits_at(const TokenSequence& seq, std::size_t position) const = 0;
};

using ProviderPtr = std::shared_ptr<const MaskedModelProvider>;

/// Checked entry point used by the sampler.
inline LogitVector masked_logits(const MaskedModelProvider& provider, const TokenSequence& seq,
                                 std::size_t position) {
  if (position >= seq.length())
    throw Error(ErrorCode::kBadPosition,
                "position " + std::to_string(position) + " >= length " + std::to_string(seq.length()), position);
  LogitVector logits = provider.logits_at(seq, position);
  if (logits.size() != provider.vocabulary()->size())
    throw Error(ErrorCode::kProviderFailure, "provider returned " + std::to_string(logits.size()) +
                                                 " logits for a vocabulary of " +
                                                 std::to_string(provider.vocabulary()->size()));
  if (std::none_of(logits.begin(), logits.end(), [](double x) { return std::isfinite(x); }))
    throw Error(ErrorCode::kProviderFailure, "no finite logit at position " + std::to_string(position), position);
  return logits;
}

/// E(X) = -sum_i log p(x_i | X without i): negative pseudo-log-likelihood.
inline double pseudo_loglik_energy(const MaskedModelProvider& provider, const TokenSequence& seq) {
  double energy = 0.0;
  for (std::size_t i = 0; i < seq.length(); ++i) {
    const auto log_probs = log_softmax(masked_logits(provider, seq, i));
    const double lp = log_probs[seq[i]];
    if (lp == kNegInf)
      throw Error(ErrorCode::kInfiniteEnergy,
                  "token '" + seq.vocabulary().surface(seq[i]) + "' has zero conditional probability", i);
    energy -= lp;
  }
  return energy;
}

/// Explicit joint distribution over every length-l sequence of content
/// (non-mask) tokens. Table index is mixed-radix with position 0 most
/// significant, digits ordered by token id.
class TabularModel final : public MaskedModelProvider {
 public:
  static constexpr std::size_t kMaxTableSize = 10'000'000;

  TabularModel(VocabularyPtr vocab, std::size_t length, std::vector<double> joint)
      : vocab_(std::move(vocab)), length_(length), joint_(std::move(joint)) {
    if (length_ == 0) throw Error(ErrorCode::kInvalidArgument, "tabular length must be positive");
    for (const Token& t : vocab_->tokens()) {
      digit_.push_back(vocab_->is_mask(t.id) ? kNoDigit : content_.size());
      if (!vocab_->is_mask(t.id)) content_.push_back(t.id);
    }
    const std::size_t expected = table_size(content_.size(), length_);
    if (joint_.size() != expected)
      throw Error(ErrorCode::kInvalidArgument, "joint has " + std::to_string(joint_.size()) + " entries, expected " +
                                                   std::to_string(expected));
    double total = 0.0;
    for (double p : joint_) {
      if (!(p > 0.0) || !std::isfinite(p))
        throw Error(ErrorCode::kInvalidArgument, "joint probabilities must be strictly positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw Error(ErrorCode::kInvalidArgument, "joint sums to " + std::to_string(total) + ", not 1");
  }

  /// Builds a model from unnormalized positive weights, normalizing them.
  static std::shared_ptr<TabularModel> from_weights(
      VocabularyPtr vocab, std::size_t length, const std::function<double(std::span<const TokenId>)>& weight) {
    TabularModel shape(vocab, length);
    std::vector<double> joint(shape.table_size());
    double total = 0.0;
    for (std::size_t k = 0; k < joint.size(); ++k) {
      joint[k] = weight(shape.decode(k));
      total += joint[k];
    }
    for (double& p : joint) p /= total;
    return std::make_shared<TabularModel>(std::move(vocab), length, std::move(joint));
  }

  static std::shared_ptr<TabularModel> uniform(VocabularyPtr vocab, std::size_t length) {
    return from_weights(std::move(vocab), length, [](std::span<const TokenId>) { return 1.0; });
  }

  /// Raw weight `spike_weight` on one sequence and 1/|table| on every other
  /// sequence, renormalized.
  static std::shared_ptr<TabularModel> spike(VocabularyPtr vocab, std::vector<TokenId> spike_ids,
                                             double spike_weight) {
    const std::size_t length = spike_ids.size();
    const double rest = 1.0 / static_cast<double>(table_size(vocab->content_size(), length));
    return from_weights(std::move(vocab), length, [=](std::span<const TokenId> ids) {
      return std::equal(ids.begin(), ids.end(), spike_ids.begin(), spike_ids.end()) ? spike_weight : rest;
    });
  }

  const VocabularyPtr& vocabulary() const override { return vocab_; }
  std::size_t length() const { return length_; }
  std::size_t table_size() const { return joint_.empty() ? table_size(content_.size(), length_) : joint_.size(); }
  std::span<const TokenId> content_tokens() const { return content_; }

  double joint(std::span<const TokenId> ids) const { return joint_[encode(ids)]; }
  double joint_at(std::size_t index) const { return joint_[index]; }

  std::size_t encode(std::span<const TokenId> ids) const {
    if (ids.size() != length_)
      throw Error(ErrorCode::kLengthMismatch, "sequence length " + std::to_string(ids.size()) +
                                                  " does not match tabular length " + std::to_string(length_));
    std::size_t index = 0;
    for (TokenId id : ids) {
      if (!vocab_->valid(id) || digit_[id] == kNoDigit)
        throw Error(ErrorCode::kBadTokenId, "token id " + std::to_string(id) + " is not a content token");
      index = index * content_.size() + digit_[id];
    }
    return index;
  }

  std::vector<TokenId> decode(std::size_t index) const {
    std::vector<TokenId> ids(length_);
    for (std::size_t i = length_; i-- > 0;) {
      ids[i] = content_[index % content_.size()];
      index /= content_.size();
    }
    return ids;
  }

  /// p(v | the other positions). Positions other than `position` holding the
  /// mask token are marginalized out.
  std::vector<double> conditional(const TokenSequence& seq, std::size_t position) const {
    if (seq.length() != length_)
      throw Error(ErrorCode::kLengthMismatch, "sequence length does not match tabular length");
    if (position >= length_)
      throw Error(ErrorCode::kBadPosition, "position " + std::to_string(position) + " out of range", position);

    std::vector<std::size_t> hidden;
    std::vector<TokenId> ids(seq.ids().begin(), seq.ids().end());
    for (std::size_t i = 0; i < length_; ++i)
      if (i != position && vocab_->is_mask(ids[i])) hidden.push_back(i);

    std::vector<double> probs(vocab_->size(), 0.0);
    const std::size_t completions = table_size(content_.size(), hidden.size());
    for (std::size_t c = 0; c < completions; ++c) {
      std::size_t rest = c;
      for (std::size_t h : hidden) {
        ids[h] = content_[rest % content_.size()];
        rest /= content_.size();
      }
      for (TokenId v : content_) {
        ids[position] = v;
        probs[v] += joint(ids);
      }
    }
    double total = 0.0;
    for (double p : probs) total += p;
    for (double& p : probs) p /= total;
    return probs;
  }

  LogitVector logits_at(const TokenSequence& seq, std::size_t position) const override {
    auto probs = conditional(seq, position);
    for (double& p : probs) p = p > 0.0 ? std::log(p) : kNegInf;
    return probs;
  }

  static std::size_t table_size(std::size_t radix, std::size_t length) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < length; ++i) {
      if (n > kMaxTableSize / radix)
        throw Error(ErrorCode::kTooLarge, std::to_string(radix) + "^" + std::to_string(length) + " sequences");
      n *= radix;
    }
    return n;
  }

 private:
  static constexpr std::size_t kNoDigit = static_cast<std::size_t>(-1);

  // Shape-only constructor used by from_weights to enumerate sequences.
  TabularModel(VocabularyPtr vocab, std::size_t length) : vocab_(std::move(vocab)), length_(length) {
    for (const Token& t : vocab_->tokens()) {
      digit_.push_back(vocab_->is_mask(t.id) ? kNoDigit : content_.size());
      if (!vocab_->is_mask(t.id)) content_.push_back(t.id);
    }
  }

  VocabularyPtr vocab_;
  std::size_t length_;
  std::vector<double> joint_;
  std::vector<TokenId> content_;
  std::vector<std::size_t> digit_;
};

/// Test oracle: p(v | seq without position) straight from the joint table.
inline std::vector<double> exact_conditional(const TabularModel& model, const TokenSequence& seq,
                                             std::size_t position) {
  return model.conditional(seq, position);
}

/// Tabular model file: "TABULAR <l>" then "<id id ...> <probability>" per
/// sequence. Every content sequence must appear exactly once.
inline std::shared_ptr<TabularModel> parse_tabular_model(std::string_view text, VocabularyPtr vocab) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::size_t length = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream header(line);
    std::string word;
    if (!(header >> word) || word != "TABULAR" || !(header >> length) || length == 0)
      throw Error(ErrorCode::kParse, "expected 'TABULAR <l>'", line_no);
    break;
  }
  if (length == 0) throw Error(ErrorCode::kParse, "missing 'TABULAR <l>' header", line_no);

  const std::size_t radix = vocab->content_size();
  const std::size_t size = TabularModel::table_size(radix, length);
  std::vector<double> joint(size, 0.0);
  std::vector<bool> seen(size, false);
  std::vector<std::size_t> digit(vocab->size(), size);
  {
    std::size_t d = 0;
    for (const Token& t : vocab->tokens())
      if (!vocab->is_mask(t.id)) digit[t.id] = d++;
  }
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::vector<std::string> fields;
    for (std::string f; row >> f;) fields.push_back(f);
    if (fields.size() != length + 1)
      throw Error(ErrorCode::kParse, "expected " + std::to_string(length) + " ids and a probability", line_no);
    std::size_t index = 0;
    for (std::size_t i = 0; i < length; ++i) {
      TokenId id = 0;
      auto [ptr, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), id);
      if (ec != std::errc() || ptr != fields[i].data() + fields[i].size() || !vocab->valid(id) ||
          digit[id] == size)
        throw Error(ErrorCode::kParse, "bad token id '" + fields[i] + "'", line_no);
      index = index * radix + digit[id];
    }
    double p = 0.0;
    const std::string& pf = fields[length];
    auto [ptr, ec] = std::from_chars(pf.data(), pf.data() + pf.size(), p);
    if (ec != std::errc() || ptr != pf.data() + pf.size())
      throw Error(ErrorCode::kParse, "bad probability '" + pf + "'", line_no);
    if (seen[index]) throw Error(ErrorCode::kParse, "duplicate sequence", line_no);
    seen[index] = true;
    joint[index] = p;
    ++rows;
  }
  if (rows != size)
    throw Error(ErrorCode::kParse, "table lists " + std::to_string(rows) + " of " + std::to_string(size) + " sequences");
  return std::make_shared<TabularModel>(std::move(vocab), length, std::move(joint));
}

inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

inline std::string render_tabular_model(const TabularModel& model) {
  std::string out = "TABULAR " + std::to_string(model.length()) + "\n";
  for (std::size_t k = 0; k < model.table_size(); ++k) {
    for (TokenId id : model.decode(k)) out += std::to_string(id) + " ";
    out += format_double(model.joint_at(k)) + "\n";
  }
  return out;
}

}  // namespace versechain

#endif  // VERSECHAIN_MODEL_PROVIDER_HPP
