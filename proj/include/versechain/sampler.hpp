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

// Metropolis-Hastings over constrained fixed-length sequences.
//
// Target:   pi(X) ∝ exp(-E(X) / target_temperature) on mask-allowed X, with
//           E the negative pseudo-log-likelihood of the provider.
// Proposal: pick a free (non-pinned) position uniformly, draw a token from
//           softmax(masked logits / proposal_temperature) restricted to the
//           position's mask. Context is unchanged by the move, so the reverse
//           proposal is the same distribution evaluated at the current token.
// Accept:   min(1, exp((E(X) - E(X')) / T) * q_reverse / q_forward).

#ifndef VERSECHAIN_SAMPLER_HPP
#define VERSECHAIN_SAMPLER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "versechain/constraints.hpp"
#include "versechain/error.hpp"
#include "versechain/model_provider.hpp"
#include "versechain/vocabulary.hpp"

namespace versechain {

struct SamplerConfig {
  double proposal_temperature = 1.0;
  double target_temperature = 1.0;
  std::uint64_t burn_in = 0;
  std::uint64_t thinning = 1;
  std::optional<std::uint64_t> max_steps;  // unbounded when absent
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(proposal_temperature > 0.0) || !std::isfinite(proposal_temperature))
      throw Error(ErrorCode::kInvalidArgument, "proposal temperature must be positive");
    if (!(target_temperature > 0.0) || !std::isfinite(target_temperature))
      throw Error(ErrorCode::kInvalidArgument, "target temperature must be positive");
    if (thinning == 0) throw Error(ErrorCode::kInvalidArgument, "thinning must be at least 1");
  }
};

/// Platform-independent draws on top of mt19937_64, whose output sequence
/// is fixed by the standard. std::uniform_*_distribution is not, so the
/// mappings to [0,1) and [0,n) are done here.
class ChainRng {
 public:
  explicit ChainRng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Index drawn from `probs` (non-negative, summing to ~1).
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform01();
    double cumulative = 0.0;
    std::size_t last = probs.size();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      cumulative += probs[i];
      last = i;
      if (u < cumulative) return i;
    }
    return last;  // rounding left u above the final cumulative sum
  }

  friend bool operator==(const ChainRng&, const ChainRng&) = default;

 private:
  std::mt19937_64 engine_;
};

struct ChainState {
  TokenSequence seq;
  double energy = 0.0;
  std::uint64_t step = 0;
  std::uint64_t accepted = 0;
  ChainRng rng;

  double acceptance_rate() const { return step == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(step); }
};

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t position = 0;
  TokenId previous = 0;
  TokenId proposed = 0;
  double q_forward = 0.0;
  double q_reverse = 0.0;
  double acceptance = 0.0;
  bool accepted = false;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Proposal {
  std::size_t position = 0;
  TokenId token = 0;
  double q_forward = 0.0;
  double q_reverse = 0.0;
};

/// Proposal distribution at `position`: the masked conditional, restricted
/// to the position's allowed set and tempered.
inline std::vector<double> proposal_distribution(const TokenSequence& seq, std::size_t position,
                                                 const PositionMasks& masks, const MaskedModelProvider& provider,
                                                 double temperature) {
  const LogitVector constrained = apply_mask(masked_logits(provider, seq, position), masks[position]);
  if (std::none_of(constrained.begin(), constrained.end(), [](double x) { return std::isfinite(x); }))
    throw Error(ErrorCode::kInfeasible,
                "model gives zero probability to every allowed token at position " + std::to_string(position),
                position);
  return softmax(constrained, temperature);
}

/// Re-samples, left to right, every non-pinned position that holds a mask
/// placeholder, violates its mask, or is listed in `force`. Pinned positions
/// are set to their pinned token first. Draws come from `state.rng`.
inline void repair_chain(ChainState& state, const PositionMasks& masks, const MaskedModelProvider& provider,
                         const std::vector<bool>& force = {}) {
  const Vocabulary& vocab = state.seq.vocabulary();
  std::vector<bool> repair(masks.length(), false);
  for (std::size_t i = 0; i < masks.length(); ++i) {
    if (masks.pinned(i)) {
      state.seq.set(i, masks[i].allowed_ids().front());
      continue;
    }
    repair[i] = (i < force.size() && force[i]) || vocab.is_mask(state.seq[i]) || !masks[i].allowed(state.seq[i]);
  }
  for (std::size_t i = 0; i < masks.length(); ++i) {
    if (!repair[i]) continue;
    const auto probs = proposal_distribution(state.seq, i, masks, provider, 1.0);
    state.seq.set(i, static_cast<TokenId>(state.rng.categorical(probs)));
  }
  state.energy = pseudo_loglik_energy(provider, state.seq);
}

/// Builds the initial chain state. With no seed the chain starts from an
/// all-mask sequence (or, for vocabularies without a mask token, from
/// placeholders) and every free position is drawn from its constrained
/// conditional.
inline ChainState init_chain(const std::optional<TokenSequence>& seed, const PositionMasks& masks,
                             const MaskedModelProvider& provider, const SamplerConfig& cfg) {
  cfg.validate();
  const VocabularyPtr& vocab = provider.vocabulary();
  std::vector<bool> force;
  std::optional<TokenSequence> start;
  if (seed) {
    if (seed->length() != masks.length())
      throw Error(ErrorCode::kLengthMismatch, "seed length " + std::to_string(seed->length()) +
                                                  " differs from constraint length " + std::to_string(masks.length()));
    if (!(seed->vocabulary() == *vocab))
      throw Error(ErrorCode::kInvalidArgument, "seed vocabulary does not match the provider");
    start = TokenSequence(vocab, std::vector<TokenId>(seed->ids().begin(), seed->ids().end()));
  } else if (vocab->mask_token_id()) {
    start = TokenSequence::all_mask(vocab, masks.length());
  } else {
    std::vector<TokenId> placeholder(masks.length());
    for (std::size_t i = 0; i < masks.length(); ++i) placeholder[i] = masks[i].allowed_ids().front();
    start = TokenSequence(vocab, std::move(placeholder));
    force.assign(masks.length(), true);
  }
  ChainState state{std::move(*start), 0.0, 0, 0, ChainRng(cfg.rng_seed)};
  repair_chain(state, masks, provider, force);
  return state;
}

inline Proposal propose(ChainState& state, const PositionMasks& masks, const MaskedModelProvider& provider,
                        const SamplerConfig& cfg) {
  const auto free = masks.free_positions();
  if (free.empty()) throw Error(ErrorCode::kNoFreePositions, "every position is pinned");
  const std::size_t position = free[state.rng.below(free.size())];
  const auto probs = proposal_distribution(state.seq, position, masks, provider, cfg.proposal_temperature);
  const auto token = static_cast<TokenId>(state.rng.categorical(probs));
  return Proposal{position, token, probs[token], probs[state.seq[position]]};
}

struct MoveEvaluation {
  double acceptance = 1.0;
  double proposed_energy = 0.0;
};

inline MoveEvaluation evaluate_move(const ChainState& state, std::size_t position, TokenId proposed, double q_forward,
                                    double q_reverse, const MaskedModelProvider& provider, const SamplerConfig& cfg) {
  if (proposed == state.seq.at(position)) return {1.0, state.energy};
  const double proposed_energy = pseudo_loglik_energy(provider, state.seq.with(position, proposed));
  const double log_ratio =
      (state.energy - proposed_energy) / cfg.target_temperature + std::log(q_reverse) - std::log(q_forward);
  return {log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio), proposed_energy};
}

inline double acceptance_probability(const ChainState& state, std::size_t position, TokenId proposed,
                                     double q_forward, double q_reverse, const MaskedModelProvider& provider,
                                     const SamplerConfig& cfg) {
  return evaluate_move(state, position, proposed, q_forward, q_reverse, provider, cfg).acceptance;
}

/// One MH transition. Always consumes three draws from the chain rng
/// (position, token, accept test) so streams stay aligned across runs.
inline StepRecord step(ChainState& state, const PositionMasks& masks, const MaskedModelProvider& provider,
                       const SamplerConfig& cfg) {
  const Proposal proposal = propose(state, masks, provider, cfg);
  const MoveEvaluation move =
      evaluate_move(state, proposal.position, proposal.token, proposal.q_forward, proposal.q_reverse, provider, cfg);
  const bool accept = state.rng.uniform01() < move.acceptance;

  StepRecord record{state.step + 1,       proposal.position,   state.seq[proposal.position], proposal.token,
                    proposal.q_forward,   proposal.q_reverse,  move.acceptance,              accept};
  if (accept) {
    state.seq.set(proposal.position, proposal.token);
    state.energy = move.proposed_energy;
    ++state.accepted;
  }
  ++state.step;
  return record;
}

/// Emission schedule: after step s (s >= 1) when s >= burn_in and
/// (s - burn_in) is a multiple of thinning.
inline bool emission_due(const SamplerConfig& cfg, std::uint64_t step) {
  return step >= 1 && step >= cfg.burn_in && (step - cfg.burn_in) % cfg.thinning == 0;
}

struct RunHooks {
  /// Called with each emitted state; return false to stop the run.
  std::function<bool(const ChainState&)> emit;
  /// Optional, called after every step.
  std::function<void(const ChainState&, const StepRecord&)> on_step;
};

/// Steps until max_steps (counted on state.step) or until emit asks to stop.
inline void run(ChainState& state, const PositionMasks& masks, const MaskedModelProvider& provider,
                const SamplerConfig& cfg, const RunHooks& hooks) {
  cfg.validate();
  while (!cfg.max_steps || state.step < *cfg.max_steps) {
    const StepRecord record = step(state, masks, provider, cfg);
    if (hooks.on_step) hooks.on_step(state, record);
    if (emission_due(cfg, state.step) && hooks.emit && !hooks.emit(state)) return;
  }
}

/// Probability per sequence, keyed by token ids in lexicographic order.
using SequenceDistribution = std::map<std::vector<TokenId>, double>;

/// Enumerates every mask-allowed sequence and normalizes
/// exp(-E(X) / target_temperature). Energies come straight from the joint
/// table, not through masked_logits.
inline SequenceDistribution exact_target_distribution(const TabularModel& model, const PositionMasks& masks,
                                                      const SamplerConfig& cfg, std::size_t limit = 1'000'000) {
  if (masks.length() != model.length())
    throw Error(ErrorCode::kLengthMismatch, "mask length differs from tabular length");
  std::vector<std::vector<TokenId>> allowed(masks.length());
  std::size_t count = 1;
  for (std::size_t i = 0; i < masks.length(); ++i) {
    allowed[i] = masks[i].allowed_ids();
    if (count > limit / allowed[i].size()) throw Error(ErrorCode::kTooLarge, "too many sequences to enumerate");
    count *= allowed[i].size();
  }
  const auto content = model.content_tokens();

  std::vector<std::vector<TokenId>> support;
  std::vector<double> log_weights;
  support.reserve(count);
  log_weights.reserve(count);
  std::vector<std::size_t> cursor(masks.length(), 0);
  std::vector<TokenId> ids(masks.length());
  for (std::size_t n = 0; n < count; ++n) {
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = allowed[i][cursor[i]];
    double energy = 0.0;
    std::vector<TokenId> probe = ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double column = 0.0;
      for (TokenId v : content) {
        probe[i] = v;
        column += model.joint(probe);
      }
      probe[i] = ids[i];
      energy -= std::log(model.joint(ids) / column);
    }
    support.push_back(ids);
    log_weights.push_back(-energy / cfg.target_temperature);
    for (std::size_t i = ids.size(); i-- > 0;) {
      if (++cursor[i] < allowed[i].size()) break;
      cursor[i] = 0;
    }
  }
  double peak = kNegInf;
  for (double w : log_weights) peak = std::max(peak, w);
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - peak);
  SequenceDistribution out;
  for (std::size_t n = 0; n < count; ++n) out.emplace(std::move(support[n]), std::exp(log_weights[n] - peak) / total);
  return out;
}

/// Empirical distribution of a set of samples.
inline SequenceDistribution empirical_distribution(const std::map<std::vector<TokenId>, std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (const auto& [seq, n] : counts) total += n;
  SequenceDistribution out;
  if (total == 0) return out;
  for (const auto& [seq, n] : counts) out.emplace(seq, static_cast<double>(n) / static_cast<double>(total));
  return out;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw Error(ErrorCode::kLengthMismatch, "distributions of size " + std::to_string(p.size()) + " and " +
                                                std::to_string(q.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

/// Total variation over the union of both supports.
inline double total_variation(const SequenceDistribution& p, const SequenceDistribution& q) {
  double sum = 0.0;
  for (const auto& [seq, prob] : p) {
    auto it = q.find(seq);
    sum += std::abs(prob - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [seq, prob] : q)
    if (!p.contains(seq)) sum += prob;
  return 0.5 * sum;
}

}  // namespace versechain

#endif  // VERSECHAIN_SAMPLER_HPP
