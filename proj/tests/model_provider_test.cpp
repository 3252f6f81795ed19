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

#include "versechain/model_provider.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracle_values.hpp"

namespace vc = versechain;

namespace {

// Independent conditional: normalize the joint column directly.
std::vector<double> brute_conditional(const vc::TabularModel& model, std::vector<vc::TokenId> ids,
                                      std::size_t position) {
  const auto& vocab = *model.vocabulary();
  std::vector<double> row(vocab.size(), 0.0);
  double total = 0.0;
  for (vc::TokenId v = 0; v < vocab.size(); ++v) {
    if (vocab.is_mask(v)) continue;
    ids[position] = v;
    row[v] = model.joint(ids);
    total += row[v];
  }
  for (double& p : row) p /= total;
  return row;
}

TEST(ModelProviderTest, UniformConditionalIsUniform) {
  auto model = fixtures::uniform_model(3, 2);
  for (std::size_t pos = 0; pos < 2; ++pos) {
    auto probs = vc::softmax(vc::masked_logits(*model, vc::TokenSequence(model->vocabulary(), {1, 2}), pos));
    for (double p : probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  }
}

TEST(ModelProviderTest, PairJointConditional) {
  auto vocab = vc::build_vocabulary({"x", "y"});
  auto model = vc::TabularModel::from_weights(vocab, 2, [](std::span<const vc::TokenId> ids) {
    return 1.0 + (ids[0] == ids[1] ? 1.0 : 0.0);
  });
  auto probs = vc::softmax(vc::masked_logits(*model, vc::TokenSequence(vocab, {0, 1}), 1));
  EXPECT_NEAR(probs[0], oracle::kPairConditional[0], 1e-15);
  EXPECT_NEAR(probs[1], oracle::kPairConditional[1], 1e-15);
}

TEST(ModelProviderTest, BadPosition) {
  auto model = fixtures::uniform_model(3, 2);
  try {
    vc::masked_logits(*model, vc::TokenSequence(model->vocabulary(), {0, 0}), 2);
    FAIL();
  } catch (const vc::Error& e) {
    EXPECT_EQ(e.code(), vc::ErrorCode::kBadPosition);
  }
}

TEST(ModelProviderTest, SpikeFixtureMatchesEnumeration) {
  auto model = fixtures::spike_model();
  std::vector<vc::TokenId> peak{0, 1, 2};
  std::vector<vc::TokenId> other{3, 3, 3};
  EXPECT_NEAR(model->joint(peak), oracle::kSpikeJointPeak, 1e-15);
  EXPECT_NEAR(model->joint(other), oracle::kSpikeJointRest, 1e-15);
  auto cond = vc::exact_conditional(*model, vc::TokenSequence(model->vocabulary(), peak), 1);
  for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(cond[v], oracle::kSpikeConditionalMid[v], 1e-15);
}

TEST(ModelProviderTest, UniformEnergy) {
  auto model = fixtures::uniform_model(3, 2);
  for (vc::TokenId a = 0; a < 3; ++a)
    for (vc::TokenId b = 0; b < 3; ++b)
      EXPECT_NEAR(vc::pseudo_loglik_energy(*model, vc::TokenSequence(model->vocabulary(), {a, b})), 2 * std::log(3.0),
                  1e-12);
}

TEST(ModelProviderTest, SpikeEnergiesMatchEnumeration) {
  auto model = fixtures::spike_model();
  auto energy = [&](std::vector<vc::TokenId> ids) {
    return vc::pseudo_loglik_energy(*model, vc::TokenSequence(model->vocabulary(), ids));
  };
  EXPECT_NEAR(energy({0, 1, 2}), oracle::kSpikeEnergy012, 1e-12);
  EXPECT_NEAR(energy({0, 1, 3}), oracle::kSpikeEnergy013, 1e-12);
  EXPECT_NEAR(energy({3, 3, 3}), oracle::kSpikeEnergy333, 1e-12);
  EXPECT_NEAR(energy({1, 1, 2}), oracle::kSpikeEnergy112, 1e-12);
}

class FixedLogits final : public vc::MaskedModelProvider {
 public:
  FixedLogits(vc::VocabularyPtr vocab, vc::LogitVector logits) : vocab_(std::move(vocab)), logits_(std::move(logits)) {}
  const vc::VocabularyPtr& vocabulary() const override { return vocab_; }
  vc::LogitVector logits_at(const vc::TokenSequence&, std::size_t) const override { return logits_; }

 private:
  vc::VocabularyPtr vocab_;
  vc::LogitVector logits_;
};

TEST(ModelProviderTest, ZeroConditionalIsInfiniteEnergy) {
  auto vocab = vc::build_vocabulary({"a", "b"});
  FixedLogits provider(vocab, {0.0, vc::kNegInf});
  try {
    vc::pseudo_loglik_energy(provider, vc::TokenSequence(vocab, {0, 1}));
    FAIL();
  } catch (const vc::Error& e) {
    EXPECT_EQ(e.code(), vc::ErrorCode::kInfiniteEnergy);
  }
  EXPECT_NEAR(vc::pseudo_loglik_energy(provider, vc::TokenSequence(vocab, {0, 0})), 0.0, 1e-15);
}

TEST(ModelProviderTest, ProviderMustReturnFullFiniteVector) {
  auto vocab = vc::build_vocabulary({"a", "b"});
  FixedLogits short_vector(vocab, {0.0});
  FixedLogits all_masked(vocab, {vc::kNegInf, vc::kNegInf});
  vc::TokenSequence seq(vocab, {0});
  for (const vc::MaskedModelProvider* p : {static_cast<const vc::MaskedModelProvider*>(&short_vector),
                                          static_cast<const vc::MaskedModelProvider*>(&all_masked)}) {
    try {
      vc::masked_logits(*p, seq, 0);
      FAIL();
    } catch (const vc::Error& e) {
      EXPECT_EQ(e.code(), vc::ErrorCode::kProviderFailure);
    }
  }
}

TEST(ModelProviderTest, SoftmaxMatchesExactConditionalExhaustively) {
  for (std::size_t v = 2; v <= 5; ++v) {
    for (std::size_t l = 1; l <= 3; ++l) {
      std::vector<std::string> surfaces;
      for (std::size_t i = 0; i < v; ++i) surfaces.push_back("t" + std::to_string(i));
      auto model = fixtures::random_model(vc::build_vocabulary(surfaces), l, 100 * v + l);
      for (std::size_t k = 0; k < model->table_size(); ++k) {
        const auto ids = model->decode(k);
        vc::TokenSequence seq(model->vocabulary(), ids);
        for (std::size_t pos = 0; pos < l; ++pos) {
          auto probs = vc::softmax(vc::masked_logits(*model, seq, pos));
          auto exact = brute_conditional(*model, ids, pos);
          for (std::size_t t = 0; t < v; ++t) ASSERT_NEAR(probs[t], exact[t], 1e-12);
        }
      }
    }
  }
}

TEST(ModelProviderTest, EnergyInvariantUnderLogitShift) {
  auto model = fixtures::random_model(fixtures::toy_vocab(), 3, 3);
  class Shifted final : public vc::MaskedModelProvider {
   public:
    explicit Shifted(std::shared_ptr<vc::TabularModel> inner) : inner_(std::move(inner)) {}
    const vc::VocabularyPtr& vocabulary() const override { return inner_->vocabulary(); }
    vc::LogitVector logits_at(const vc::TokenSequence& s, std::size_t p) const override {
      auto logits = inner_->logits_at(s, p);
      for (double& x : logits) x += 17.25 + static_cast<double>(p);
      return logits;
    }

   private:
    std::shared_ptr<vc::TabularModel> inner_;
  } shifted(model);
  for (std::size_t k = 0; k < model->table_size(); ++k) {
    vc::TokenSequence seq(model->vocabulary(), model->decode(k));
    EXPECT_NEAR(vc::pseudo_loglik_energy(*model, seq), vc::pseudo_loglik_energy(shifted, seq), 1e-12);
  }
}

TEST(ModelProviderTest, ExchangeableJointGivesSwapInvariantEnergy) {
  // weight depends only on the multiset of tokens
  auto model = vc::TabularModel::from_weights(fixtures::toy_vocab(), 3, [](std::span<const vc::TokenId> ids) {
    double w = 1.0;
    for (vc::TokenId id : ids) w *= 1.0 + 0.7 * id;
    return w + (ids[0] == ids[1] && ids[1] == ids[2] ? 2.0 : 0.0);
  });
  for (std::size_t k = 0; k < model->table_size(); ++k) {
    auto ids = model->decode(k);
    auto swapped = ids;
    std::swap(swapped[0], swapped[2]);
    EXPECT_NEAR(vc::pseudo_loglik_energy(*model, vc::TokenSequence(model->vocabulary(), ids)),
                vc::pseudo_loglik_energy(*model, vc::TokenSequence(model->vocabulary(), swapped)), 1e-12);
  }
}

TEST(ModelProviderTest, MaskedContextIsMarginalized) {
  auto vocab = vc::build_vocabulary({"a", "b", "<mask>"}, "<mask>");
  auto model = vc::TabularModel::from_weights(vocab, 2, [](std::span<const vc::TokenId> ids) {
    return 1.0 + 3.0 * (ids[0] == 0) + (ids[1] == 1);
  });
  // p(x0) marginal: sum over x1 of the joint
  auto cond = model->conditional(vc::TokenSequence(vocab, {2, 2}), 0);
  const double a = model->joint(std::vector<vc::TokenId>{0, 0}) + model->joint(std::vector<vc::TokenId>{0, 1});
  EXPECT_NEAR(cond[0], a, 1e-15);
  EXPECT_NEAR(cond[1], 1.0 - a, 1e-15);
  EXPECT_EQ(cond[2], 0.0);
  EXPECT_EQ(model->logits_at(vc::TokenSequence(vocab, {2, 2}), 0)[2], vc::kNegInf);
}

TEST(ModelProviderTest, TabularInvariants) {
  auto vocab = fixtures::toy_vocab();
  EXPECT_THROW(vc::TabularModel(vocab, 1, {0.5, 0.5, 0.0, 0.0}), vc::Error);
  EXPECT_THROW(vc::TabularModel(vocab, 1, {0.25, 0.25, 0.25, 0.2}), vc::Error);
  EXPECT_THROW(vc::TabularModel(vocab, 1, {0.5, 0.5}), vc::Error);
  EXPECT_NO_THROW(vc::TabularModel(vocab, 1, {0.25, 0.25, 0.25, 0.25}));
}

TEST(ModelProviderTest, TabularFileRoundTrip) {
  auto model = fixtures::spike_model();
  auto reparsed = vc::parse_tabular_model(vc::render_tabular_model(*model), model->vocabulary());
  for (std::size_t k = 0; k < model->table_size(); ++k) EXPECT_EQ(model->joint_at(k), reparsed->joint_at(k));

  auto from_file = vc::parse_tabular_model(fixtures::read_data("spike.tabular"), fixtures::toy_vocab());
  for (std::size_t k = 0; k < model->table_size(); ++k) EXPECT_NEAR(model->joint_at(k), from_file->joint_at(k), 1e-15);
}

TEST(ModelProviderTest, TabularFileErrors) {
  auto vocab = vc::build_vocabulary({"a", "b"});
  EXPECT_THROW(vc::parse_tabular_model("0 0.5\n1 0.5\n", vocab), vc::Error);
  EXPECT_THROW(vc::parse_tabular_model("TABULAR 1\n0 0.5\n", vocab), vc::Error);
  EXPECT_THROW(vc::parse_tabular_model("TABULAR 1\n0 0.5\n0 0.5\n", vocab), vc::Error);
  EXPECT_THROW(vc::parse_tabular_model("TABULAR 1\n0 0.5\n7 0.5\n", vocab), vc::Error);
  EXPECT_THROW(vc::parse_tabular_model("TABULAR 1\n0 half\n1 0.5\n", vocab), vc::Error);
  EXPECT_NO_THROW(vc::parse_tabular_model("TABULAR 1\n0 0.5\n1 0.5\n", vocab));
}

}  // namespace
