// Copyright 2026 The knnasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "knnasr/decode.hpp"
#include "knnasr/error.hpp"
#include "knnasr/pipeline.hpp"
#include "knnasr/toy_model.hpp"

using namespace knnasr;

namespace {

// Hidden state is a one-hot of the last token; p_model is a fixed table.
class TableAdapter : public ModelAdapter {
 public:
  explicit TableAdapter(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}
  std::size_t vocab_size() const override { return rows_.size(); }
  std::size_t dim() const override { return rows_.size(); }
  StepOutput step(std::span<const TokenId> context) const override {
    const TokenId last = context.empty() ? kEndOfSequence : context.back();
    StepOutput out;
    out.hidden.assign(dim(), 0.0f);
    out.hidden[last] = 1.0f;
    out.p_model = TokenDistribution(rows_.at(last));
    return out;
  }

 private:
  std::vector<std::vector<double>> rows_;
};

class ThrowingAdapter : public TableAdapter {
 public:
  using TableAdapter::TableAdapter;
  StepOutput step(std::span<const TokenId> context) const override {
    if (context.size() >= 2) throw std::runtime_error("boom");
    return TableAdapter::step(context);
  }
};

// 0 -> 1 -> 2 -> 3 -> 0 is the model's preference.
TableAdapter chain() {
  return TableAdapter({{0.1, 0.7, 0.1, 0.1}, {0.1, 0.1, 0.7, 0.1}, {0.1, 0.1, 0.1, 0.7}, {0.7, 0.1, 0.1, 0.1}});
}

Datastore store_from(const ModelAdapter& m, std::vector<ReferenceUtterance> refs) {
  return Datastore::build(std::vector<HiddenStateDump>{dump_hidden_states(m, refs)});
}

struct ToyFixture {
  SyntheticCorpus corpus;
  ToyModel model;
  static ToyFixture make(double corruption) {
    SyntheticCorpusOptions o;
    o.speakers = 2;
    o.shifted_speakers = 0;
    o.train_tokens = 2000;
    o.dev_per_speaker = 5;
    o.test_per_speaker = 5;
    o.seed = 4;
    auto c = generate_synthetic_corpus(o);
    ToyModelOptions mo;
    mo.corruption = {corruption, 1};
    mo.seed = 2;
    auto m = ToyModel::build(c.vocab, c.base_text, mo);
    return {std::move(c), std::move(m)};
  }
};

}  // namespace

TEST(DecodeGreedy, FollowsModelWithoutStore) {
  const auto m = chain();
  const std::vector<TokenId> prompt{1};
  const auto r = decode_greedy(m, nullptr, {}, prompt, 10);
  EXPECT_EQ(r.tokens, (std::vector<TokenId>{2, 3, 0}));
  ASSERT_EQ(r.steps.size(), 3u);
  EXPECT_FALSE(r.steps[0].knn_top1.has_value());
  EXPECT_TRUE(r.steps[0].neighbors.empty());
  EXPECT_DOUBLE_EQ(r.steps[0].prob, 0.7);
}

TEST(DecodeGreedy, MaxLenCapsOutput) {
  const auto m = chain();
  const std::vector<TokenId> prompt{1};
  EXPECT_EQ(decode_greedy(m, nullptr, {}, prompt, 2).tokens, (std::vector<TokenId>{2, 3}));
  EXPECT_THROW(decode_greedy(m, nullptr, {}, prompt, 0), Error);
}

TEST(DecodeGreedy, ArgmaxTieGoesToLowestId) {
  const TableAdapter m({{0.1, 0.3, 0.3, 0.3}, {1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}});
  EXPECT_EQ(decode_greedy(m, nullptr, {}, {}, 5).tokens, (std::vector<TokenId>{1, 0}));
}

TEST(DecodeGreedy, LambdaZeroMatchesVanilla) {
  const auto m = chain();
  const auto store = store_from(m, {{"u", "s", {3, 3, 2, 2, 1, 0}}});
  for (TokenId start = 0; start < 4; ++start) {
    const std::vector<TokenId> prompt{start};
    const auto vanilla = decode_greedy(m, nullptr, {}, prompt, 8);
    const auto zero = decode_greedy(m, &store, KnnConfig{4, 1.0, 0.0, 8}, prompt, 8);
    EXPECT_EQ(vanilla.tokens, zero.tokens);
    for (std::size_t i = 0; i < zero.steps.size(); ++i) EXPECT_EQ(zero.steps[i].prob, vanilla.steps[i].prob);
    EXPECT_FALSE(zero.steps[0].neighbors.empty());
  }
}

TEST(DecodeGreedy, IndicatorCollapseWithSingleNeighbor) {
  // After token 1 the store says 3, the model says 2. With k=1 and lambda=1
  // the retrieved token wins outright.
  const auto m = chain();
  const auto store = store_from(m, {{"u", "s", {1, 3}}});
  const std::vector<TokenId> prompt{1};
  const auto r = decode_greedy(m, &store, KnnConfig{1, 1.0, 1.0, 8}, prompt, 1);
  ASSERT_EQ(r.tokens.size(), 1u);
  EXPECT_EQ(r.tokens[0], 3u);
  EXPECT_EQ(r.steps[0].prob, 1.0);
  EXPECT_EQ(r.steps[0].model_top1.token, 2u);
  ASSERT_TRUE(r.steps[0].knn_top1);
  EXPECT_EQ(r.steps[0].knn_top1->token, 3u);
  EXPECT_EQ(r.steps[0].neighbors[0].distance, 0.0);
}

TEST(DecodeGreedy, MixedDistributionIsInterpolation) {
  const auto m = chain();
  const auto store = store_from(m, {{"u", "s", {1, 3}}});
  const std::vector<TokenId> prompt{1};
  // p(3) = 0.4 * 1 + 0.6 * 0.1 = 0.46 vs p(2) = 0.6 * 0.7 = 0.42.
  const auto r = decode_greedy(m, &store, KnnConfig{1, 1.0, 0.4, 8}, prompt, 1);
  EXPECT_EQ(r.tokens[0], 3u);
  EXPECT_NEAR(r.steps[0].prob, 0.46, 1e-15);
  const auto r2 = decode_greedy(m, &store, KnnConfig{1, 1.0, 0.3, 8}, prompt, 1);
  EXPECT_EQ(r2.tokens[0], 2u);
}

TEST(DecodeGreedy, ChecksStoreShapeAndWrapsAdapterErrors) {
  const auto m = chain();
  const TableAdapter small({{0.5, 0.5}, {0.5, 0.5}});
  const auto store = store_from(small, {{"u", "s", {1, 0}}});
  EXPECT_THROW(decode_greedy(m, &store, {}, {}, 3), Error);
  const ThrowingAdapter bad({{0.0, 1.0}, {0.0, 1.0}});
  try {
    decode_greedy(bad, nullptr, {}, {}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::internal);
    EXPECT_NE(std::string(e.what()).find("adapter step 2"), std::string::npos) << e.what();
  }
}

TEST(DumpHiddenStates, RowsAreTeacherForcedStates) {
  const auto fx = ToyFixture::make(0.0);
  const auto refs = as_references(std::span(fx.corpus.train).first(3));
  const auto dump = dump_hidden_states(fx.model, refs);
  ASSERT_EQ(dump.blocks.size(), 3u);
  for (std::size_t b = 0; b < 3; ++b) {
    const auto& tokens = refs[b].tokens;
    ASSERT_EQ(dump.blocks[b].states.size(), tokens.size() * fx.model.dim());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const auto want = fx.model.step(std::span(tokens).first(t)).hidden;
      for (std::size_t d = 0; d < want.size(); ++d) EXPECT_EQ(dump.blocks[b].states[t * want.size() + d], want[d]);
    }
  }
}

TEST(DecodeGreedy, SelfRetrievalReproducesStoredUtterance) {
  // Tokens chosen so every two-token context is distinct.
  const auto fx = ToyFixture::make(0.5);
  const ReferenceUtterance utt{"u", "s", {3, 7, 1, 9, 4, 12, 5, kEndOfSequence}};
  const auto store = store_from(fx.model, {utt});
  const std::vector<TokenId> prompt{3, 7};
  const auto r = decode_greedy(fx.model, &store, KnnConfig{1, 1.0, 1.0, 8}, prompt, 20);
  EXPECT_EQ(r.tokens, std::vector<TokenId>(utt.tokens.begin() + 2, utt.tokens.end()));
  for (const auto& s : r.steps) EXPECT_EQ(s.neighbors.at(0).distance, 0.0);
}

TEST(TraceLines, OneParsableLinePerStep) {
  const auto m = chain();
  const auto store = store_from(m, {{"u", "s", {1, 3}}});
  const std::vector<TokenId> prompt{1};
  const auto r = decode_greedy(m, &store, KnnConfig{2, 1.0, 0.4, 8}, prompt, 6);
  std::istringstream in(trace_lines("utt-1", prompt, r));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["utterance_id"], "utt-1");
    EXPECT_EQ(j["step"], n);
    EXPECT_EQ(j["token"], r.tokens[n]);
    EXPECT_EQ(j["neighbors"].size(), 2u);
    ++n;
  }
  EXPECT_EQ(n, r.tokens.size());
}

TEST(ToyModel, RowsAreDistributionsAndStatesUnitNorm) {
  const auto fx = ToyFixture::make(0.3);
  const auto v = fx.model.vocab_size();
  for (TokenId r = 0; r < v; ++r) {
    double sum = 0.0;
    for (TokenId c = 0; c < v; ++c) sum += fx.model.transition(r, c);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  const std::vector<TokenId> ctx{4, 9, 2};
  const auto out = fx.model.step(ctx);
  double norm = 0.0;
  for (float x : out.hidden) norm += static_cast<double>(x) * x;
  EXPECT_NEAR(norm, 1.0, 1e-6);
  EXPECT_EQ(out.hidden.size(), 32u);
}

TEST(ToyModel, CorruptionRaisesPerplexity) {
  const auto clean = ToyFixture::make(0.0);
  const auto bad = ToyFixture::make(0.5);
  const auto ppl_clean = clean.model.perplexity(clean.corpus.base_text);
  EXPECT_LT(ppl_clean, static_cast<double>(clean.model.vocab_size()));
  EXPECT_GT(bad.model.perplexity(bad.corpus.base_text), ppl_clean);
}

TEST(ToyModel, SerializeRoundTrip) {
  const auto fx = ToyFixture::make(0.2);
  const auto bytes = fx.model.serialize();
  const auto back = ToyModel::parse(bytes);
  EXPECT_EQ(back.serialize(), bytes);
  Bytes bad = bytes;
  bad[0] = 'x';
  EXPECT_THROW(ToyModel::parse(bad), Error);
  EXPECT_THROW(ToyModel::parse(Bytes(bytes.begin(), bytes.end() - 8)), Error);
}

TEST(SyntheticCorpus, DeterministicAndWellFormed) {
  SyntheticCorpusOptions o;
  o.seed = 5;
  const auto a = generate_synthetic_corpus(o);
  const auto b = generate_synthetic_corpus(o);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].tokens, b.train[i].tokens);
  EXPECT_EQ(a.speakers.size(), 10u);
  EXPECT_TRUE(a.speakers.back().shifted);
  EXPECT_FALSE(a.speakers.front().shifted);
  EXPECT_EQ(a.dev.size(), 100u);
  for (const auto& u : a.test) {
    EXPECT_EQ(u.tokens.back(), kEndOfSequence);
    EXPECT_GE(u.tokens.size(), 5u);
  }
}

TEST(Transcribe, WorkerCountDoesNotChangeOutput) {
  const auto fx = ToyFixture::make(0.3);
  const auto store = store_from(fx.model, as_references(fx.corpus.train));
  const auto recs = as_records(fx.corpus, fx.corpus.test);
  const KnnConfig cfg{4, 1.0, 0.5, 8};
  const auto one = transcribe(fx.model, fx.model.vocabulary(), &store, cfg, recs, {}, 1);
  const auto four = transcribe(fx.model, fx.model.vocabulary(), &store, cfg, recs, {}, 4);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(one.records[i].hypothesis, four.records[i].hypothesis);
    // The hypothesis starts with the prompt words.
    const auto ref = fx.model.vocabulary().encode(recs[i].reference);
    EXPECT_EQ(one.prompts[i], std::vector<TokenId>(ref.begin(), ref.begin() + 2));
    EXPECT_EQ(one.records[i].hypothesis->rfind(fx.model.vocabulary().decode(one.prompts[i]), 0), 0u);
  }
}

TEST(Transcribe, UnknownWordNamesUtterance) {
  const auto fx = ToyFixture::make(0.0);
  UtteranceRecord r;
  r.utterance_id = "odd-one";
  r.reference = "w1 banana";
  try {
    transcribe(fx.model, fx.model.vocabulary(), nullptr, {}, std::vector<UtteranceRecord>{r});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("odd-one"), std::string::npos);
  }
}
