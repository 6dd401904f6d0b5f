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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "knnasr/binary_io.hpp"
#include "knnasr/decode.hpp"
#include "knnasr/eval.hpp"
#include "knnasr/random.hpp"
#include "knnasr/vocabulary.hpp"

namespace knnasr {

/// Moves `fraction` of every transition row onto one seeded wrong token,
/// simulating a base model trained on a shifted domain.
struct CorruptionSpec {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

struct ToyModelOptions {
  std::size_t order = 2;           // tokens of context in the hidden state
  std::size_t embedding_dim = 16;
  double alpha = 0.01;             // add-alpha smoothing of bigram counts
  CorruptionSpec corruption;
  std::uint64_t seed = 0;          // embedding table
};

/// Deterministic stand-in for a neural decoder. The hidden state is the
/// L2-normalized concatenation of the last `order` token embeddings (left
/// padded with end-of-sequence); p_model is a smoothed bigram row.
class ToyModel final : public ModelAdapter {
 public:
  /// Sentences start after an implicit end-of-sequence token.
  static ToyModel build(Vocabulary vocab, std::span<const std::vector<TokenId>> corpus,
                        const ToyModelOptions& options);

  static ToyModel parse(std::span<const std::uint8_t> bytes, const std::string& context = "toy model");
  static ToyModel read(const std::filesystem::path& path);
  Bytes serialize() const;

  std::size_t vocab_size() const override { return vocab_.size(); }
  std::size_t dim() const override { return order_ * embedding_dim_; }
  StepOutput step(std::span<const TokenId> context) const override;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t order() const noexcept { return order_; }
  std::span<const float> embeddings() const noexcept { return embeddings_; }
  double transition(TokenId prev, TokenId next) const { return transitions_.at(prev * vocab_.size() + next); }

  /// Teacher-forced perplexity of p_model over `corpus`.
  double perplexity(std::span<const std::vector<TokenId>> corpus) const;

 private:
  ToyModel() = default;

  Vocabulary vocab_;
  std::size_t order_ = 0;
  std::size_t embedding_dim_ = 0;
  std::vector<float> embeddings_;     // vocab x embedding_dim
  std::vector<double> transitions_;   // vocab x vocab, row = previous token
};

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

struct GrammarOptions {
  std::size_t vocab_size = 30;     // including end-of-sequence
  double follow_prob = 0.98;       // chance of taking the context's successor
  double end_fraction = 0.12;      // share of contexts whose successor ends the sentence
  std::size_t min_len = 4;
  std::size_t max_len = 16;
  std::uint64_t seed = 0;
};

/// Second-order process: each two-token context has one preferred successor.
/// A bigram model cannot represent it exactly, which leaves room for retrieval.
class SyntheticGrammar {
 public:
  static SyntheticGrammar random(const GrammarOptions& options);

  /// Copy with `fraction` of the contexts given freshly drawn successors.
  SyntheticGrammar with_overrides(double fraction, std::uint64_t seed) const;

  /// Words followed by end-of-sequence. The first two words are uniform.
  std::vector<TokenId> sample(Rng& rng) const;

  TokenId successor(TokenId a, TokenId b) const { return successors_.at(a * options_.vocab_size + b); }
  const GrammarOptions& options() const noexcept { return options_; }

 private:
  TokenId draw_successor(Rng& rng) const;

  GrammarOptions options_;
  std::vector<TokenId> successors_;
};

struct SyntheticUtterance {
  std::string utterance_id;
  std::string speaker_id;
  std::vector<TokenId> tokens;  // ends with end-of-sequence
};

struct SyntheticSpeaker {
  std::string speaker_id;
  bool shifted = false;
  std::string gender;     // "female", "male" or empty
  std::string accent;
  std::string age_group;
};

struct SyntheticCorpusOptions {
  GrammarOptions grammar;
  std::size_t speakers = 10;
  std::size_t shifted_speakers = 1;
  double idiolect_fraction = 0.05;  // per-speaker context overrides
  double shift_fraction = 0.6;      // overrides for shifted speakers
  std::size_t train_tokens = 10000; // across all speakers
  std::size_t dev_per_speaker = 10;
  std::size_t test_per_speaker = 10;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  Vocabulary vocab;
  std::vector<SyntheticSpeaker> speakers;
  std::vector<SyntheticUtterance> train;
  std::vector<SyntheticUtterance> dev;
  std::vector<SyntheticUtterance> test;
  /// Sentences drawn from the shared grammar only, for training the base model.
  std::vector<std::vector<TokenId>> base_text;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusOptions& options);

std::vector<ReferenceUtterance> as_references(std::span<const SyntheticUtterance> utterances);

/// Manifest records (reference text plus the speaker's labels), no hypotheses.
std::vector<UtteranceRecord> as_records(const SyntheticCorpus& corpus, std::span<const SyntheticUtterance> utterances);

}  // namespace knnasr
