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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnasr/datastore.hpp"
#include "knnasr/knn_interp.hpp"
#include "knnasr/vocabulary.hpp"

namespace knnasr {

struct StepOutput {
  std::vector<float> hidden;     // query vector, adapter dim
  TokenDistribution p_model;
};

/// Base-model contract for the decoder. step() must be deterministic for a
/// fixed context.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t dim() const = 0;
  /// State after consuming `context`, and the next-token distribution.
  virtual StepOutput step(std::span<const TokenId> context) const = 0;
  /// Whether one instance may serve several decode workers at once.
  virtual bool shareable() const { return true; }
};

struct TokenProb {
  TokenId token = 0;
  double prob = 0.0;
};

struct StepRecord {
  TokenId token = 0;
  double prob = 0.0;  // final probability of the chosen token
  TokenProb model_top1;
  std::optional<TokenProb> knn_top1;  // absent without retrieval
  std::vector<Neighbor> neighbors;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // generated tokens, end-of-sequence included when emitted
  std::vector<StepRecord> steps;
};

/// Greedy decoding, optionally retrieval-augmented. At every step the adapter
/// is queried; with a store present its k nearest keys are turned into p_knn
/// and mixed with p_model. Argmax ties go to the lowest token id. Stops after
/// emitting `eos` or after max_len tokens.
DecodeResult decode_greedy(const ModelAdapter& model, const Datastore* store, const KnnConfig& config,
                           std::span<const TokenId> prompt, std::size_t max_len,
                           TokenId eos = kEndOfSequence);

struct ReferenceUtterance {
  std::string utterance_id;
  std::string speaker_id;
  std::vector<TokenId> tokens;
};

/// Teacher-forced dump: row t is the adapter state after tokens[0, t),
/// paired with tokens[t].
HiddenStateDump dump_hidden_states(const ModelAdapter& model, std::span<const ReferenceUtterance> corpus);

/// One JSON object per step, newline-terminated.
std::string trace_lines(const std::string& utterance_id, std::span<const TokenId> prompt,
                        const DecodeResult& result);

}  // namespace knnasr
