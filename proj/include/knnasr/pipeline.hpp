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
#include <span>
#include <vector>

#include "knnasr/decode.hpp"
#include "knnasr/eval.hpp"

namespace knnasr {

/// How a reference-conditioned decode is set up for one utterance. The first
/// `prompt_words` reference words are given to the decoder; generation is
/// capped at the remaining reference length plus end-of-sequence plus `slack`.
struct PromptPolicy {
  std::size_t prompt_words = 2;
  std::size_t slack = 4;
};

struct Transcription {
  std::vector<UtteranceRecord> records;   // input records with hypothesis filled
  std::vector<std::vector<TokenId>> prompts;
  std::vector<DecodeResult> results;
};

/// Decodes every record (in input order) against `store` (may be null).
/// Worker count never changes the output.
Transcription transcribe(const ModelAdapter& model, const Vocabulary& vocab, const Datastore* store,
                         const KnnConfig& config, std::span<const UtteranceRecord> records,
                         const PromptPolicy& prompt = {}, std::size_t workers = 1);

/// Pooled WER of transcribe() output.
WerBreakdown decode_and_score(const ModelAdapter& model, const Vocabulary& vocab, const Datastore* store,
                              const KnnConfig& config, std::span<const UtteranceRecord> records,
                              const NormalizationPolicy& policy, const PromptPolicy& prompt = {},
                              std::size_t workers = 1);

}  // namespace knnasr
