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

#include "knnasr/pipeline.hpp"

#include <algorithm>

#include "knnasr/error.hpp"
#include "knnasr/parallel.hpp"

namespace knnasr {

Transcription transcribe(const ModelAdapter& model, const Vocabulary& vocab, const Datastore* store,
                         const KnnConfig& config, std::span<const UtteranceRecord> records,
                         const PromptPolicy& prompt, std::size_t workers) {
  config.validate();
  if (vocab.size() != model.vocab_size()) {
    throw Error(Errc::dim_mismatch, "vocabulary has " + std::to_string(vocab.size()) + " words, model " +
                                        std::to_string(model.vocab_size()));
  }
  if (store && store->dim() != model.dim()) {
    throw Error(Errc::dim_mismatch, "model dim " + std::to_string(model.dim()) + " != datastore dim " +
                                        std::to_string(store->dim()));
  }
  const std::size_t n = records.size();
  Transcription out;
  out.records.assign(records.begin(), records.end());
  out.prompts.resize(n);
  out.results.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    try {
      auto ref = vocab.encode(records[i].reference);
      ref.resize(std::min(ref.size(), prompt.prompt_words));
      out.prompts[i] = std::move(ref);
    } catch (const Error& e) {
      throw Error(e.code(), "utterance '" + records[i].utterance_id + "': " + e.what());
    }
  }

  if (!model.shareable()) workers = 1;
  parallel_for(n, workers, [&](std::size_t i) {
    const std::size_t ref_len = vocab.encode(records[i].reference).size();
    const std::size_t max_len = ref_len - out.prompts[i].size() + 1 + prompt.slack;
    out.results[i] = decode_greedy(model, store, config, out.prompts[i], max_len);
    std::vector<TokenId> full = out.prompts[i];
    full.insert(full.end(), out.results[i].tokens.begin(), out.results[i].tokens.end());
    out.records[i].hypothesis = vocab.decode(full);
  });
  return out;
}

WerBreakdown decode_and_score(const ModelAdapter& model, const Vocabulary& vocab, const Datastore* store,
                              const KnnConfig& config, std::span<const UtteranceRecord> records,
                              const NormalizationPolicy& policy, const PromptPolicy& prompt, std::size_t workers) {
  const auto t = transcribe(model, vocab, store, config, records, prompt, workers);
  return corpus_wer(t.records, policy);
}

}  // namespace knnasr
