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

#include "knnasr/decode.hpp"

#include <json.hpp>

#include "knnasr/error.hpp"

namespace knnasr {

DecodeResult decode_greedy(const ModelAdapter& model, const Datastore* store, const KnnConfig& config,
                           std::span<const TokenId> prompt, std::size_t max_len, TokenId eos) {
  config.validate();
  if (max_len < 1) throw Error(Errc::invalid_argument, "max_len must be >= 1");
  if (store && store->dim() != model.dim()) {
    throw Error(Errc::dim_mismatch, "model dim " + std::to_string(model.dim()) + " != datastore dim " +
                                        std::to_string(store->dim()));
  }
  if (store && store->vocab_size() != model.vocab_size()) {
    throw Error(Errc::dim_mismatch, "model vocab " + std::to_string(model.vocab_size()) +
                                        " != datastore vocab " + std::to_string(store->vocab_size()));
  }

  DecodeResult result;
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  for (std::size_t t = 0; t < max_len; ++t) {
    StepOutput out;
    try {
      out = model.step(context);
    } catch (const std::exception& e) {
      throw Error(Errc::internal, "adapter step " + std::to_string(t) + " failed: " + e.what());
    }

    StepRecord rec;
    const TokenId model_best = out.p_model.argmax();
    rec.model_top1 = {model_best, out.p_model[model_best]};

    TokenDistribution final_dist;
    if (store) {
      Retrieval r = retrieve(*store, out.hidden, config);
      if (!r.p_knn.is_no_neighbors()) {
        const TokenId knn_best = r.p_knn.argmax();
        rec.knn_top1 = TokenProb{knn_best, r.p_knn[knn_best]};
      }
      rec.neighbors = std::move(r.neighbors);
      final_dist = interpolate(r.p_knn, out.p_model, config.lambda);
    } else {
      final_dist = std::move(out.p_model);
    }

    rec.token = final_dist.argmax();
    rec.prob = final_dist[rec.token];
    result.tokens.push_back(rec.token);
    result.steps.push_back(std::move(rec));
    context.push_back(result.tokens.back());
    if (result.tokens.back() == eos) break;
  }
  return result;
}

HiddenStateDump dump_hidden_states(const ModelAdapter& model, std::span<const ReferenceUtterance> corpus) {
  HiddenStateDump dump;
  dump.dim = static_cast<std::uint32_t>(model.dim());
  dump.vocab_size = static_cast<std::uint32_t>(model.vocab_size());
  for (const auto& utt : corpus) {
    DumpBlock block;
    block.utterance_id = utt.utterance_id;
    block.speaker_id = utt.speaker_id;
    block.tokens = utt.tokens;
    block.states.reserve(utt.tokens.size() * model.dim());
    for (std::size_t t = 0; t < utt.tokens.size(); ++t) {
      if (utt.tokens[t] >= model.vocab_size()) {
        throw Error(Errc::out_of_range, "utterance '" + utt.utterance_id + "' position " + std::to_string(t) +
                                            ": token " + std::to_string(utt.tokens[t]) + " outside vocabulary");
      }
      auto out = model.step(std::span(utt.tokens).first(t));
      block.states.insert(block.states.end(), out.hidden.begin(), out.hidden.end());
    }
    dump.add(std::move(block));
  }
  return dump;
}

std::string trace_lines(const std::string& utterance_id, std::span<const TokenId> prompt,
                        const DecodeResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const auto& s = result.steps[i];
    nlohmann::ordered_json line;
    line["utterance_id"] = utterance_id;
    line["step"] = i;
    line["prompt"] = std::vector<TokenId>(prompt.begin(), prompt.end());
    line["token"] = s.token;
    line["prob"] = s.prob;
    line["model_top1"] = {{"token", s.model_top1.token}, {"prob", s.model_top1.prob}};
    if (s.knn_top1) {
      line["knn_top1"] = {{"token", s.knn_top1->token}, {"prob", s.knn_top1->prob}};
    } else {
      line["knn_top1"] = nullptr;
    }
    auto neighbors = nlohmann::ordered_json::array();
    for (const auto& n : s.neighbors) neighbors.push_back({{"id", n.id}, {"distance", n.distance}});
    line["neighbors"] = std::move(neighbors);
    out += line.dump() + "\n";
  }
  return out;
}

}  // namespace knnasr
