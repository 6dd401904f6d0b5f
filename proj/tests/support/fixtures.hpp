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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "knnasr/datastore.hpp"
#include "knnasr/random.hpp"
#include "knnasr/vector_index.hpp"

namespace fixtures {

inline std::vector<float> uniform_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  knnasr::Rng rng(seed);
  std::vector<float> v(n * dim);
  for (auto& x : v) x = static_cast<float>(2.0 * knnasr::uniform01(rng) - 1.0);
  return v;
}

/// `clusters` tight blobs around well separated centers.
inline std::vector<float> blobs(std::size_t clusters, std::size_t per, std::size_t dim, std::uint64_t seed) {
  knnasr::Rng rng(seed);
  std::vector<float> v;
  for (std::size_t c = 0; c < clusters; ++c) {
    std::vector<float> center(dim);
    for (auto& x : center) x = static_cast<float>(20.0 * knnasr::uniform01(rng) - 10.0);
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        v.push_back(center[d] + static_cast<float>(0.1 * (knnasr::uniform01(rng) - 0.5)));
      }
    }
  }
  return v;
}

inline std::shared_ptr<const knnasr::VectorSet> vector_set(std::size_t dim, std::vector<float> data) {
  return std::make_shared<const knnasr::VectorSet>(dim, std::move(data));
}

/// Dump with `utterances` blocks per speaker, random states and tokens.
inline knnasr::HiddenStateDump random_dump(const std::vector<std::string>& speakers, std::size_t utterances,
                                           std::size_t len, std::uint32_t dim, std::uint32_t vocab,
                                           std::uint64_t seed, const std::string& tag = "u") {
  knnasr::Rng rng(seed);
  knnasr::HiddenStateDump dump;
  dump.dim = dim;
  dump.vocab_size = vocab;
  for (const auto& spk : speakers) {
    for (std::size_t u = 0; u < utterances; ++u) {
      knnasr::DumpBlock b;
      b.utterance_id = spk + "-" + tag + std::to_string(u);
      b.speaker_id = spk;
      for (std::size_t t = 0; t < len; ++t) {
        b.tokens.push_back(static_cast<knnasr::TokenId>(knnasr::uniform_index(rng, vocab)));
      }
      b.states = uniform_cloud(len, dim, knnasr::derive_seed(seed, dump.blocks.size() + 1));
      dump.add(std::move(b));
    }
  }
  return dump;
}

}  // namespace fixtures
