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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "knnasr/binary_io.hpp"
#include "knnasr/vector_index.hpp"

namespace knnasr {

using TokenId = std::uint32_t;

// ---------------------------------------------------------------------------
// Hidden-state dumps
//
// File layout (little-endian):
//   "HSDMP1\0" | u32 dim | u32 vocab_size
//   repeated until EOF:
//     utterance_id (u32 len + UTF-8) | speaker_id (u32 len + UTF-8)
//     u32 token count n | n x u32 token ids | n*dim x f32 hidden states (row-major)
//
// Row t holds the decoder state that predicts reference token t
// (teacher-forced over the reference).
// ---------------------------------------------------------------------------

struct DumpBlock {
  std::string utterance_id;
  std::string speaker_id;
  std::vector<TokenId> tokens;
  std::vector<float> states;  // tokens.size() * dim
};

struct HiddenStateDump {
  std::uint32_t dim = 0;
  std::uint32_t vocab_size = 0;
  std::vector<DumpBlock> blocks;

  /// Appends a block after validating row count, token range, and finiteness.
  void add(DumpBlock block);
  std::size_t total_tokens() const noexcept;
};

Bytes serialize_dump(const HiddenStateDump& dump);
/// Strict reader: rejects bad magic, truncation, rows that do not match the
/// token count, out-of-vocabulary ids, and non-finite states.
HiddenStateDump parse_dump(std::span<const std::uint8_t> bytes, const std::string& context = "dump");
HiddenStateDump read_dump(const std::filesystem::path& path);
void write_dump(const std::filesystem::path& path, const HiddenStateDump& dump);

// ---------------------------------------------------------------------------
// Datastore
// ---------------------------------------------------------------------------

enum class Metric : std::uint8_t { squared_l2 = 0 };

struct DatastoreHeader {
  std::uint32_t dim = 0;
  std::uint32_t vocab_size = 0;
  std::uint64_t count = 0;
  Metric metric = Metric::squared_l2;
  std::string provenance;
};

/// Immutable (key, value token, provenance) store with an attached vector index.
///
/// File layout (little-endian):
///   "KNNDS1\0" | u32 dim | u32 vocab_size | u64 count | u8 metric | provenance string
///   key block   count*dim x f32
///   value block count x u32
///   utterance table (u32 n + n strings) | count x u32 utterance index
///   speaker table   (u32 n + n strings) | count x u32 speaker index
///   count x u32 positions
///   embedded serialized index
class Datastore {
 public:
  /// One entry per (utterance, position), in dump order. Every dump must share
  /// dim and vocab size; utterance ids must be unique across dumps.
  static Datastore build(std::span<const HiddenStateDump> dumps, const IndexSpec& index = {},
                         std::string provenance = {});

  static Datastore parse(std::span<const std::uint8_t> bytes, const std::string& context = "datastore");
  static Datastore read(const std::filesystem::path& path);
  Bytes serialize() const;
  void write(const std::filesystem::path& path) const;

  const DatastoreHeader& header() const noexcept { return header_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t dim() const noexcept { return header_.dim; }
  std::size_t vocab_size() const noexcept { return header_.vocab_size; }

  std::span<const float> key(std::size_t i) const { return keys_->row(i); }
  TokenId value(std::size_t i) const { return values_.at(i); }
  const std::string& utterance_id(std::size_t i) const { return utterances_[utterance_index_.at(i)]; }
  const std::string& speaker_id(std::size_t i) const { return speakers_[speaker_index_.at(i)]; }
  std::uint32_t position(std::size_t i) const { return positions_.at(i); }

  const VectorIndex& index() const noexcept { return *index_; }
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                               const SearchOptions& options = {}) const {
    return index_->search(query, k, options);
  }

  /// Distinct speaker ids in first-appearance order.
  const std::vector<std::string>& speakers() const noexcept { return speakers_; }
  std::size_t count_for_speaker(std::string_view speaker) const;

  /// New store holding the given entries (ascending id order), re-indexed.
  Datastore subset(std::span<const std::uint64_t> ids, const IndexSpec& index, std::string provenance) const;

 private:
  Datastore() = default;
  void attach_index(const IndexSpec& spec);

  DatastoreHeader header_;
  std::shared_ptr<const VectorSet> keys_;
  std::vector<TokenId> values_;
  std::vector<std::string> utterances_;
  std::vector<std::uint32_t> utterance_index_;
  std::vector<std::string> speakers_;
  std::vector<std::uint32_t> speaker_index_;
  std::vector<std::uint32_t> positions_;
  std::unique_ptr<VectorIndex> index_;
};

/// Entries of one speaker, original order. Throws not_found for an unknown speaker.
Datastore slice_by_speaker(const Datastore& store, std::string_view speaker, const IndexSpec& index = {});

/// Uniform sample of `size` distinct entries, reproducible from `seed`.
Datastore sample_random(const Datastore& store, std::size_t size, std::uint64_t seed, const IndexSpec& index = {});

/// Sampled entry ids (ascending) as used by sample_random.
std::vector<std::uint64_t> sample_ids(std::size_t population, std::size_t size, std::uint64_t seed);

struct NeighborContext {
  std::uint64_t entry_id = 0;
  std::string utterance_id;
  std::string speaker_id;
  std::uint32_t position = 0;
  TokenId token = 0;
  std::vector<TokenId> left;   // oldest first
  std::vector<TokenId> right;
};

/// The entry's token with up to `window` tokens on each side from the same
/// utterance, cut at utterance boundaries. Context comes from the store's own
/// entries, so a sampled store shows only the tokens it retained.
NeighborContext neighbor_context(const Datastore& store, std::uint64_t entry_id, std::size_t window);

}  // namespace knnasr
