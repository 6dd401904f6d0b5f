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

#include "knnasr/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "knnasr/error.hpp"
#include "knnasr/random.hpp"

namespace knnasr {

namespace {

constexpr std::string_view kDumpMagic{"HSDMP1\0", 7};
constexpr std::string_view kStoreMagic{"KNNDS1\0", 7};

// Interns strings in first-appearance order.
class StringTable {
 public:
  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<std::uint32_t>(strings_.size()));
    if (inserted) strings_.push_back(s);
    return it->second;
  }
  std::vector<std::string> take() && { return std::move(strings_); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> strings_;
};

void check_block(const DumpBlock& block, std::uint32_t dim, std::uint32_t vocab_size) {
  if (block.states.size() != block.tokens.size() * dim) {
    throw Error(Errc::count_mismatch, "utterance '" + block.utterance_id + "': " +
                                          std::to_string(block.states.size()) + " state floats for " +
                                          std::to_string(block.tokens.size()) + " tokens at dim " +
                                          std::to_string(dim));
  }
  for (std::size_t t = 0; t < block.tokens.size(); ++t) {
    if (block.tokens[t] >= vocab_size) {
      throw Error(Errc::out_of_range, "utterance '" + block.utterance_id + "' position " + std::to_string(t) +
                                          ": token " + std::to_string(block.tokens[t]) + " >= vocab size " +
                                          std::to_string(vocab_size));
    }
  }
  for (std::size_t i = 0; i < block.states.size(); ++i) {
    if (!std::isfinite(block.states[i])) {
      throw Error(Errc::non_finite, "utterance '" + block.utterance_id + "' row " + std::to_string(i / dim) +
                                        " is not finite");
    }
  }
}

std::vector<std::string> read_string_table(ByteReader& in) {
  const auto n = in.u32();
  // Each string costs at least its 4-byte length prefix.
  if (n > in.remaining() / 4) throw Error(Errc::truncated, in.where("string table"));
  std::vector<std::string> out(n);
  for (auto& s : out) s = in.string();
  return out;
}

void write_string_table(ByteWriter& out, const std::vector<std::string>& table) {
  out.put_u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& s : table) out.put_string(s);
}

}  // namespace

// --- dumps ------------------------------------------------------------------

void HiddenStateDump::add(DumpBlock block) {
  if (dim == 0) throw Error(Errc::invalid_argument, "dump dim must be positive");
  check_block(block, dim, vocab_size);
  blocks.push_back(std::move(block));
}

std::size_t HiddenStateDump::total_tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.tokens.size();
  return n;
}

Bytes serialize_dump(const HiddenStateDump& dump) {
  ByteWriter out;
  out.put_magic(kDumpMagic);
  out.put_u32(dump.dim);
  out.put_u32(dump.vocab_size);
  for (const auto& b : dump.blocks) {
    out.put_string(b.utterance_id);
    out.put_string(b.speaker_id);
    out.put_u32(static_cast<std::uint32_t>(b.tokens.size()));
    out.put_u32s(b.tokens);
    out.put_f32s(b.states);
  }
  return std::move(out).take();
}

HiddenStateDump parse_dump(std::span<const std::uint8_t> bytes, const std::string& context) {
  ByteReader in(bytes, context);
  in.expect_magic(kDumpMagic);
  HiddenStateDump dump;
  dump.dim = in.u32();
  dump.vocab_size = in.u32();
  if (dump.dim == 0) throw Error(Errc::invalid_value, in.where("dim 0"));
  if (dump.vocab_size == 0) throw Error(Errc::invalid_value, in.where("vocab size 0"));
  while (!in.at_end()) {
    DumpBlock b;
    b.utterance_id = in.string();
    b.speaker_id = in.string();
    const auto n = in.u32();
    b.tokens = in.u32s(n);
    if (static_cast<std::uint64_t>(n) * dump.dim > in.remaining() / 4) {
      throw Error(Errc::truncated, in.where("hidden states of utterance '" + b.utterance_id + "'"));
    }
    b.states = in.f32s(static_cast<std::size_t>(n) * dump.dim);
    try {
      check_block(b, dump.dim, dump.vocab_size);
    } catch (const Error& e) {
      throw Error(Errc::invalid_value, in.where(e.what()));
    }
    dump.blocks.push_back(std::move(b));
  }
  return dump;
}

HiddenStateDump read_dump(const std::filesystem::path& path) {
  return parse_dump(read_file(path), path.string());
}

void write_dump(const std::filesystem::path& path, const HiddenStateDump& dump) {
  write_file_atomic(path, serialize_dump(dump));
}

// --- datastore --------------------------------------------------------------

Datastore Datastore::build(std::span<const HiddenStateDump> dumps, const IndexSpec& index, std::string provenance) {
  if (dumps.empty()) throw Error(Errc::invalid_argument, "no dumps to build from");
  const auto dim = dumps.front().dim;
  const auto vocab = dumps.front().vocab_size;
  if (dim == 0) throw Error(Errc::invalid_argument, "dump 0 has dim 0");
  for (std::size_t d = 1; d < dumps.size(); ++d) {
    if (dumps[d].dim != dim) {
      throw Error(Errc::dim_mismatch, "dump " + std::to_string(d) + " has dim " + std::to_string(dumps[d].dim) +
                                          ", dump 0 has dim " + std::to_string(dim));
    }
    if (dumps[d].vocab_size != vocab) {
      throw Error(Errc::dim_mismatch, "dump " + std::to_string(d) + " has vocab size " +
                                          std::to_string(dumps[d].vocab_size) + ", dump 0 has " +
                                          std::to_string(vocab));
    }
  }

  Datastore store;
  StringTable utterances;
  StringTable speakers;
  std::unordered_set<std::string> seen_utterances;
  std::vector<float> keys;
  for (std::size_t d = 0; d < dumps.size(); ++d) {
    for (const auto& block : dumps[d].blocks) {
      try {
        check_block(block, dim, vocab);
      } catch (const Error& e) {
        throw Error(e.code(), "dump " + std::to_string(d) + ": " + e.what());
      }
      if (!seen_utterances.insert(block.utterance_id).second) {
        throw Error(Errc::invalid_argument, "dump " + std::to_string(d) + ": duplicate utterance id '" +
                                                block.utterance_id + "'");
      }
      if (block.tokens.empty()) continue;
      const auto u = utterances.intern(block.utterance_id);
      const auto s = speakers.intern(block.speaker_id);
      for (std::size_t t = 0; t < block.tokens.size(); ++t) {
        store.values_.push_back(block.tokens[t]);
        store.utterance_index_.push_back(u);
        store.speaker_index_.push_back(s);
        store.positions_.push_back(static_cast<std::uint32_t>(t));
      }
      keys.insert(keys.end(), block.states.begin(), block.states.end());
    }
  }
  store.utterances_ = std::move(utterances).take();
  store.speakers_ = std::move(speakers).take();
  store.keys_ = std::make_shared<const VectorSet>(dim, std::move(keys));
  store.header_ = {dim, vocab, store.values_.size(), Metric::squared_l2, std::move(provenance)};
  store.attach_index(index);
  return store;
}

void Datastore::attach_index(const IndexSpec& spec) { index_ = build_index(keys_, spec); }

Bytes Datastore::serialize() const {
  ByteWriter out;
  out.put_magic(kStoreMagic);
  out.put_u32(header_.dim);
  out.put_u32(header_.vocab_size);
  out.put_u64(header_.count);
  out.put_u8(static_cast<std::uint8_t>(header_.metric));
  out.put_string(header_.provenance);
  out.put_f32s(keys_->data());
  out.put_u32s(values_);
  write_string_table(out, utterances_);
  out.put_u32s(utterance_index_);
  write_string_table(out, speakers_);
  out.put_u32s(speaker_index_);
  out.put_u32s(positions_);
  index_->write(out);
  return std::move(out).take();
}

void Datastore::write(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Datastore Datastore::read(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

Datastore Datastore::parse(std::span<const std::uint8_t> bytes, const std::string& context) {
  ByteReader in(bytes, context);
  in.expect_magic(kStoreMagic);
  Datastore store;
  auto& h = store.header_;
  h.dim = in.u32();
  h.vocab_size = in.u32();
  h.count = in.u64();
  const auto metric = in.u8();
  if (h.dim == 0) throw Error(Errc::invalid_value, in.where("dim 0"));
  if (h.vocab_size == 0) throw Error(Errc::invalid_value, in.where("vocab size 0"));
  if (metric != static_cast<std::uint8_t>(Metric::squared_l2)) {
    throw Error(Errc::invalid_value, in.where("unknown metric tag " + std::to_string(metric)));
  }
  h.metric = Metric::squared_l2;
  h.provenance = in.string();

  if (h.count > in.remaining() / (4ULL * h.dim)) {
    throw Error(Errc::truncated, in.where("key block for " + std::to_string(h.count) + " entries"));
  }
  const auto count = static_cast<std::size_t>(h.count);
  try {
    store.keys_ = std::make_shared<const VectorSet>(h.dim, in.f32s(count * h.dim));
  } catch (const Error& e) {
    if (e.is_format_error()) throw;
    throw Error(Errc::invalid_value, in.where(std::string("keys: ") + e.what()));
  }
  store.values_ = in.u32s(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (store.values_[i] >= h.vocab_size) {
      throw Error(Errc::invalid_value, in.where("entry " + std::to_string(i) + " token " +
                                                std::to_string(store.values_[i]) + " >= vocab size"));
    }
  }
  store.utterances_ = read_string_table(in);
  store.utterance_index_ = in.u32s(count);
  store.speakers_ = read_string_table(in);
  store.speaker_index_ = in.u32s(count);
  store.positions_ = in.u32s(count);

  std::set<std::pair<std::uint32_t, std::uint32_t>> keys_seen;
  for (std::size_t i = 0; i < count; ++i) {
    if (store.utterance_index_[i] >= store.utterances_.size() || store.speaker_index_[i] >= store.speakers_.size()) {
      throw Error(Errc::invalid_value, in.where("entry " + std::to_string(i) + " references a missing string"));
    }
    if (!keys_seen.emplace(store.utterance_index_[i], store.positions_[i]).second) {
      throw Error(Errc::invalid_value, in.where("duplicate (utterance, position) at entry " + std::to_string(i)));
    }
  }

  store.index_ = read_index(in, store.keys_);
  in.expect_end();
  return store;
}

std::size_t Datastore::count_for_speaker(std::string_view speaker) const {
  auto it = std::find(speakers_.begin(), speakers_.end(), speaker);
  if (it == speakers_.end()) return 0;
  const auto s = static_cast<std::uint32_t>(it - speakers_.begin());
  return static_cast<std::size_t>(std::count(speaker_index_.begin(), speaker_index_.end(), s));
}

Datastore Datastore::subset(std::span<const std::uint64_t> ids, const IndexSpec& index, std::string provenance) const {
  Datastore out;
  StringTable utterances;
  StringTable speakers;
  std::vector<float> keys;
  keys.reserve(ids.size() * dim());
  std::uint64_t prev = 0;
  for (std::size_t n = 0; n < ids.size(); ++n) {
    const auto id = ids[n];
    if (id >= size()) throw Error(Errc::out_of_range, "entry id " + std::to_string(id) + " out of range");
    if (n > 0 && id <= prev) throw Error(Errc::invalid_argument, "subset ids must be strictly ascending");
    prev = id;
    out.values_.push_back(values_[id]);
    out.utterance_index_.push_back(utterances.intern(utterance_id(id)));
    out.speaker_index_.push_back(speakers.intern(speaker_id(id)));
    out.positions_.push_back(positions_[id]);
    auto row = keys_->row(id);
    keys.insert(keys.end(), row.begin(), row.end());
  }
  out.utterances_ = std::move(utterances).take();
  out.speakers_ = std::move(speakers).take();
  out.keys_ = std::make_shared<const VectorSet>(dim(), std::move(keys));
  out.header_ = {header_.dim, header_.vocab_size, out.values_.size(), header_.metric, std::move(provenance)};
  out.attach_index(index);
  return out;
}

Datastore slice_by_speaker(const Datastore& store, std::string_view speaker, const IndexSpec& index) {
  const auto& speakers = store.speakers();
  if (std::find(speakers.begin(), speakers.end(), speaker) == speakers.end()) {
    throw Error(Errc::not_found, "unknown speaker '" + std::string(speaker) + "' (store has " +
                                     std::to_string(speakers.size()) + " speakers)");
  }
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store.speaker_id(i) == speaker) ids.push_back(i);
  }
  return store.subset(ids, index, store.header().provenance + ";slice=speaker:" + std::string(speaker));
}

std::vector<std::uint64_t> sample_ids(std::size_t population, std::size_t size, std::uint64_t seed) {
  if (size > population) {
    throw Error(Errc::invalid_argument, "sample size " + std::to_string(size) + " exceeds store size " +
                                            std::to_string(population));
  }
  std::vector<std::uint64_t> ids(population);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `size` slots end up a uniform sample.
  for (std::size_t i = 0; i < size; ++i) {
    const auto j = i + uniform_index(rng, population - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Datastore sample_random(const Datastore& store, std::size_t size, std::uint64_t seed, const IndexSpec& index) {
  if (size == 0) throw Error(Errc::invalid_argument, "sample size must be positive");
  const auto ids = sample_ids(store.size(), size, seed);
  return store.subset(ids, index, store.header().provenance + ";sample=size:" + std::to_string(size) +
                                      ",seed:" + std::to_string(seed));
}

NeighborContext neighbor_context(const Datastore& store, std::uint64_t entry_id, std::size_t window) {
  if (entry_id >= store.size()) {
    throw Error(Errc::out_of_range, "entry id " + std::to_string(entry_id) + " >= store size " +
                                        std::to_string(store.size()));
  }
  if (window == 0) throw Error(Errc::invalid_argument, "window must be positive");
  NeighborContext ctx;
  ctx.entry_id = entry_id;
  ctx.utterance_id = store.utterance_id(entry_id);
  ctx.speaker_id = store.speaker_id(entry_id);
  ctx.position = store.position(entry_id);
  ctx.token = store.value(entry_id);

  const auto same = [&](std::size_t i) { return store.utterance_id(i) == ctx.utterance_id; };
  for (std::size_t step = 1; step <= window && step <= entry_id && same(entry_id - step); ++step) {
    ctx.left.push_back(store.value(entry_id - step));
  }
  std::reverse(ctx.left.begin(), ctx.left.end());
  for (std::size_t i = entry_id + 1; i < store.size() && i <= entry_id + window && same(i); ++i) {
    ctx.right.push_back(store.value(i));
  }
  return ctx;
}

}  // namespace knnasr
