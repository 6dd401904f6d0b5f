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

#include "knnasr/toy_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "knnasr/error.hpp"

namespace knnasr {

namespace {

constexpr std::string_view kToyMagic{"TOYMDL1\0", 8};

std::string two_digit(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

std::string four_digit(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

}  // namespace

ToyModel ToyModel::build(Vocabulary vocab, std::span<const std::vector<TokenId>> corpus,
                         const ToyModelOptions& options) {
  if (corpus.empty()) throw Error(Errc::invalid_argument, "toy model corpus is empty");
  if (!(options.alpha > 0.0)) throw Error(Errc::invalid_argument, "smoothing alpha must be positive");
  if (options.order < 1 || options.embedding_dim < 1) {
    throw Error(Errc::invalid_argument, "order and embedding dim must be positive");
  }
  const auto& corruption = options.corruption;
  if (!(corruption.fraction >= 0.0 && corruption.fraction <= 1.0)) {
    throw Error(Errc::invalid_argument, "corruption fraction must lie in [0, 1]");
  }
  const std::size_t v = vocab.size();
  if (v < 2) throw Error(Errc::invalid_argument, "vocabulary needs at least 2 tokens");

  std::vector<double> counts(v * v, 0.0);
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    TokenId prev = kEndOfSequence;
    for (auto tok : corpus[s]) {
      if (tok >= v) {
        throw Error(Errc::out_of_range, "corpus sentence " + std::to_string(s) + " has token " +
                                            std::to_string(tok) + " outside the vocabulary");
      }
      counts[prev * v + tok] += 1.0;
      prev = tok;
    }
  }

  ToyModel model;
  model.order_ = options.order;
  model.embedding_dim_ = options.embedding_dim;
  model.transitions_.resize(v * v);
  for (std::size_t r = 0; r < v; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < v; ++c) total += counts[r * v + c];
    const double denom = total + options.alpha * static_cast<double>(v);
    for (std::size_t c = 0; c < v; ++c) model.transitions_[r * v + c] = (counts[r * v + c] + options.alpha) / denom;
  }

  if (corruption.fraction > 0.0) {
    Rng rng(corruption.seed);
    const double keep = 1.0 - corruption.fraction;
    for (std::size_t r = 0; r < v; ++r) {
      double* row = model.transitions_.data() + r * v;
      const auto best = static_cast<std::size_t>(std::max_element(row, row + v) - row);
      std::size_t target = 1 + uniform_index(rng, v - 1);
      if (target == best && v > 2) target = target % (v - 1) + 1;
      for (std::size_t c = 0; c < v; ++c) row[c] *= keep;
      row[target] += corruption.fraction;
    }
  }

  Rng rng(options.seed);
  model.embeddings_.resize(v * options.embedding_dim);
  for (auto& x : model.embeddings_) x = static_cast<float>(2.0 * uniform01(rng) - 1.0);
  model.vocab_ = std::move(vocab);
  return model;
}

StepOutput ToyModel::step(std::span<const TokenId> context) const {
  const std::size_t v = vocab_.size();
  StepOutput out;
  out.hidden.resize(dim());
  double norm = 0.0;
  for (std::size_t j = 0; j < order_; ++j) {
    // Slot j holds the token `order_ - j` places back.
    const std::size_t back = order_ - j;
    const TokenId tok = context.size() >= back ? context[context.size() - back] : kEndOfSequence;
    if (tok >= v) throw Error(Errc::out_of_range, "context token " + std::to_string(tok) + " outside vocabulary");
    const float* e = embeddings_.data() + tok * embedding_dim_;
    for (std::size_t d = 0; d < embedding_dim_; ++d) {
      out.hidden[j * embedding_dim_ + d] = e[d];
      norm += static_cast<double>(e[d]) * e[d];
    }
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& x : out.hidden) x = static_cast<float>(x / norm);
  }
  const TokenId last = context.empty() ? kEndOfSequence : context.back();
  const double* row = transitions_.data() + last * v;
  out.p_model = TokenDistribution(std::vector<double>(row, row + v));
  return out;
}

double ToyModel::perplexity(std::span<const std::vector<TokenId>> corpus) const {
  double log_sum = 0.0;
  std::size_t n = 0;
  for (const auto& sentence : corpus) {
    TokenId prev = kEndOfSequence;
    for (auto tok : sentence) {
      log_sum += std::log(transition(prev, tok));
      prev = tok;
      ++n;
    }
  }
  if (n == 0) throw Error(Errc::invalid_argument, "perplexity of an empty corpus");
  return std::exp(-log_sum / static_cast<double>(n));
}

Bytes ToyModel::serialize() const {
  ByteWriter out;
  out.put_magic(kToyMagic);
  out.put_u32(static_cast<std::uint32_t>(vocab_.size()));
  for (const auto& w : vocab_.words()) out.put_string(w);
  out.put_u32(static_cast<std::uint32_t>(order_));
  out.put_u32(static_cast<std::uint32_t>(embedding_dim_));
  out.put_f32s(embeddings_);
  for (double p : transitions_) out.put_f64(p);
  return std::move(out).take();
}

ToyModel ToyModel::parse(std::span<const std::uint8_t> bytes, const std::string& context) {
  ByteReader in(bytes, context);
  in.expect_magic(kToyMagic);
  const auto v = in.u32();
  if (v < 2 || v > in.remaining() / 4) throw Error(Errc::invalid_value, in.where("vocabulary size"));
  std::vector<std::string> words(v);
  for (auto& w : words) w = in.string();
  ToyModel model;
  try {
    model.vocab_ = Vocabulary(std::move(words));
  } catch (const Error& e) {
    throw Error(Errc::invalid_value, in.where(e.what()));
  }
  model.order_ = in.u32();
  model.embedding_dim_ = in.u32();
  if (model.order_ == 0 || model.embedding_dim_ == 0) throw Error(Errc::invalid_value, in.where("zero order or dim"));
  if (static_cast<std::uint64_t>(v) * model.embedding_dim_ > in.remaining() / 4) {
    throw Error(Errc::truncated, in.where("embedding table"));
  }
  model.embeddings_ = in.f32s(static_cast<std::size_t>(v) * model.embedding_dim_);
  if (static_cast<std::uint64_t>(v) * v > in.remaining() / 8) throw Error(Errc::truncated, in.where("transitions"));
  model.transitions_.resize(static_cast<std::size_t>(v) * v);
  for (auto& p : model.transitions_) p = in.f64();
  in.expect_end();
  for (float x : model.embeddings_) {
    if (!std::isfinite(x)) throw Error(Errc::invalid_value, in.where("non-finite embedding"));
  }
  for (std::uint32_t r = 0; r < v; ++r) {
    TokenDistribution(std::vector<double>(model.transitions_.begin() + r * v, model.transitions_.begin() + (r + 1) * v))
        .check(1e-9);
  }
  return model;
}

ToyModel ToyModel::read(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

// --- synthetic grammar ------------------------------------------------------

TokenId SyntheticGrammar::draw_successor(Rng& rng) const {
  if (uniform01(rng) < options_.end_fraction) return kEndOfSequence;
  return static_cast<TokenId>(1 + uniform_index(rng, options_.vocab_size - 1));
}

SyntheticGrammar SyntheticGrammar::random(const GrammarOptions& options) {
  if (options.vocab_size < 3) throw Error(Errc::invalid_argument, "grammar needs at least 2 words plus EOS");
  if (options.min_len < 2 || options.max_len < options.min_len) {
    throw Error(Errc::invalid_argument, "grammar needs 2 <= min_len <= max_len");
  }
  SyntheticGrammar g;
  g.options_ = options;
  Rng rng(options.seed);
  g.successors_.resize(options.vocab_size * options.vocab_size);
  for (auto& s : g.successors_) s = g.draw_successor(rng);
  return g;
}

SyntheticGrammar SyntheticGrammar::with_overrides(double fraction, std::uint64_t seed) const {
  SyntheticGrammar g = *this;
  Rng rng(seed);
  for (auto& s : g.successors_) {
    const bool redraw = uniform01(rng) < fraction;
    const TokenId fresh = g.draw_successor(rng);
    if (redraw) s = fresh;
  }
  return g;
}

std::vector<TokenId> SyntheticGrammar::sample(Rng& rng) const {
  const auto words = options_.vocab_size - 1;
  std::vector<TokenId> out;
  out.push_back(static_cast<TokenId>(1 + uniform_index(rng, words)));
  out.push_back(static_cast<TokenId>(1 + uniform_index(rng, words)));
  while (out.size() < options_.max_len) {
    TokenId next = uniform01(rng) < options_.follow_prob ? successor(out[out.size() - 2], out.back())
                                                         : static_cast<TokenId>(1 + uniform_index(rng, words));
    if (next == kEndOfSequence && out.size() < options_.min_len) {
      next = static_cast<TokenId>(1 + uniform_index(rng, words));
    }
    if (next == kEndOfSequence) break;
    out.push_back(next);
  }
  out.push_back(kEndOfSequence);
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusOptions& options) {
  if (options.speakers == 0) throw Error(Errc::invalid_argument, "need at least one speaker");
  if (options.shifted_speakers > options.speakers) {
    throw Error(Errc::invalid_argument, "more shifted speakers than speakers");
  }
  SyntheticCorpus corpus;
  corpus.vocab = Vocabulary::synthetic(options.grammar.vocab_size);

  GrammarOptions grammar_opts = options.grammar;
  grammar_opts.seed = derive_seed(options.seed, 1);
  const auto base = SyntheticGrammar::random(grammar_opts);

  static constexpr std::array<const char*, 3> kGenders{"female", "male", ""};
  static constexpr std::array<const char*, 4> kAccents{"netherlands", "belgium", "netherlands", ""};
  static constexpr std::array<const char*, 6> kAges{"teens", "twenties", "thirties", "forties", "fifties", "sixties"};

  const std::size_t budget = std::max<std::size_t>(1, options.train_tokens / options.speakers);
  for (std::size_t s = 0; s < options.speakers; ++s) {
    SyntheticSpeaker spk;
    spk.speaker_id = "spk" + two_digit(s);
    spk.shifted = s >= options.speakers - options.shifted_speakers;
    spk.gender = kGenders[s % kGenders.size()];
    spk.accent = kAccents[s % kAccents.size()];
    spk.age_group = kAges[s % kAges.size()];

    const double overrides = spk.shifted ? options.shift_fraction : options.idiolect_fraction;
    const auto grammar = base.with_overrides(overrides, derive_seed(options.seed, 100 + s));
    Rng rng(derive_seed(options.seed, 1000 + s));

    const auto emit = [&](std::vector<SyntheticUtterance>& into, const std::string& split, std::size_t i) {
      into.push_back({spk.speaker_id + "-" + split + "-" + four_digit(i), spk.speaker_id, grammar.sample(rng)});
      return into.back().tokens.size();
    };
    for (std::size_t i = 0, tokens = 0; tokens < budget; ++i) tokens += emit(corpus.train, "train", i);
    for (std::size_t i = 0; i < options.dev_per_speaker; ++i) emit(corpus.dev, "dev", i);
    for (std::size_t i = 0; i < options.test_per_speaker; ++i) emit(corpus.test, "test", i);
    corpus.speakers.push_back(std::move(spk));
  }

  Rng base_rng(derive_seed(options.seed, 2));
  for (std::size_t tokens = 0; tokens < options.train_tokens;) {
    corpus.base_text.push_back(base.sample(base_rng));
    tokens += corpus.base_text.back().size();
  }
  return corpus;
}

std::vector<ReferenceUtterance> as_references(std::span<const SyntheticUtterance> utterances) {
  std::vector<ReferenceUtterance> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back({u.utterance_id, u.speaker_id, u.tokens});
  return out;
}

std::vector<UtteranceRecord> as_records(const SyntheticCorpus& corpus, std::span<const SyntheticUtterance> utterances) {
  std::vector<UtteranceRecord> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) {
    UtteranceRecord r;
    r.utterance_id = u.utterance_id;
    r.speaker_id = u.speaker_id;
    r.reference = corpus.vocab.decode(u.tokens);
    for (const auto& spk : corpus.speakers) {
      if (spk.speaker_id != u.speaker_id) continue;
      r.gender = parse_gender(spk.gender);
      if (!spk.accent.empty()) r.accent = spk.accent;
      if (!spk.age_group.empty()) r.age_group = spk.age_group;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace knnasr
