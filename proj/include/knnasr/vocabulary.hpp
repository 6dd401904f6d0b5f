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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "knnasr/datastore.hpp"

namespace knnasr {

/// Reserved end-of-sequence id. Also serves as the start-of-sequence pad.
inline constexpr TokenId kEndOfSequence = 0;

/// Word <-> id table. Line i of the text form is the word for id i.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Words must be unique, non-empty and free of whitespace.
  explicit Vocabulary(std::vector<std::string> words);

  /// "</s>", "w1", ..., "w{size-1}".
  static Vocabulary synthetic(std::size_t size);

  static Vocabulary read(const std::filesystem::path& path);
  std::string to_text() const;

  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(TokenId id) const { return words_.at(id); }
  std::optional<TokenId> find(std::string_view word) const;
  const std::vector<std::string>& words() const noexcept { return words_; }

  /// Whitespace-split lookup; throws not_found naming the first unknown word.
  std::vector<TokenId> encode(std::string_view text) const;
  /// Space-joined words, end-of-sequence tokens dropped.
  std::string decode(std::span<const TokenId> tokens) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace knnasr
