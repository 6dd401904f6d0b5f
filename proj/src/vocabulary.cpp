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

#include "knnasr/vocabulary.hpp"

#include <cctype>
#include <sstream>

#include "knnasr/binary_io.hpp"
#include "knnasr/error.hpp"

namespace knnasr {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const auto& w = words_[i];
    if (w.empty()) throw Error(Errc::invalid_value, "vocabulary word " + std::to_string(i) + " is empty");
    for (unsigned char c : w) {
      if (std::isspace(c)) throw Error(Errc::invalid_value, "vocabulary word " + std::to_string(i) + " has whitespace");
    }
    if (!ids_.emplace(w, static_cast<TokenId>(i)).second) {
      throw Error(Errc::invalid_value, "duplicate vocabulary word '" + w + "'");
    }
  }
}

Vocabulary Vocabulary::synthetic(std::size_t size) {
  if (size < 2) throw Error(Errc::invalid_argument, "synthetic vocabulary needs at least 2 tokens");
  std::vector<std::string> words{"</s>"};
  for (std::size_t i = 1; i < size; ++i) words.push_back("w" + std::to_string(i));
  return Vocabulary(std::move(words));
}

Vocabulary Vocabulary::read(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& w : words_) out += w + "\n";
  return out;
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    auto id = find(w);
    if (!id) throw Error(Errc::not_found, "word '" + w + "' is not in the vocabulary");
    out.push_back(*id);
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (auto t : tokens) {
    if (t == kEndOfSequence) continue;
    if (!out.empty()) out += ' ';
    out += word(t);
  }
  return out;
}

}  // namespace knnasr
