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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "knnasr/eval.hpp"

namespace knnasr {

// Manifest columns: utterance_id, speaker_id, reference, [hypothesis],
// [gender], [accents], [age]. Multi-valued accents are comma-separated and
// only the first is kept. `age` may be a decade label or a number of years.

std::vector<UtteranceRecord> parse_manifest_jsonl(std::string_view text);
/// First line is a header naming the columns.
std::vector<UtteranceRecord> parse_manifest_tsv(std::string_view text);
/// Picks the TSV reader for a ".tsv" extension, JSONL otherwise.
std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& path);

std::string manifest_jsonl(std::span<const UtteranceRecord> records);

}  // namespace knnasr
