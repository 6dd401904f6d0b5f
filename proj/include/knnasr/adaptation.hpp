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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "knnasr/datastore.hpp"
#include "knnasr/decode.hpp"
#include "knnasr/eval.hpp"
#include "knnasr/pipeline.hpp"

namespace knnasr {

/// Datastore regimes compared per speaker.
enum class AdaptSetting : std::size_t { vanilla = 0, random = 1, personal = 2, general = 3 };
inline constexpr std::size_t kAdaptSettings = 4;
const char* adapt_setting_name(AdaptSetting s) noexcept;

struct AdaptationOptions {
  /// k, T and nprobe for every retrieval setting; lambda is used as-is for
  /// the general store.
  KnnConfig knn;
  /// Per-speaker lambda grid for the random and personal stores.
  std::vector<double> lambda_grid{0.3, 0.4, 0.5, 0.6};
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  PromptPolicy prompt;
  NormalizationPolicy normalization = NormalizationPolicy::standard();
  IndexSpec sub_index;  // index built over personal and random stores
};

struct SpeakerAdaptationRow {
  std::string speaker_id;
  std::size_t personal_entries = 0;
  std::size_t random_entries = 0;
  std::array<WerBreakdown, kAdaptSettings> test{};
  double lambda_random = 0.0;
  double lambda_personal = 0.0;
  /// No entries for this speaker in the full store; random and personal
  /// then fall back to vanilla decoding.
  bool empty_personal_store = false;
};

struct AdaptationReport {
  std::vector<SpeakerAdaptationRow> rows;
  std::array<double, kAdaptSettings> mean{};
  std::array<double, kAdaptSettings> stddev{};  // population standard deviation
  std::vector<std::string> skipped;             // "speaker: reason"
  std::string index_kind;
};

/// Seeded subset of `count` speakers (all when count is 0 or exceeds the list),
/// returned in the input order.
std::vector<std::string> choose_speakers(std::span<const std::string> candidates, std::size_t count,
                                         std::uint64_t seed);

/// For every speaker: vanilla, random (size-matched sample of the full store),
/// personal (speaker slice) and general (full store) test WERs. Lambda for the
/// random and personal stores is tuned on that speaker's dev utterances.
/// Speakers without dev or test utterances are skipped with a reason.
AdaptationReport speaker_adaptation_run(const ModelAdapter& model, const Vocabulary& vocab, const Datastore& full,
                                        std::span<const std::string> speakers,
                                        std::span<const UtteranceRecord> dev, std::span<const UtteranceRecord> test,
                                        const AdaptationOptions& options);

std::string adaptation_json(const AdaptationReport& report, const AdaptationOptions& options);
std::string adaptation_text(const AdaptationReport& report);

}  // namespace knnasr
