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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace knnasr {

// ---------------------------------------------------------------------------
// Text normalization
// ---------------------------------------------------------------------------

/// Versioned normalization policy; its id is written into every report.
struct NormalizationPolicy {
  std::string id;
  bool lowercase = true;
  std::string punctuation;  // bytes removed before splitting

  /// "lower-strip-v1" (default): ASCII lowercase + ASCII punctuation removal.
  /// "whitespace-v1": whitespace split only.
  static NormalizationPolicy by_id(std::string_view id);
  static NormalizationPolicy standard() { return by_id("lower-strip-v1"); }
};

/// Lowercase, strip punctuation, split on whitespace runs.
std::vector<std::string> normalize(std::string_view text, const NormalizationPolicy& policy);

// ---------------------------------------------------------------------------
// Word error rate
// ---------------------------------------------------------------------------

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_words = 0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
  /// (S + D + I) / N; 0 when N is 0.
  double wer() const noexcept {
    return reference_words == 0 ? 0.0 : static_cast<double>(errors()) / static_cast<double>(reference_words);
  }

  WerBreakdown& operator+=(const WerBreakdown& o) noexcept {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    reference_words += o.reference_words;
    return *this;
  }
  friend bool operator==(const WerBreakdown&, const WerBreakdown&) = default;
};

/// Word-level Levenshtein alignment. Counts come from one optimal alignment,
/// backtraced preferring substitution/match, then deletion, then insertion.
WerBreakdown align_words(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// Normalizes both sides and aligns. Throws invalid_argument when the
/// normalized reference is empty.
WerBreakdown wer(std::string_view reference, std::string_view hypothesis,
                 const NormalizationPolicy& policy = NormalizationPolicy::standard());

// ---------------------------------------------------------------------------
// Records and reports
// ---------------------------------------------------------------------------

enum class Gender { unspecified, female, male };

const char* gender_name(Gender g) noexcept;
/// "female"/"female_feminine"/"f" and the male equivalents; anything else is unspecified.
Gender parse_gender(std::string_view s);

/// Decade label for an age in years ("teens" for 10-19, ..., "nineties").
std::optional<std::string> age_group_for_years(int years);

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string reference;
  std::optional<std::string> hypothesis;
  Gender gender = Gender::unspecified;
  std::optional<std::string> accent;
  std::optional<std::string> age_group;
};

/// Pooled counts: total errors over total reference words. Throws
/// invalid_argument for a record without a hypothesis.
WerBreakdown corpus_wer(std::span<const UtteranceRecord> records,
                        const NormalizationPolicy& policy = NormalizationPolicy::standard());

enum class Category { gender, accent, age_group };

const char* category_name(Category c) noexcept;
std::optional<Category> parse_category(std::string_view s);

struct GroupCell {
  std::string label;
  WerBreakdown errors;
  std::size_t records = 0;
  std::size_t speakers = 0;
  bool single_speaker = false;  // reported, but too thin to compare
};

struct GroupSection {
  Category category = Category::gender;
  std::vector<GroupCell> cells;  // sorted by label
  std::size_t excluded = 0;      // records without a label for this category
};

/// Partitions records by label; unlabeled records are only counted as excluded.
GroupSection group_report(std::span<const UtteranceRecord> records, Category category,
                          const NormalizationPolicy& policy = NormalizationPolicy::standard());

struct EvalReport {
  std::string policy_id;
  WerBreakdown overall;
  std::size_t records = 0;
  std::vector<GroupSection> groups;
};

/// Records are scored in utterance_id order so the result is independent of input order.
EvalReport evaluate(std::span<const UtteranceRecord> records, std::span<const Category> categories,
                    const NormalizationPolicy& policy = NormalizationPolicy::standard());

std::string report_json(const EvalReport& report);
std::string report_text(const EvalReport& report);

}  // namespace knnasr
