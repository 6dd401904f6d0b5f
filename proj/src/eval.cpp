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

#include "knnasr/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "knnasr/error.hpp"

namespace knnasr {

NormalizationPolicy NormalizationPolicy::by_id(std::string_view id) {
  if (id == "lower-strip-v1") return {"lower-strip-v1", true, "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"};
  if (id == "whitespace-v1") return {"whitespace-v1", false, ""};
  throw Error(Errc::invalid_argument, "unknown normalization policy '" + std::string(id) + "'");
}

std::vector<std::string> normalize(std::string_view text, const NormalizationPolicy& policy) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    if (policy.punctuation.find(ch) != std::string::npos) continue;
    cur.push_back(policy.lowercase ? static_cast<char>(std::tolower(c)) : ch);
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

WerBreakdown align_words(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  // cost[i][j]: edits turning ref[0,i) into hyp[0,j).
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  WerBreakdown out;
  out.reference_words = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  return out;
}

WerBreakdown wer(std::string_view reference, std::string_view hypothesis, const NormalizationPolicy& policy) {
  const auto ref = normalize(reference, policy);
  if (ref.empty()) throw Error(Errc::invalid_argument, "reference is empty after normalization");
  return align_words(ref, normalize(hypothesis, policy));
}

const char* gender_name(Gender g) noexcept {
  switch (g) {
    case Gender::female: return "female";
    case Gender::male: return "male";
    case Gender::unspecified: return "unspecified";
  }
  return "unspecified";
}

Gender parse_gender(std::string_view raw) {
  std::string s(raw);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "female" || s == "female_feminine" || s == "f") return Gender::female;
  if (s == "male" || s == "male_masculine" || s == "m") return Gender::male;
  return Gender::unspecified;
}

std::optional<std::string> age_group_for_years(int years) {
  static constexpr const char* kDecades[] = {"teens",   "twenties", "thirties", "forties", "fifties",
                                             "sixties", "seventies", "eighties", "nineties"};
  if (years < 10 || years >= 100) return std::nullopt;
  return std::string(kDecades[years / 10 - 1]);
}

WerBreakdown corpus_wer(std::span<const UtteranceRecord> records, const NormalizationPolicy& policy) {
  WerBreakdown total;
  for (const auto& r : records) {
    if (!r.hypothesis) throw Error(Errc::invalid_argument, "record '" + r.utterance_id + "' has no hypothesis");
    try {
      total += wer(r.reference, *r.hypothesis, policy);
    } catch (const Error& e) {
      throw Error(e.code(), "record '" + r.utterance_id + "': " + e.what());
    }
  }
  return total;
}

const char* category_name(Category c) noexcept {
  switch (c) {
    case Category::gender: return "gender";
    case Category::accent: return "accent";
    case Category::age_group: return "age_group";
  }
  return "unknown";
}

std::optional<Category> parse_category(std::string_view s) {
  if (s == "gender") return Category::gender;
  if (s == "accent") return Category::accent;
  if (s == "age" || s == "age_group") return Category::age_group;
  return std::nullopt;
}

namespace {

std::optional<std::string> label_of(const UtteranceRecord& r, Category c) {
  switch (c) {
    case Category::gender:
      if (r.gender == Gender::unspecified) return std::nullopt;
      return std::string(gender_name(r.gender));
    case Category::accent:
      if (!r.accent || r.accent->empty()) return std::nullopt;
      return r.accent;
    case Category::age_group:
      if (!r.age_group || r.age_group->empty()) return std::nullopt;
      return r.age_group;
  }
  return std::nullopt;
}

nlohmann::ordered_json breakdown_json(const WerBreakdown& b) {
  return {{"substitutions", b.substitutions},
          {"deletions", b.deletions},
          {"insertions", b.insertions},
          {"errors", b.errors()},
          {"reference_words", b.reference_words},
          {"wer", b.wer()}};
}

}  // namespace

GroupSection group_report(std::span<const UtteranceRecord> records, Category category,
                          const NormalizationPolicy& policy) {
  GroupSection section;
  section.category = category;
  std::map<std::string, GroupCell> cells;
  std::map<std::string, std::set<std::string>> speakers;
  for (const auto& r : records) {
    auto label = label_of(r, category);
    if (!label) {
      ++section.excluded;
      continue;
    }
    auto& cell = cells[*label];
    cell.label = *label;
    cell.errors += corpus_wer(std::span(&r, 1), policy);
    ++cell.records;
    speakers[*label].insert(r.speaker_id);
  }
  for (auto& [label, cell] : cells) {
    cell.speakers = speakers[label].size();
    cell.single_speaker = cell.speakers <= 1;
    section.cells.push_back(std::move(cell));
  }
  return section;
}

EvalReport evaluate(std::span<const UtteranceRecord> records, std::span<const Category> categories,
                    const NormalizationPolicy& policy) {
  std::vector<UtteranceRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.utterance_id < b.utterance_id; });
  EvalReport report;
  report.policy_id = policy.id;
  report.records = sorted.size();
  report.overall = corpus_wer(sorted, policy);
  for (auto c : categories) report.groups.push_back(group_report(sorted, c, policy));
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["normalization"] = report.policy_id;
  j["records"] = report.records;
  j["overall"] = breakdown_json(report.overall);
  auto groups = nlohmann::ordered_json::object();
  for (const auto& section : report.groups) {
    nlohmann::ordered_json s;
    s["excluded_records"] = section.excluded;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& cell : section.cells) {
      auto c = breakdown_json(cell.errors);
      c["label"] = cell.label;
      c["records"] = cell.records;
      c["speakers"] = cell.speakers;
      c["single_speaker"] = cell.single_speaker;
      cells.push_back(std::move(c));
    }
    s["cells"] = std::move(cells);
    groups[category_name(section.category)] = std::move(s);
  }
  j["groups"] = std::move(groups);
  return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "normalization: %s\n", report.policy_id.c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-12s %-16s %8s %8s %6s %6s %6s %8s %9s\n", "category", "label", "records",
                "speakers", "sub", "del", "ins", "ref", "wer(%)");
  out += line;
  const auto row = [&](const char* cat, const std::string& label, std::size_t records, std::string speakers,
                       const WerBreakdown& b, const char* flag) {
    std::snprintf(line, sizeof line, "%-12s %-16s %8zu %8s %6zu %6zu %6zu %8zu %9.4f%s\n", cat, label.c_str(),
                  records, speakers.c_str(), b.substitutions, b.deletions, b.insertions, b.reference_words,
                  100.0 * b.wer(), flag);
    out += line;
  };
  row("overall", "-", report.records, "-", report.overall, "");
  for (const auto& section : report.groups) {
    for (const auto& cell : section.cells) {
      row(category_name(section.category), cell.label, cell.records, std::to_string(cell.speakers), cell.errors,
          cell.single_speaker ? "  (single speaker)" : "");
    }
    std::snprintf(line, sizeof line, "%-12s %-16s %8zu\n", category_name(section.category), "(unlabeled)",
                  section.excluded);
    out += line;
  }
  return out;
}

}  // namespace knnasr
