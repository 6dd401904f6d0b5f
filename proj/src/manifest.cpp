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

#include "knnasr/manifest.hpp"

#include <charconv>
#include <sstream>

#include <json.hpp>

#include "knnasr/binary_io.hpp"
#include "knnasr/error.hpp"

namespace knnasr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<std::string> first_accent(std::string_view s) {
  auto first = trim(s.substr(0, s.find(',')));
  if (first.empty()) return std::nullopt;
  return first;
}

std::optional<std::string> age_label(std::string_view s) {
  auto t = trim(s);
  if (t.empty()) return std::nullopt;
  int years = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), years);
  if (ec == std::errc{} && ptr == t.data() + t.size()) return age_group_for_years(years);
  return t;
}

struct Fields {
  std::string utterance_id, speaker_id, reference;
  std::optional<std::string> hypothesis, gender, accents, age;
};

UtteranceRecord to_record(Fields f, std::size_t line) {
  if (f.utterance_id.empty()) {
    throw Error(Errc::invalid_value, "manifest line " + std::to_string(line) + ": missing utterance_id");
  }
  UtteranceRecord r;
  r.utterance_id = std::move(f.utterance_id);
  r.speaker_id = std::move(f.speaker_id);
  r.reference = std::move(f.reference);
  r.hypothesis = std::move(f.hypothesis);
  if (f.gender) r.gender = parse_gender(trim(*f.gender));
  if (f.accents) r.accent = first_accent(*f.accents);
  if (f.age) r.age_group = age_label(*f.age);
  return r;
}

}  // namespace

std::vector<UtteranceRecord> parse_manifest_jsonl(std::string_view text) {
  std::vector<UtteranceRecord> out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_value, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw Error(Errc::invalid_value, "manifest line " + std::to_string(line_no) + ": not an object");
    const auto str = [&](const char* key, bool required, bool numeric = false) -> std::optional<std::string> {
      if (!j.contains(key) || j[key].is_null()) {
        if (required) {
          throw Error(Errc::invalid_value, "manifest line " + std::to_string(line_no) + ": missing " + key);
        }
        return std::nullopt;
      }
      const auto& v = j[key];
      if (v.is_string()) return v.get<std::string>();
      if (numeric && v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_array() && !v.empty() && v.front().is_string()) return v.front().get<std::string>();
      throw Error(Errc::invalid_value, "manifest line " + std::to_string(line_no) + ": bad type for " + key);
    };
    Fields f;
    f.utterance_id = *str("utterance_id", true);
    f.speaker_id = str("speaker_id", false).value_or("");
    f.reference = *str("reference", true);
    f.hypothesis = str("hypothesis", false);
    f.gender = str("gender", false);
    f.accents = j.contains("accents") ? str("accents", false) : str("accent", false);
    f.age = j.contains("age") ? str("age", false, true) : str("age_group", false);
    out.push_back(to_record(std::move(f), line_no));
  }
  return out;
}

std::vector<UtteranceRecord> parse_manifest_tsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) return {};
  std::vector<std::string> columns;
  {
    std::istringstream h(header);
    for (std::string c; std::getline(h, c, '\t');) columns.push_back(trim(c));
  }
  std::vector<UtteranceRecord> out;
  std::size_t line_no = 1;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::istringstream l(line);
    for (std::string c; std::getline(l, c, '\t');) cells.push_back(c);
    if (cells.size() > columns.size()) {
      throw Error(Errc::invalid_value, "manifest line " + std::to_string(line_no) + ": more cells than columns");
    }
    Fields f;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& col = columns[i];
      auto& cell = cells[i];
      if (col == "utterance_id") f.utterance_id = cell;
      else if (col == "speaker_id") f.speaker_id = cell;
      else if (col == "reference") f.reference = cell;
      else if (col == "hypothesis") f.hypothesis = cell;
      else if (col == "gender") f.gender = cell;
      else if (col == "accents" || col == "accent") f.accents = cell;
      else if (col == "age" || col == "age_group") f.age = cell;
    }
    out.push_back(to_record(std::move(f), line_no));
  }
  return out;
}

std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  try {
    return path.extension() == ".tsv" ? parse_manifest_tsv(text) : parse_manifest_jsonl(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string manifest_jsonl(std::span<const UtteranceRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["utterance_id"] = r.utterance_id;
    j["speaker_id"] = r.speaker_id;
    j["reference"] = r.reference;
    if (r.hypothesis) j["hypothesis"] = *r.hypothesis;
    if (r.gender != Gender::unspecified) j["gender"] = gender_name(r.gender);
    if (r.accent) j["accents"] = *r.accent;
    if (r.age_group) j["age"] = *r.age_group;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace knnasr
