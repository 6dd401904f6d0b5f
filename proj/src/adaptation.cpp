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

#include "knnasr/adaptation.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <set>

#include <json.hpp>

#include "knnasr/error.hpp"
#include "knnasr/random.hpp"
#include "knnasr/sweep.hpp"

namespace knnasr {

const char* adapt_setting_name(AdaptSetting s) noexcept {
  switch (s) {
    case AdaptSetting::vanilla: return "vanilla";
    case AdaptSetting::random: return "random";
    case AdaptSetting::personal: return "personal";
    case AdaptSetting::general: return "general";
  }
  return "unknown";
}

std::vector<std::string> choose_speakers(std::span<const std::string> candidates, std::size_t count,
                                         std::uint64_t seed) {
  if (count == 0 || count >= candidates.size()) return {candidates.begin(), candidates.end()};
  const auto picked = sample_ids(candidates.size(), count, seed);
  std::vector<std::string> out;
  for (auto i : picked) out.push_back(candidates[i]);
  return out;
}

namespace {

std::vector<UtteranceRecord> of_speaker(std::span<const UtteranceRecord> records, const std::string& speaker) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records) {
    if (r.speaker_id == speaker) out.push_back(r);
  }
  return out;
}

}  // namespace

AdaptationReport speaker_adaptation_run(const ModelAdapter& model, const Vocabulary& vocab, const Datastore& full,
                                        std::span<const std::string> speakers,
                                        std::span<const UtteranceRecord> dev, std::span<const UtteranceRecord> test,
                                        const AdaptationOptions& options) {
  options.knn.validate();
  AdaptationReport report;
  report.index_kind = index_kind_name(full.index().kind());

  const auto score = [&](const Datastore* store, const KnnConfig& config, std::span<const UtteranceRecord> recs) {
    return decode_and_score(model, vocab, store, config, recs, options.normalization, options.prompt,
                            options.workers);
  };
  // Tune lambda on dev, then score test at the winning lambda.
  const auto tuned = [&](const Datastore& store, std::span<const UtteranceRecord> dev_recs,
                         std::span<const UtteranceRecord> test_recs, std::uint64_t seed, double* lambda_out) {
    auto sweep = lambda_only_sweep(
        options.knn.k, options.knn.temperature, options.lambda_grid, seed,
        [&](const KnnConfig& c) {
          KnnConfig cfg = c;
          cfg.nprobe = options.knn.nprobe;
          return score(&store, cfg, dev_recs);
        },
        1);
    if (!sweep.winner) throw Error(Errc::internal, "lambda tuning failed for every grid point");
    KnnConfig best = sweep.rows[*sweep.winner].config;
    best.nprobe = options.knn.nprobe;
    *lambda_out = best.lambda;
    return score(&store, best, test_recs);
  };

  std::set<std::string> seen;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const auto& speaker = speakers[s];
    if (!seen.insert(speaker).second) continue;
    const auto dev_recs = of_speaker(dev, speaker);
    const auto test_recs = of_speaker(test, speaker);
    if (dev_recs.empty() || test_recs.empty()) {
      report.skipped.push_back(speaker + ": no " + std::string(dev_recs.empty() ? "dev" : "test") + " utterances");
      continue;
    }

    SpeakerAdaptationRow row;
    row.speaker_id = speaker;
    row.test[static_cast<std::size_t>(AdaptSetting::vanilla)] = score(nullptr, options.knn, test_recs);
    row.test[static_cast<std::size_t>(AdaptSetting::general)] = score(&full, options.knn, test_recs);

    row.personal_entries = full.count_for_speaker(speaker);
    if (row.personal_entries == 0) {
      row.empty_personal_store = true;
      row.test[static_cast<std::size_t>(AdaptSetting::random)] = row.test[0];
      row.test[static_cast<std::size_t>(AdaptSetting::personal)] = row.test[0];
    } else {
      const auto personal = slice_by_speaker(full, speaker, options.sub_index);
      const auto random = sample_random(full, personal.size(), derive_seed(options.seed, 2 * s), options.sub_index);
      row.random_entries = random.size();
      row.test[static_cast<std::size_t>(AdaptSetting::personal)] =
          tuned(personal, dev_recs, test_recs, derive_seed(options.seed, 2 * s + 1), &row.lambda_personal);
      row.test[static_cast<std::size_t>(AdaptSetting::random)] =
          tuned(random, dev_recs, test_recs, derive_seed(options.seed ^ 0x5eed, 2 * s), &row.lambda_random);
    }
    report.rows.push_back(std::move(row));
  }

  const auto n = static_cast<double>(report.rows.size());
  for (std::size_t k = 0; k < kAdaptSettings && !report.rows.empty(); ++k) {
    double sum = 0.0;
    for (const auto& r : report.rows) sum += r.test[k].wer();
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& r : report.rows) var += (r.test[k].wer() - mean) * (r.test[k].wer() - mean);
    report.mean[k] = mean;
    report.stddev[k] = std::sqrt(var / n);
  }
  return report;
}

std::string adaptation_json(const AdaptationReport& report, const AdaptationOptions& options) {
  nlohmann::ordered_json j;
  j["normalization"] = options.normalization.id;
  j["index"] = report.index_kind;
  j["sub_index"] = index_kind_name(options.sub_index.kind);
  j["k"] = options.knn.k;
  j["temperature"] = options.knn.temperature;
  j["general_lambda"] = options.knn.lambda;
  j["lambda_grid"] = options.lambda_grid;
  j["seed"] = options.seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["speaker_id"] = r.speaker_id;
    row["personal_entries"] = r.personal_entries;
    row["random_entries"] = r.random_entries;
    row["lambda_random"] = r.lambda_random;
    row["lambda_personal"] = r.lambda_personal;
    row["empty_personal_store"] = r.empty_personal_store;
    for (std::size_t k = 0; k < kAdaptSettings; ++k) {
      const auto& b = r.test[k];
      row[adapt_setting_name(static_cast<AdaptSetting>(k))] = {{"errors", b.errors()},
                                                               {"reference_words", b.reference_words},
                                                               {"wer", b.wer()}};
    }
    rows.push_back(std::move(row));
  }
  j["speakers"] = std::move(rows);
  nlohmann::ordered_json mean, sd;
  for (std::size_t k = 0; k < kAdaptSettings; ++k) {
    mean[adapt_setting_name(static_cast<AdaptSetting>(k))] = report.mean[k];
    sd[adapt_setting_name(static_cast<AdaptSetting>(k))] = report.stddev[k];
  }
  j["mean"] = std::move(mean);
  j["std"] = std::move(sd);
  j["skipped"] = report.skipped;
  return j.dump(2) + "\n";
}

std::string adaptation_text(const AdaptationReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %9s %9s %9s %9s %8s %8s\n", "speaker", "vanilla", "random", "personal",
                "general", "entries", "flag");
  out += line;
  const auto pct = [](double w) { return 100.0 * w; };
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-16s %9.2f %9.2f %9.2f %9.2f %8zu %8s\n", r.speaker_id.c_str(),
                  pct(r.test[0].wer()), pct(r.test[1].wer()), pct(r.test[2].wer()), pct(r.test[3].wer()),
                  r.personal_entries, r.empty_personal_store ? "empty" : "");
    out += line;
  }
  std::snprintf(line, sizeof line, "%-16s %9.2f %9.2f %9.2f %9.2f\n", "mean", pct(report.mean[0]),
                pct(report.mean[1]), pct(report.mean[2]), pct(report.mean[3]));
  out += line;
  std::snprintf(line, sizeof line, "%-16s %9.2f %9.2f %9.2f %9.2f\n", "std", pct(report.stddev[0]),
                pct(report.stddev[1]), pct(report.stddev[2]), pct(report.stddev[3]));
  out += line;
  for (const auto& s : report.skipped) out += "skipped " + s + "\n";
  return out;
}

}  // namespace knnasr
