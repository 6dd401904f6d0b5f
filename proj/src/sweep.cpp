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

#include "knnasr/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "knnasr/error.hpp"
#include "knnasr/parallel.hpp"
#include "knnasr/random.hpp"

namespace knnasr {

namespace {

template <typename T>
void require_unique(const std::vector<T>& values, const char* what) {
  if (values.empty()) throw Error(Errc::invalid_argument, std::string(what) + " list is empty");
  std::set<T> seen(values.begin(), values.end());
  if (seen.size() != values.size()) throw Error(Errc::invalid_argument, std::string(what) + " list has duplicates");
}

std::string fmt_double(double v) {
  // Shortest text that round-trips.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void SweepSpec::validate() const {
  require_unique(lambdas, "lambda");
  require_unique(temperatures, "temperature");
  require_unique(ks, "k");
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(Errc::invalid_argument, "lambda " + fmt_double(l) + " outside [0, 1]");
  }
  for (double t : temperatures) {
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(Errc::invalid_argument, "temperature must be positive");
  }
  for (auto k : ks) {
    if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
  }
  if (nprobe < 1) throw Error(Errc::invalid_argument, "nprobe must be >= 1");
}

SweepSpec SweepSpec::lambda_only(std::size_t k, double temperature, std::vector<double> lambdas) {
  SweepSpec spec;
  spec.lambdas = std::move(lambdas);
  spec.temperatures = {temperature};
  spec.ks = {k};
  return spec;
}

std::size_t break_tie(std::span<const std::size_t> candidates, std::uint64_t seed) {
  if (candidates.empty()) throw Error(Errc::invalid_argument, "no candidates to break a tie between");
  if (candidates.size() == 1) return candidates.front();
  Rng rng(seed);
  return candidates[uniform_index(rng, candidates.size())];
}

SweepResult run_sweep(const SweepSpec& spec, const ConfigEvaluator& evaluate) {
  spec.validate();
  SweepResult result;
  result.seed = spec.seed;
  for (auto k : spec.ks) {
    for (double t : spec.temperatures) {
      for (double l : spec.lambdas) {
        SweepRow row;
        row.config = KnnConfig{k, t, l, spec.nprobe};
        result.rows.push_back(std::move(row));
      }
    }
  }

  parallel_for(result.rows.size(), spec.workers, [&](std::size_t i) {
    auto& row = result.rows[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      row.errors = evaluate(row.config);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.failure = e.what();
    }
    row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  std::optional<double> best;
  for (const auto& row : result.rows) {
    if (row.ok && (!best || row.dev_wer() < *best)) best = row.dev_wer();
  }
  if (!best) return result;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].ok && result.rows[i].dev_wer() == *best) result.ties.push_back(i);
  }
  result.winner = break_tie(result.ties, spec.seed);
  return result;
}

SweepResult lambda_only_sweep(std::size_t k, double temperature, const std::vector<double>& lambdas,
                              std::uint64_t seed, const ConfigEvaluator& evaluate, std::size_t workers) {
  auto spec = SweepSpec::lambda_only(k, temperature, lambdas);
  spec.seed = seed;
  spec.workers = workers;
  auto result = run_sweep(spec, evaluate);
  result.lambda_only = true;
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "k,temperature,lambda,status,substitutions,deletions,insertions,reference_words,dev_wer\n";
  for (const auto& row : result.rows) {
    out += std::to_string(row.config.k) + "," + fmt_double(row.config.temperature) + "," +
           fmt_double(row.config.lambda) + ",";
    if (row.ok) {
      out += "ok," + std::to_string(row.errors.substitutions) + "," + std::to_string(row.errors.deletions) + "," +
             std::to_string(row.errors.insertions) + "," + std::to_string(row.errors.reference_words) + "," +
             fmt_double(row.dev_wer()) + "\n";
    } else {
      out += "failed,,,,,\n";
    }
  }
  return out;
}

std::string sweep_timing_csv(const SweepResult& result) {
  std::string out = "k,temperature,lambda,runtime_ms\n";
  for (const auto& row : result.rows) {
    out += std::to_string(row.config.k) + "," + fmt_double(row.config.temperature) + "," +
           fmt_double(row.config.lambda) + "," + fmt_double(row.runtime_ms) + "\n";
  }
  return out;
}

std::string sweep_summary_json(const SweepResult& result, const std::string& index_kind) {
  const auto config_json = [](const KnnConfig& c) {
    return nlohmann::ordered_json{{"k", c.k}, {"temperature", c.temperature}, {"lambda", c.lambda},
                                  {"nprobe", c.nprobe}};
  };
  nlohmann::ordered_json j;
  j["mode"] = result.lambda_only ? "lambda_only" : "full_grid";
  j["seed"] = result.seed;
  j["index"] = index_kind;
  j["rows"] = result.rows.size();
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.ok ? 0 : 1;
  j["failed_rows"] = failed;
  if (result.winner) {
    const auto& w = result.rows[*result.winner];
    j["winner"] = config_json(w.config);
    j["winner"]["dev_wer"] = w.dev_wer();
  } else {
    j["winner"] = nullptr;
  }
  auto ties = nlohmann::ordered_json::array();
  for (auto i : result.ties) ties.push_back(config_json(result.rows[i].config));
  j["ties"] = std::move(ties);
  auto failures = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    if (!r.ok) {
      auto f = config_json(r.config);
      f["error"] = r.failure;
      failures.push_back(std::move(f));
    }
  }
  j["failures"] = std::move(failures);
  return j.dump(2) + "\n";
}

}  // namespace knnasr
