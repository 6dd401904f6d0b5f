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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnasr/eval.hpp"
#include "knnasr/knn_interp.hpp"

namespace knnasr {

/// Hyperparameter grid. Defaults: lambda {0.3, 0.4, 0.5, 0.6}, T {1, 10, 100},
/// k {4, 8, 16}.
struct SweepSpec {
  std::vector<double> lambdas{0.3, 0.4, 0.5, 0.6};
  std::vector<double> temperatures{1.0, 10.0, 100.0};
  std::vector<std::size_t> ks{4, 8, 16};
  std::size_t nprobe = 8;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Non-empty, duplicate-free lists with valid values.
  void validate() const;
  std::size_t grid_size() const noexcept { return lambdas.size() * temperatures.size() * ks.size(); }

  /// Grid with k and T pinned; only lambda varies.
  static SweepSpec lambda_only(std::size_t k, double temperature, std::vector<double> lambdas);
};

struct SweepRow {
  KnnConfig config;
  bool ok = false;
  WerBreakdown errors;
  double runtime_ms = 0.0;
  std::string failure;

  double dev_wer() const noexcept { return errors.wer(); }
};

struct SweepResult {
  std::vector<SweepRow> rows;     // lexicographic (k, T, lambda) order
  std::optional<std::size_t> winner;
  std::vector<std::size_t> ties;  // every row sharing the minimum WER, in row order
  std::uint64_t seed = 0;
  bool lambda_only = false;
};

/// Dev-set scoring of one configuration. A throw marks that row failed.
using ConfigEvaluator = std::function<WerBreakdown(const KnnConfig&)>;

/// Evaluates every grid point; winner is the minimum dev WER among successful
/// rows, with equal minima resolved by a seeded uniform draw.
SweepResult run_sweep(const SweepSpec& spec, const ConfigEvaluator& evaluate);

SweepResult lambda_only_sweep(std::size_t k, double temperature, const std::vector<double>& lambdas,
                              std::uint64_t seed, const ConfigEvaluator& evaluate, std::size_t workers = 1);

/// Seeded uniform choice of one of `candidates` (non-empty).
std::size_t break_tie(std::span<const std::size_t> candidates, std::uint64_t seed);

/// k,temperature,lambda,status,substitutions,deletions,insertions,reference_words,dev_wer
std::string sweep_csv(const SweepResult& result);
/// k,temperature,lambda,runtime_ms. Kept apart so the main outputs stay byte-stable.
std::string sweep_timing_csv(const SweepResult& result);
/// Winner, tie set and grid metadata. `index_kind` names the store's index.
std::string sweep_summary_json(const SweepResult& result, const std::string& index_kind);

}  // namespace knnasr
