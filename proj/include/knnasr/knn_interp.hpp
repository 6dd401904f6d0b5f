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
#include <vector>

#include "knnasr/datastore.hpp"

namespace knnasr {

/// Retrieval and interpolation settings. Defaults are k=4, T=100, lambda=0.4.
struct KnnConfig {
  std::size_t k = 4;
  double temperature = 100.0;
  double lambda = 0.4;
  std::size_t nprobe = 8;

  /// Throws invalid_argument unless k >= 1, T > 0, 0 <= lambda <= 1, nprobe >= 1.
  void validate() const;

  friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

/// Probability vector over a vocabulary. A distribution built from an empty
/// retrieval is the all-zero "no neighbors" sentinel; interpolate() passes the
/// model distribution through untouched when it sees one.
class TokenDistribution {
 public:
  TokenDistribution() = default;
  /// Does not validate; see check().
  explicit TokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

  static TokenDistribution no_neighbors(std::size_t vocab_size);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  bool is_no_neighbors() const noexcept { return no_neighbors_; }

  /// Lowest-id argmax.
  TokenId argmax() const;
  double sum() const;
  /// Throws invalid_value unless entries are non-negative and finite and sum
  /// to 1 within `tolerance`.
  void check(double tolerance = 1e-9) const;

 private:
  std::vector<double> probs_;
  bool no_neighbors_ = false;
};

/// Softmax over negative distances: w_i = exp(-d_i/T) / sum_j exp(-d_j/T),
/// evaluated relative to the smallest distance. Empty input -> nullopt.
std::optional<std::vector<double>> neighbor_probs(std::span<const double> distances, double temperature);

/// p(y) = sum_i [y == tokens_i] * weights_i.
TokenDistribution aggregate(std::span<const TokenId> tokens, std::span<const double> weights,
                            std::size_t vocab_size);

/// lambda * p_knn + (1 - lambda) * p_model.
TokenDistribution interpolate(const TokenDistribution& p_knn, const TokenDistribution& p_model, double lambda);

struct Retrieval {
  std::vector<Neighbor> neighbors;
  std::vector<TokenId> tokens;  // value of each neighbor
  TokenDistribution p_knn;      // sentinel when neighbors is empty
};

/// search(k) -> neighbor_probs(T) -> aggregate against `store`.
Retrieval retrieve(const Datastore& store, std::span<const float> query, const KnnConfig& config);

}  // namespace knnasr
