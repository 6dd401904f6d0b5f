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

#include "knnasr/knn_interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "knnasr/error.hpp"

namespace knnasr {

void KnnConfig::validate() const {
  if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::invalid_argument, "temperature must be positive and finite");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::invalid_argument, "lambda must lie in [0, 1]");
  if (nprobe < 1) throw Error(Errc::invalid_argument, "nprobe must be >= 1");
}

TokenDistribution TokenDistribution::no_neighbors(std::size_t vocab_size) {
  TokenDistribution d(std::vector<double>(vocab_size, 0.0));
  d.no_neighbors_ = true;
  return d;
}

TokenId TokenDistribution::argmax() const {
  if (probs_.empty()) throw Error(Errc::invalid_argument, "argmax of an empty distribution");
  return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double TokenDistribution::sum() const {
  double s = 0.0;
  for (double p : probs_) s += p;
  return s;
}

void TokenDistribution::check(double tolerance) const {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw Error(Errc::invalid_value, "probability " + std::to_string(i) + " is negative or not finite");
    }
  }
  if (std::abs(sum() - 1.0) > tolerance) {
    throw Error(Errc::invalid_value, "distribution sums to " + std::to_string(sum()));
  }
}

std::optional<std::vector<double>> neighbor_probs(std::span<const double> distances, double temperature) {
  if (!(temperature > 0.0)) throw Error(Errc::invalid_argument, "temperature must be positive");
  if (distances.empty()) return std::nullopt;
  for (double d : distances) {
    if (!std::isfinite(d) || d < 0.0) throw Error(Errc::invalid_argument, "distances must be finite and non-negative");
  }
  const double d_min = *std::min_element(distances.begin(), distances.end());
  std::vector<double> w(distances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    w[i] = std::exp(-(distances[i] - d_min) / temperature);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

TokenDistribution aggregate(std::span<const TokenId> tokens, std::span<const double> weights,
                            std::size_t vocab_size) {
  if (tokens.size() != weights.size()) {
    throw Error(Errc::invalid_argument, "aggregate needs one weight per neighbor token");
  }
  if (tokens.empty()) return TokenDistribution::no_neighbors(vocab_size);
  std::vector<double> p(vocab_size, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= vocab_size) {
      throw Error(Errc::out_of_range, "neighbor token " + std::to_string(tokens[i]) + " >= vocab size " +
                                          std::to_string(vocab_size));
    }
    p[tokens[i]] += weights[i];
  }
  return TokenDistribution(std::move(p));
}

TokenDistribution interpolate(const TokenDistribution& p_knn, const TokenDistribution& p_model, double lambda) {
  if (p_knn.size() != p_model.size()) {
    throw Error(Errc::dim_mismatch, "vocab size " + std::to_string(p_knn.size()) + " vs " +
                                        std::to_string(p_model.size()));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::invalid_argument, "lambda must lie in [0, 1]");
  if (p_knn.is_no_neighbors()) return p_model;
  std::vector<double> out(p_model.size());
  const double keep = 1.0 - lambda;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda * p_knn[i] + keep * p_model[i];
  return TokenDistribution(std::move(out));
}

Retrieval retrieve(const Datastore& store, std::span<const float> query, const KnnConfig& config) {
  Retrieval r;
  r.neighbors = store.search(query, config.k, SearchOptions{config.nprobe});
  std::vector<double> distances;
  distances.reserve(r.neighbors.size());
  r.tokens.reserve(r.neighbors.size());
  for (const auto& n : r.neighbors) {
    distances.push_back(n.distance);
    r.tokens.push_back(store.value(n.id));
  }
  auto weights = neighbor_probs(distances, config.temperature);
  r.p_knn = weights ? aggregate(r.tokens, *weights, store.vocab_size())
                    : TokenDistribution::no_neighbors(store.vocab_size());
  return r;
}

}  // namespace knnasr
