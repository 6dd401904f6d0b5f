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

// Slow, independently written reference implementations used by the tests.
// None of these call into the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

struct Hit {
  std::uint64_t id;
  long double distance;
};

/// Full scan in long double, sorted by (distance, id).
inline std::vector<Hit> brute_knn(const std::vector<float>& data, std::size_t dim, const float* query,
                                  std::size_t k) {
  const std::size_t n = data.size() / dim;
  std::vector<Hit> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double d = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      const long double diff = static_cast<long double>(data[i * dim + j]) - query[j];
      d += diff * diff;
    }
    all[i] = {i, d};
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  all.resize(std::min(k, n));
  return all;
}

/// Neighbor weights written as w_i = 1 / sum_j exp((d_i - d_j) / T), which
/// needs no max-shift and never overflows for the nearest neighbor.
inline std::vector<long double> softmax_weights(const std::vector<double>& d, double temperature) {
  std::vector<long double> w(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    long double denom = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      denom += std::exp((static_cast<long double>(d[i]) - d[j]) / temperature);
    }
    w[i] = 1.0L / denom;
  }
  return w;
}

/// p(y) computed one vocabulary entry at a time.
inline std::vector<long double> aggregate(const std::vector<std::uint32_t>& tokens,
                                          const std::vector<long double>& weights, std::size_t vocab) {
  std::vector<long double> p(vocab, 0.0L);
  for (std::size_t y = 0; y < vocab; ++y) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == y) p[y] += weights[i];
    }
  }
  return p;
}

inline std::vector<long double> mix(const std::vector<long double>& knn, const std::vector<double>& model,
                                    double lambda) {
  std::vector<long double> p(model.size());
  for (std::size_t y = 0; y < model.size(); ++y) p[y] = lambda * knn[y] + (1.0L - lambda) * model[y];
  return p;
}

struct Counts {
  std::size_t s = 0, d = 0, i = 0;
  std::size_t errors() const { return s + d + i; }
  bool operator<(const Counts& o) const { return std::tie(s, d, i) < std::tie(o.s, o.d, o.i); }
  bool operator==(const Counts& o) const { return std::tie(s, d, i) == std::tie(o.s, o.d, o.i); }
};

/// Enumerates every alignment path of ref against hyp and returns the minimum
/// error count together with every (S, D, I) split that reaches it.
/// Exponential; keep inputs short.
inline std::pair<std::size_t, std::set<Counts>> exhaustive_alignment(const std::vector<std::string>& ref,
                                                                     const std::vector<std::string>& hyp) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::set<Counts> splits;
  Counts cur;
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t r, std::size_t h) {
    if (cur.errors() > best) return;
    if (r == ref.size() && h == hyp.size()) {
      if (cur.errors() < best) {
        best = cur.errors();
        splits.clear();
      }
      splits.insert(cur);
      return;
    }
    if (r < ref.size() && h < hyp.size()) {
      const bool sub = ref[r] != hyp[h];
      cur.s += sub;
      walk(r + 1, h + 1);
      cur.s -= sub;
    }
    if (r < ref.size()) {
      ++cur.d;
      walk(r + 1, h);
      --cur.d;
    }
    if (h < hyp.size()) {
      ++cur.i;
      walk(r, h + 1);
      --cur.i;
    }
  };
  walk(0, 0);
  return {best, splits};
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Upper tail of the chi-square distribution for small even/odd dof via the
/// regularized incomplete gamma series.
inline double chi_square_sf(double x, int dof) {
  const double a = dof / 2.0;
  const double z = x / 2.0;
  if (z <= 0) return 1.0;
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= z / (a + n);
    sum += term;
    if (term < sum * 1e-15) break;
  }
  const double lower = std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
  return 1.0 - lower;
}

}  // namespace oracle
