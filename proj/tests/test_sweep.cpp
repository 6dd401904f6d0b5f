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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "knnasr/error.hpp"
#include "knnasr/sweep.hpp"
#include "support/oracles.hpp"

using namespace knnasr;

namespace {

// Synthetic dev score: a bowl around (k=8, T=10, lambda=0.5).
WerBreakdown bowl(const KnnConfig& c) {
  WerBreakdown b;
  b.reference_words = 1000;
  b.substitutions = 100 + static_cast<std::size_t>(std::abs(static_cast<double>(c.k) - 8.0)) * 3 +
                    static_cast<std::size_t>(std::abs(std::log10(c.temperature) - 1.0) * 5) +
                    static_cast<std::size_t>(std::abs(c.lambda - 0.5) * 100);
  return b;
}

}  // namespace

TEST(Sweep, DefaultGridHas36RowsInLexicographicOrder) {
  const SweepSpec spec;
  EXPECT_EQ(spec.grid_size(), 36u);
  const auto r = run_sweep(spec, bowl);
  ASSERT_EQ(r.rows.size(), 36u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto& a = r.rows[i - 1].config;
    const auto& b = r.rows[i].config;
    EXPECT_TRUE(std::tie(a.k, a.temperature, a.lambda) < std::tie(b.k, b.temperature, b.lambda));
  }
  ASSERT_TRUE(r.winner);
  EXPECT_EQ(r.rows[*r.winner].config, (KnnConfig{8, 10.0, 0.5, 8}));
  EXPECT_EQ(r.ties.size(), 1u);
}

TEST(Sweep, WorkersDoNotChangeResults) {
  SweepSpec spec;
  spec.workers = 1;
  const auto a = run_sweep(spec, bowl);
  spec.workers = 5;
  const auto b = run_sweep(spec, bowl);
  EXPECT_EQ(sweep_csv(a), sweep_csv(b));
  EXPECT_EQ(sweep_summary_json(a, "flat"), sweep_summary_json(b, "flat"));
}

TEST(Sweep, FailedRowsAreRecordedNotFatal) {
  const auto r = run_sweep(SweepSpec{}, [](const KnnConfig& c) {
    if (c.k == 16) throw Error(Errc::io, "decoder crashed");
    return bowl(c);
  });
  std::size_t failed = 0;
  for (const auto& row : r.rows) failed += row.ok ? 0 : 1;
  EXPECT_EQ(failed, 12u);
  ASSERT_TRUE(r.winner);
  const auto j = nlohmann::json::parse(sweep_summary_json(r, "flat"));
  EXPECT_EQ(j["failed_rows"], 12);
  EXPECT_EQ(j["failures"].size(), 12u);
  EXPECT_NE(sweep_csv(r).find("16,1,0.3,failed"), std::string::npos);
}

TEST(Sweep, AllFailedGivesNoWinner) {
  const auto r = run_sweep(SweepSpec{}, [](const KnnConfig&) -> WerBreakdown { throw std::runtime_error("x"); });
  EXPECT_FALSE(r.winner);
  EXPECT_EQ(nlohmann::json::parse(sweep_summary_json(r, "ivf"))["winner"], nullptr);
}

TEST(Sweep, CsvShape) {
  const auto csv = sweep_csv(run_sweep(SweepSpec{}, bowl));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,temperature,lambda,status,substitutions,deletions,insertions,reference_words,dev_wer");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("4,1,0.3,ok,", 0), 0u) << line;
  std::size_t rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 36u);
}

TEST(Sweep, ValidationRejectsBadGrids) {
  SweepSpec s;
  s.lambdas = {0.3, 0.3};
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.lambdas = {1.5};
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.temperatures = {};
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.ks = {0};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Sweep, LambdaOnlyMode) {
  const auto r = lambda_only_sweep(4, 1.0, {0.3, 0.4, 0.5, 0.6}, 0, bowl, 1);
  EXPECT_EQ(r.rows.size(), 4u);
  EXPECT_TRUE(r.lambda_only);
  EXPECT_EQ(r.rows[*r.winner].config.lambda, 0.5);
  EXPECT_EQ(nlohmann::json::parse(sweep_summary_json(r, "flat"))["mode"], "lambda_only");
}

TEST(Sweep, TiesAreBrokenUniformly) {
  // Three configurations share the minimum.
  const auto tie3 = [](const KnnConfig& c) {
    WerBreakdown b;
    b.reference_words = 100;
    b.substitutions = (c.k == 8 && c.temperature == 10.0) && c.lambda != 0.6 ? 5 : 9;
    return b;
  };
  std::map<std::size_t, int> counts;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    SweepSpec spec;
    spec.seed = static_cast<std::uint64_t>(s);
    const auto r = run_sweep(spec, tie3);
    ASSERT_EQ(r.ties.size(), 3u);
    ++counts[*r.winner];
  }
  ASSERT_EQ(counts.size(), 3u);
  double chi2 = 0.0;
  for (const auto& [row, n] : counts) chi2 += (n - seeds / 3.0) * (n - seeds / 3.0) / (seeds / 3.0);
  EXPECT_GT(oracle::chi_square_sf(chi2, 2), 0.01) << "chi2 " << chi2;
}

TEST(BreakTie, Basics) {
  const std::vector<std::size_t> one{7};
  EXPECT_EQ(break_tie(one, 123), 7u);
  EXPECT_THROW(break_tie({}, 1), Error);
  const std::vector<std::size_t> c{2, 5, 9};
  EXPECT_EQ(break_tie(c, 42), break_tie(c, 42));
}

TEST(ChiSquare, OracleMatchesKnownQuantiles) {
  EXPECT_NEAR(oracle::chi_square_sf(9.21034, 2), 0.01, 1e-5);
  EXPECT_NEAR(oracle::chi_square_sf(3.84146, 1), 0.05, 1e-5);
  EXPECT_NEAR(oracle::chi_square_sf(43.82, 19), 0.001, 1e-4);
}
