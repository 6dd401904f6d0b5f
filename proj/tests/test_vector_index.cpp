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
#include <limits>
#include <set>

#include "knnasr/binary_io.hpp"
#include "knnasr/error.hpp"
#include "knnasr/vector_index.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace knnasr;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::internal;
}

}  // namespace

TEST(VectorSet, RejectsRaggedAndNonFinite) {
  EXPECT_EQ(code_of([] { VectorSet(3, std::vector<float>{1, 2, 3, 4}); }), Errc::dim_mismatch);
  EXPECT_EQ(code_of([] { VectorSet(0); }), Errc::invalid_argument);
  std::vector<float> bad{0, 1, 2, 3, std::numeric_limits<float>::quiet_NaN(), 5};
  try {
    VectorSet(3, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
  VectorSet v(2);
  const std::vector<float> inf{1.0f, std::numeric_limits<float>::infinity()};
  EXPECT_EQ(code_of([&] { v.append(inf); }), Errc::non_finite);
  EXPECT_EQ(code_of([&] { v.append(std::vector<float>{1, 2, 3}); }), Errc::dim_mismatch);
}

TEST(SquaredL2, MatchesHandValue) {
  const std::vector<float> a{1, 2, 3}, b{4, 6, 3};
  EXPECT_DOUBLE_EQ(squared_l2(a, b), 25.0);
  EXPECT_DOUBLE_EQ(squared_l2(a, a), 0.0);
}

TEST(FlatIndex, MatchesBruteForce) {
  const std::size_t dim = 16;
  const auto data = fixtures::uniform_cloud(300, dim, 1);
  FlatIndex index(fixtures::vector_set(dim, data));
  const auto queries = fixtures::uniform_cloud(20, dim, 2);
  for (std::size_t q = 0; q < 20; ++q) {
    std::span<const float> query(queries.data() + q * dim, dim);
    for (std::size_t k : {1, 5, 17}) {
      const auto got = index.search(query, k);
      const auto want = oracle::brute_knn(data, dim, query.data(), k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].id, want[i].id);
        EXPECT_NEAR(got[i].distance, static_cast<double>(want[i].distance), 1e-9);
      }
    }
  }
}

TEST(FlatIndex, TiesGoToLowerId) {
  // Four copies of the same point at ids 0, 2, 4, 6.
  std::vector<float> data;
  for (int i = 0; i < 8; ++i) {
    data.push_back(i % 2 == 0 ? 1.0f : 5.0f);
    data.push_back(0.0f);
  }
  FlatIndex index(fixtures::vector_set(2, data));
  const std::vector<float> q{1.0f, 0.0f};
  const auto got = index.search(q, 3);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].id, 0u);
  EXPECT_EQ(got[1].id, 2u);
  EXPECT_EQ(got[2].id, 4u);
}

TEST(FlatIndex, KLargerThanCountReturnsAll) {
  FlatIndex index(fixtures::vector_set(4, fixtures::uniform_cloud(5, 4, 3)));
  const auto q = fixtures::uniform_cloud(1, 4, 4);
  EXPECT_EQ(index.search(q, 50).size(), 5u);
}

TEST(FlatIndex, QueryValidation) {
  FlatIndex index(fixtures::vector_set(4, fixtures::uniform_cloud(5, 4, 3)));
  const std::vector<float> short_q{0, 0, 0};
  EXPECT_EQ(code_of([&] { index.search(short_q, 1); }), Errc::dim_mismatch);
  const std::vector<float> nan_q{0, 0, 0, std::numeric_limits<float>::quiet_NaN()};
  EXPECT_EQ(code_of([&] { index.search(nan_q, 1); }), Errc::non_finite);
  const std::vector<float> q{0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { index.search(q, 0); }), Errc::invalid_argument);
}

TEST(FlatIndex, EmptyIndexReturnsNothing) {
  FlatIndex index(std::make_shared<const VectorSet>(3));
  const std::vector<float> q{0, 0, 0};
  EXPECT_TRUE(index.search(q, 4).empty());
}

TEST(IvfIndex, FullProbeEqualsFlat) {
  const std::size_t dim = 8;
  const auto data = fixtures::uniform_cloud(400, dim, 5);
  auto vs = fixtures::vector_set(dim, data);
  FlatIndex flat(vs);
  const auto ivf = IvfIndex::build(vs, 10, 9);
  const auto queries = fixtures::uniform_cloud(25, dim, 6);
  for (std::size_t q = 0; q < 25; ++q) {
    std::span<const float> query(queries.data() + q * dim, dim);
    EXPECT_EQ(ivf->search(query, 7, {10}), flat.search(query, 7));
  }
}

TEST(IvfIndex, RecoversWellSeparatedBlobs) {
  const std::size_t dim = 4, clusters = 6, per = 30;
  const auto data = fixtures::blobs(clusters, per, dim, 11);
  const auto ivf = IvfIndex::build(fixtures::vector_set(dim, data), clusters, 3);
  // Every blob should land in exactly one list.
  std::set<std::size_t> sizes;
  for (const auto& list : ivf->postings()) {
    ASSERT_EQ(list.size(), per);
    std::set<std::uint64_t> blob;
    for (auto id : list) blob.insert(id / per);
    EXPECT_EQ(blob.size(), 1u);
  }
  // With one probe, a point's own blob is searched, so recall@5 is perfect.
  for (std::size_t c = 0; c < clusters; ++c) {
    std::span<const float> q(data.data() + c * per * dim, dim);
    const auto got = ivf->search(q, 5, {1});
    ASSERT_EQ(got.size(), 5u);
    for (const auto& n : got) EXPECT_EQ(n.id / per, c);
  }
}

TEST(IvfIndex, PostingsPartitionIds) {
  const auto data = fixtures::uniform_cloud(200, 6, 8);
  const auto ivf = IvfIndex::build(fixtures::vector_set(6, data), 12, 1);
  std::vector<int> seen(200, 0);
  for (const auto& list : ivf->postings()) {
    for (auto id : list) ++seen.at(id);
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(IvfIndex, DeterministicForSeed) {
  const auto data = fixtures::uniform_cloud(300, 6, 12);
  const auto a = IvfIndex::build(fixtures::vector_set(6, data), 8, 42);
  const auto b = IvfIndex::build(fixtures::vector_set(6, data), 8, 42);
  EXPECT_EQ(serialize_index(*a), serialize_index(*b));
  const auto c = IvfIndex::build(fixtures::vector_set(6, data), 8, 43);
  EXPECT_NE(serialize_index(*a), serialize_index(*c));
}

TEST(IvfIndex, DuplicatePointsStillFillEveryList) {
  // Only three distinct points but five lists: re-seeding keeps lists usable
  // and search still finds everything at full probe.
  std::vector<float> data;
  for (int i = 0; i < 30; ++i) {
    data.push_back(static_cast<float>(i % 3));
    data.push_back(0.0f);
  }
  auto vs = fixtures::vector_set(2, data);
  const auto ivf = IvfIndex::build(vs, 5, 2);
  const std::vector<float> q{1.0f, 0.0f};
  EXPECT_EQ(ivf->search(q, 30, {5}), FlatIndex(vs).search(q, 30));
}

TEST(IvfIndex, RejectsBadNlist) {
  auto vs = fixtures::vector_set(2, fixtures::uniform_cloud(4, 2, 1));
  EXPECT_EQ(code_of([&] { IvfIndex::build(vs, 0, 0); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { IvfIndex::build(vs, 5, 0); }), Errc::invalid_argument);
}

TEST(IndexFormat, RoundTripsBothKinds) {
  auto vs = fixtures::vector_set(5, fixtures::uniform_cloud(120, 5, 21));
  for (auto kind : {IndexKind::flat, IndexKind::ivf}) {
    const auto index = build_index(vs, IndexSpec{kind, 6, 4});
    const auto bytes = serialize_index(*index);
    ByteReader in(bytes, "index");
    const auto back = read_index(in, vs);
    in.expect_end();
    EXPECT_EQ(back->kind(), kind);
    EXPECT_EQ(serialize_index(*back), bytes);
  }
}

TEST(IndexFormat, StrictReaderErrors) {
  auto vs = fixtures::vector_set(5, fixtures::uniform_cloud(50, 5, 22));
  const auto bytes = serialize_index(*build_index(vs, IndexSpec{IndexKind::ivf, 4, 1}));
  const auto read = [&](Bytes b, std::shared_ptr<const VectorSet> v) {
    ByteReader in(b, "index");
    read_index(in, v);
  };
  Bytes magic = bytes;
  magic[0] ^= 0xff;
  EXPECT_EQ(code_of([&] { read(magic, vs); }), Errc::bad_magic);
  EXPECT_EQ(code_of([&] { read(Bytes(bytes.begin(), bytes.end() - 3), vs); }), Errc::truncated);
  auto fewer = fixtures::vector_set(5, fixtures::uniform_cloud(49, 5, 22));
  EXPECT_EQ(code_of([&] { read(bytes, fewer); }), Errc::count_mismatch);
  Bytes kind = bytes;
  kind[8] = 7;
  EXPECT_EQ(code_of([&] { read(kind, vs); }), Errc::invalid_value);
}
