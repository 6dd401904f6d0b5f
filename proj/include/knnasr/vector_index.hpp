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
#include <memory>
#include <span>
#include <vector>

#include "knnasr/binary_io.hpp"

namespace knnasr {

/// Dense row-major float32 matrix of `count` vectors with `dim` finite components each.
class VectorSet {
 public:
  explicit VectorSet(std::size_t dim);
  /// Takes ownership of `data` (count*dim floats). Rejects a ragged size or a
  /// non-finite component, naming the offending row.
  VectorSet(std::size_t dim, std::vector<float> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<const float> data() const noexcept { return data_; }

  void append(std::span<const float> v);

 private:
  std::size_t dim_;
  std::vector<float> data_;
};

/// One retrieval hit. `distance` is squared Euclidean.
struct Neighbor {
  std::uint64_t id = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Squared L2 accumulated in double. Zero iff the vectors are bit-equal
/// component-wise (up to signed zero).
double squared_l2(std::span<const float> a, std::span<const float> b);

enum class IndexKind : std::uint8_t { flat = 0, ivf = 1 };

const char* index_kind_name(IndexKind kind) noexcept;

struct SearchOptions {
  std::size_t nprobe = 8;  // IVF only
};

struct IndexSpec {
  IndexKind kind = IndexKind::flat;
  std::size_t nlist = 16;  // IVF only
  std::uint64_t seed = 0;  // IVF only
};

/// Read-only after construction; concurrent search() calls are safe.
class VectorIndex {
 public:
  virtual ~VectorIndex() = default;

  virtual IndexKind kind() const noexcept = 0;
  /// Up to k neighbors sorted by (distance, id) ascending.
  virtual std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                                       const SearchOptions& options = {}) const = 0;
  /// Serialized form `KNNIDX1\0` | u8 kind | u32 dim | u64 count | payload.
  /// The vectors themselves are not part of the payload.
  virtual void write(ByteWriter& out) const = 0;

  const VectorSet& vectors() const noexcept { return *vectors_; }
  std::size_t dim() const noexcept { return vectors_->dim(); }
  std::size_t count() const noexcept { return vectors_->count(); }

 protected:
  explicit VectorIndex(std::shared_ptr<const VectorSet> vectors);
  void check_query(std::span<const float> query, std::size_t k) const;

  std::shared_ptr<const VectorSet> vectors_;
};

class FlatIndex final : public VectorIndex {
 public:
  explicit FlatIndex(std::shared_ptr<const VectorSet> vectors);

  IndexKind kind() const noexcept override { return IndexKind::flat; }
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                               const SearchOptions& options = {}) const override;
  void write(ByteWriter& out) const override;
};

struct KMeansOptions {
  std::size_t max_iterations = 25;
  double shift_tolerance = 1e-4;  // stop once no centroid moves farther than this (L2)
};

/// Inverted-file index: vectors bucketed by nearest k-means centroid,
/// queries scan the `nprobe` nearest buckets.
class IvfIndex final : public VectorIndex {
 public:
  /// Trains nlist centroids with k-means++ seeding. Rejects nlist == 0 or
  /// nlist > count. Identical inputs produce an identical index.
  static std::unique_ptr<IvfIndex> build(std::shared_ptr<const VectorSet> vectors, std::size_t nlist,
                                         std::uint64_t seed, const KMeansOptions& kmeans = {});

  IvfIndex(std::shared_ptr<const VectorSet> vectors, VectorSet centroids,
           std::vector<std::vector<std::uint64_t>> postings);

  IndexKind kind() const noexcept override { return IndexKind::ivf; }
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                               const SearchOptions& options = {}) const override;
  void write(ByteWriter& out) const override;

  std::size_t nlist() const noexcept { return centroids_.count(); }
  const VectorSet& centroids() const noexcept { return centroids_; }
  const std::vector<std::vector<std::uint64_t>>& postings() const noexcept { return postings_; }

 private:
  VectorSet centroids_;
  std::vector<std::vector<std::uint64_t>> postings_;
};

std::unique_ptr<VectorIndex> build_index(std::shared_ptr<const VectorSet> vectors, const IndexSpec& spec);

/// Strict reader for the serialized index, bound to the vectors it indexes.
/// Throws the reader error classes on malformed input and count_mismatch when
/// the header disagrees with `vectors`.
std::unique_ptr<VectorIndex> read_index(ByteReader& in, std::shared_ptr<const VectorSet> vectors);

Bytes serialize_index(const VectorIndex& index);

}  // namespace knnasr
