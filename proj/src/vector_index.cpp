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

#include "knnasr/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>

#include "knnasr/error.hpp"
#include "knnasr/random.hpp"

namespace knnasr {

namespace {

constexpr std::string_view kIndexMagic{"KNNIDX1\0", 8};

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

// Bounded max-heap keeping the k best (distance, id) pairs.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}

  void offer(std::uint64_t id, double distance) {
    const Neighbor n{id, distance};
    if (heap_.size() < k_) {
      heap_.push_back(n);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(n, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = n;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  std::vector<Neighbor> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Neighbor> heap_;
};

std::size_t nearest_centroid(const VectorSet& centroids, std::span<const float> v, double* out_distance) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.count(); ++c) {
    const double d = squared_l2(centroids.row(c), v);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (out_distance) *out_distance = best_d;
  return best;
}

VectorSet kmeanspp_seed(const VectorSet& data, std::size_t nlist, Rng& rng) {
  const std::size_t n = data.count();
  VectorSet centroids(data.dim());
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::size_t pick = uniform_index(rng, n);
  for (std::size_t c = 0; c < nlist; ++c) {
    centroids.append(data.row(pick));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min(min_d[i], squared_l2(data.row(i), data.row(pick)));
      total += min_d[i];
    }
    if (c + 1 == nlist) break;
    if (total <= 0.0) {
      // Every point coincides with a chosen center; fall back to uniform draws.
      pick = uniform_index(rng, n);
      continue;
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += min_d[i];
      if (acc > target && min_d[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

}  // namespace

VectorSet::VectorSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(Errc::invalid_argument, "vector dim must be positive");
}

VectorSet::VectorSet(std::size_t dim, std::vector<float> data) : VectorSet(dim) {
  if (data.size() % dim != 0) {
    throw Error(Errc::dim_mismatch, std::to_string(data.size()) + " floats is not a multiple of dim " +
                                        std::to_string(dim));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(Errc::non_finite, "row " + std::to_string(i / dim) + " component " +
                                        std::to_string(i % dim) + " is not finite");
    }
  }
  data_ = std::move(data);
}

void VectorSet::append(std::span<const float> v) {
  if (v.size() != dim_) {
    throw Error(Errc::dim_mismatch, "expected dim " + std::to_string(dim_) + ", got " + std::to_string(v.size()));
  }
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) {
      throw Error(Errc::non_finite, "row " + std::to_string(count()) + " component " + std::to_string(j) +
                                        " is not finite");
    }
  }
  data_.insert(data_.end(), v.begin(), v.end());
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

const char* index_kind_name(IndexKind kind) noexcept {
  switch (kind) {
    case IndexKind::flat: return "flat";
    case IndexKind::ivf: return "ivf";
  }
  return "unknown";
}

VectorIndex::VectorIndex(std::shared_ptr<const VectorSet> vectors) : vectors_(std::move(vectors)) {
  if (!vectors_) throw Error(Errc::invalid_argument, "index needs a vector set");
}

void VectorIndex::check_query(std::span<const float> query, std::size_t k) const {
  if (k == 0) throw Error(Errc::invalid_argument, "k must be >= 1");
  if (query.size() != dim()) {
    throw Error(Errc::dim_mismatch, "query dim " + std::to_string(query.size()) + " != index dim " +
                                        std::to_string(dim()));
  }
  for (float x : query) {
    if (!std::isfinite(x)) throw Error(Errc::non_finite, "query has a non-finite component");
  }
}

FlatIndex::FlatIndex(std::shared_ptr<const VectorSet> vectors) : VectorIndex(std::move(vectors)) {}

std::vector<Neighbor> FlatIndex::search(std::span<const float> query, std::size_t k,
                                        const SearchOptions&) const {
  check_query(query, k);
  TopK top(k);
  const auto& vs = *vectors_;
  for (std::size_t i = 0; i < vs.count(); ++i) top.offer(i, squared_l2(vs.row(i), query));
  return std::move(top).sorted();
}

void FlatIndex::write(ByteWriter& out) const {
  out.put_magic(kIndexMagic);
  out.put_u8(static_cast<std::uint8_t>(IndexKind::flat));
  out.put_u32(static_cast<std::uint32_t>(dim()));
  out.put_u64(count());
}

IvfIndex::IvfIndex(std::shared_ptr<const VectorSet> vectors, VectorSet centroids,
                   std::vector<std::vector<std::uint64_t>> postings)
    : VectorIndex(std::move(vectors)), centroids_(std::move(centroids)), postings_(std::move(postings)) {
  if (centroids_.dim() != dim()) throw Error(Errc::dim_mismatch, "centroid dim differs from vector dim");
  if (centroids_.count() == 0 || postings_.size() != centroids_.count()) {
    throw Error(Errc::count_mismatch, "need one posting list per centroid");
  }
  std::vector<bool> seen(count(), false);
  std::size_t total = 0;
  for (const auto& list : postings_) {
    for (auto id : list) {
      if (id >= count() || seen[id]) {
        throw Error(Errc::invalid_value, "posting id " + std::to_string(id) + " out of range or duplicated");
      }
      seen[id] = true;
    }
    total += list.size();
  }
  if (total != count()) {
    throw Error(Errc::count_mismatch, "postings cover " + std::to_string(total) + " of " +
                                          std::to_string(count()) + " vectors");
  }
}

std::unique_ptr<IvfIndex> IvfIndex::build(std::shared_ptr<const VectorSet> vectors, std::size_t nlist,
                                          std::uint64_t seed, const KMeansOptions& kmeans) {
  if (!vectors) throw Error(Errc::invalid_argument, "index needs a vector set");
  const VectorSet& data = *vectors;
  const std::size_t n = data.count();
  const std::size_t dim = data.dim();
  if (nlist == 0) throw Error(Errc::invalid_argument, "nlist must be >= 1");
  if (nlist > n) {
    throw Error(Errc::invalid_argument, "nlist " + std::to_string(nlist) + " exceeds vector count " +
                                            std::to_string(n));
  }

  Rng rng(seed);
  VectorSet centroids = kmeanspp_seed(data, nlist, rng);
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> assign_d(n, 0.0);

  for (std::size_t iter = 0; iter < kmeans.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) assign[i] = nearest_centroid(centroids, data.row(i), &assign_d[i]);

    std::vector<double> sums(nlist * dim, 0.0);
    std::vector<std::size_t> sizes(nlist, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = data.row(i);
      double* dst = sums.data() + assign[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) dst[j] += row[j];
      ++sizes[assign[i]];
    }

    std::vector<float> next(nlist * dim);
    std::vector<bool> reseeded(n, false);
    for (std::size_t c = 0; c < nlist; ++c) {
      float* dst = next.data() + c * dim;
      if (sizes[c] == 0) {
        // Re-seed from the point farthest from its centroid (lowest id on ties).
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!reseeded[i] && assign_d[i] > far_d) {
            far_d = assign_d[i];
            far = i;
          }
        }
        reseeded[far] = true;
        auto row = data.row(far);
        std::copy(row.begin(), row.end(), dst);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        dst[j] = static_cast<float>(sums[c * dim + j] / static_cast<double>(sizes[c]));
      }
    }

    VectorSet updated(dim, std::move(next));
    double max_shift = 0.0;
    for (std::size_t c = 0; c < nlist; ++c) {
      max_shift = std::max(max_shift, std::sqrt(squared_l2(updated.row(c), centroids.row(c))));
    }
    centroids = std::move(updated);
    if (max_shift < kmeans.shift_tolerance) break;
  }

  std::vector<std::vector<std::uint64_t>> postings(nlist);
  for (std::size_t i = 0; i < n; ++i) postings[nearest_centroid(centroids, data.row(i), nullptr)].push_back(i);
  return std::make_unique<IvfIndex>(std::move(vectors), std::move(centroids), std::move(postings));
}

std::vector<Neighbor> IvfIndex::search(std::span<const float> query, std::size_t k,
                                       const SearchOptions& options) const {
  check_query(query, k);
  if (options.nprobe == 0) throw Error(Errc::invalid_argument, "nprobe must be >= 1");
  const std::size_t probes = std::min(options.nprobe, nlist());

  TopK cells(probes);
  for (std::size_t c = 0; c < nlist(); ++c) cells.offer(c, squared_l2(centroids_.row(c), query));

  TopK top(k);
  const auto& vs = *vectors_;
  for (const auto& cell : std::move(cells).sorted()) {
    for (auto id : postings_[cell.id]) top.offer(id, squared_l2(vs.row(id), query));
  }
  return std::move(top).sorted();
}

void IvfIndex::write(ByteWriter& out) const {
  out.put_magic(kIndexMagic);
  out.put_u8(static_cast<std::uint8_t>(IndexKind::ivf));
  out.put_u32(static_cast<std::uint32_t>(dim()));
  out.put_u64(count());
  out.put_u32(static_cast<std::uint32_t>(nlist()));
  out.put_f32s(centroids_.data());
  for (const auto& list : postings_) {
    out.put_u64(list.size());
    for (auto id : list) out.put_u64(id);
  }
}

std::unique_ptr<VectorIndex> build_index(std::shared_ptr<const VectorSet> vectors, const IndexSpec& spec) {
  switch (spec.kind) {
    case IndexKind::flat: return std::make_unique<FlatIndex>(std::move(vectors));
    case IndexKind::ivf: return IvfIndex::build(std::move(vectors), spec.nlist, spec.seed);
  }
  throw Error(Errc::invalid_argument, "unknown index kind");
}

std::unique_ptr<VectorIndex> read_index(ByteReader& in, std::shared_ptr<const VectorSet> vectors) {
  in.expect_magic(kIndexMagic);
  const auto kind = in.u8();
  const auto dim = in.u32();
  const auto count = in.u64();
  if (dim != vectors->dim()) {
    throw Error(Errc::count_mismatch, in.where("index dim " + std::to_string(dim) + " != vector dim " +
                                               std::to_string(vectors->dim())));
  }
  if (count != vectors->count()) {
    throw Error(Errc::count_mismatch, in.where("index count " + std::to_string(count) + " != vector count " +
                                               std::to_string(vectors->count())));
  }
  if (kind == static_cast<std::uint8_t>(IndexKind::flat)) return std::make_unique<FlatIndex>(std::move(vectors));
  if (kind != static_cast<std::uint8_t>(IndexKind::ivf)) {
    throw Error(Errc::invalid_value, in.where("unknown index kind " + std::to_string(kind)));
  }

  const auto nlist = in.u32();
  if (nlist == 0 || nlist > count) {
    throw Error(Errc::invalid_value, in.where("nlist " + std::to_string(nlist) + " invalid for count " +
                                              std::to_string(count)));
  }
  auto raw = in.f32s(static_cast<std::size_t>(nlist) * dim);
  std::optional<VectorSet> centroids;
  try {
    centroids.emplace(dim, std::move(raw));
  } catch (const Error& e) {
    throw Error(Errc::invalid_value, in.where(std::string("centroids: ") + e.what()));
  }
  std::vector<std::vector<std::uint64_t>> postings(nlist);
  std::uint64_t total = 0;
  for (auto& list : postings) {
    const auto len = in.u64();
    total += len;
    if (total > count) {
      throw Error(Errc::count_mismatch, in.where("posting lists exceed vector count"));
    }
    if (len > in.remaining() / 8) throw Error(Errc::truncated, in.where("posting list"));
    list.resize(len);
    for (auto& id : list) id = in.u64();
  }
  if (total != count) {
    throw Error(Errc::count_mismatch, in.where("posting lists cover " + std::to_string(total) + " of " +
                                               std::to_string(count) + " vectors"));
  }
  try {
    return std::make_unique<IvfIndex>(std::move(vectors), std::move(*centroids), std::move(postings));
  } catch (const Error& e) {
    if (e.is_format_error()) throw;
    throw Error(Errc::invalid_value, in.where(e.what()));
  }
}

Bytes serialize_index(const VectorIndex& index) {
  ByteWriter out;
  index.write(out);
  return std::move(out).take();
}

}  // namespace knnasr
