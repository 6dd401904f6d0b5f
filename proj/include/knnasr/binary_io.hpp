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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace knnasr {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian serializer into a growable byte buffer.
class ByteWriter {
 public:
  void put_bytes(std::span<const std::uint8_t> bytes);
  void put_magic(std::string_view magic);  // writes magic.size() bytes verbatim
  void put_u8(std::uint8_t v);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f32(float v);
  void put_f64(double v);
  void put_f32s(std::span<const float> values);
  void put_u32s(std::span<const std::uint32_t> values);
  /// u32 byte length followed by UTF-8 bytes.
  void put_string(std::string_view s);

  const Bytes& bytes() const noexcept { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

/// Bounds-checked little-endian reader. Every short read throws Errc::truncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data, std::string context = {})
      : data_(data), context_(std::move(context)) {}

  void expect_magic(std::string_view magic);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::vector<float> f32s(std::size_t n);
  std::vector<std::uint32_t> u32s(std::size_t n);
  std::string string();

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }
  /// Throws Errc::trailing_data unless the whole buffer was consumed.
  void expect_end() const;

  /// Prefix a message with the reader's context and current offset.
  std::string where(std::string_view what) const;

 private:
  std::span<const std::uint8_t> take(std::size_t n, std::string_view what);

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string context_;
};

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so a
/// failed write never leaves a partial artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace knnasr
