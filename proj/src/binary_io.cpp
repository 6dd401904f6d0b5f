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

#include "knnasr/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <system_error>

#include "knnasr/error.hpp"

namespace knnasr {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::dim_mismatch: return "dim_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::out_of_range: return "out_of_range";
    case Errc::not_found: return "not_found";
    case Errc::io: return "io";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated: return "truncated";
    case Errc::count_mismatch: return "count_mismatch";
    case Errc::invalid_value: return "invalid_value";
    case Errc::trailing_data: return "trailing_data";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

void ByteWriter::put_bytes(std::span<const std::uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::put_magic(std::string_view magic) {
  for (char c : magic) buf_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::put_u8(std::uint8_t v) { buf_.push_back(v); }

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_f32s(std::span<const float> values) {
  buf_.reserve(buf_.size() + 4 * values.size());
  for (float v : values) put_f32(v);
}

void ByteWriter::put_u32s(std::span<const std::uint32_t> values) {
  buf_.reserve(buf_.size() + 4 * values.size());
  for (auto v : values) put_u32(v);
}

void ByteWriter::put_string(std::string_view s) {
  put_u32(static_cast<std::uint32_t>(s.size()));
  for (char c : s) buf_.push_back(static_cast<std::uint8_t>(c));
}

std::string ByteReader::where(std::string_view what) const {
  std::string out;
  if (!context_.empty()) out += context_ + ": ";
  out += std::string(what) + " at offset " + std::to_string(pos_);
  return out;
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n, std::string_view what) {
  if (n > remaining()) {
    throw Error(Errc::truncated, where(std::string(what) + " needs " + std::to_string(n) +
                                       " bytes, " + std::to_string(remaining()) + " left"));
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_magic(std::string_view magic) {
  if (remaining() < magic.size()) {
    throw Error(Errc::bad_magic, where("file shorter than magic"));
  }
  auto got = data_.subspan(pos_, magic.size());
  if (std::memcmp(got.data(), magic.data(), magic.size()) != 0) {
    throw Error(Errc::bad_magic, where("magic mismatch"));
  }
  pos_ += magic.size();
}

std::uint8_t ByteReader::u8() { return take(1, "u8")[0]; }

std::uint32_t ByteReader::u32() {
  auto b = take(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = take(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<float> ByteReader::f32s(std::size_t n) {
  if (n > remaining() / 4) {
    throw Error(Errc::truncated, where("float block of " + std::to_string(n) + " values"));
  }
  std::vector<float> out(n);
  for (auto& v : out) v = f32();
  return out;
}

std::vector<std::uint32_t> ByteReader::u32s(std::size_t n) {
  if (n > remaining() / 4) {
    throw Error(Errc::truncated, where("u32 block of " + std::to_string(n) + " values"));
  }
  std::vector<std::uint32_t> out(n);
  for (auto& v : out) v = u32();
  return out;
}

std::string ByteReader::string() {
  const auto len = u32();
  auto b = take(len, "string");
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

void ByteReader::expect_end() const {
  if (!at_end()) {
    throw Error(Errc::trailing_data, where(std::to_string(remaining()) + " unexpected bytes"));
  }
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io, "read failed: " + path.string());
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::io, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::io, "cannot rename onto " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace knnasr
