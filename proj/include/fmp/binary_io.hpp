// Copyright 2026 The fmpscore Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian framing shared by the snapshot and model containers:
//   magic[4] | version u8 | payload ... | crc32 u32 (over everything before it)

#include "fmp/error.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fmp {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

/// CRC-32 of a whole file, rendered as 8 lowercase hex digits.
std::string file_checksum(const std::filesystem::path& path);

class BinaryWriter {
public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

  /// Appends the CRC trailer and writes the file atomically (tmp + rename).
  void finish_to_file(const std::filesystem::path& path);

private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; every short read raises `corrupt`.
class BinaryReader {
public:
  BinaryReader(std::span<const std::uint8_t> bytes, Errc corrupt)
      : data_(bytes), corrupt_(corrupt) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint32_t u32() {
    auto p = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t{p[static_cast<std::size_t>(i)]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto p = need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t{p[static_cast<std::size_t>(i)]} << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    auto n = u32();
    auto p = need(n);
    return std::string(reinterpret_cast<const char*>(p.data()), p.size());
  }
  std::string raw(std::size_t n) {
    auto p = need(n);
    return std::string(reinterpret_cast<const char*>(p.data()), p.size());
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  [[noreturn]] void corrupt(const std::string& what) const { fail(corrupt_, what); }

private:
  std::span<const std::uint8_t> need(std::size_t n) {
    if (data_.size() - pos_ < n)
      fail(corrupt_, "unexpected end of data");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  Errc corrupt_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Reads a framed container: checks magic and CRC, then the version byte.
/// Returns the payload (after the version byte, before the trailer).
std::vector<std::uint8_t> open_container(const std::filesystem::path& path,
                                         std::string_view magic, std::uint8_t version,
                                         Errc corrupt);

/// Writes `contents` to `path` through a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

} // namespace fmp
