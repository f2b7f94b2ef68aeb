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

#include "fmp/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace fmp {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    auto n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::string file_checksum(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc32_of(bytes));
  return buf;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad())
    fail(Errc::IoError, "read failed: " + path.string());
  return bytes;
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      fail(Errc::IoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
      fail(Errc::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(Errc::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

void BinaryWriter::finish_to_file(const std::filesystem::path& path) {
  auto crc = crc32_of(buf_);
  u32(crc);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(buf_.data()), buf_.size()));
}

std::vector<std::uint8_t> open_container(const std::filesystem::path& path,
                                         std::string_view magic, std::uint8_t version,
                                         Errc corrupt) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() < magic.size() + 1 + 4)
    fail(corrupt, "file too short: " + path.string());
  if (!std::equal(magic.begin(), magic.end(), bytes.begin()))
    fail(corrupt, "bad magic in " + path.string());
  const auto body = bytes.size() - 4;
  const std::span<const std::uint8_t> all(bytes);
  BinaryReader trailer(all.subspan(body), corrupt);
  if (trailer.u32() != crc32_of(all.first(body)))
    fail(corrupt, "checksum mismatch in " + path.string());
  auto found = bytes[magic.size()];
  if (found != version)
    fail(Errc::VersionMismatch, "unsupported format version " + std::to_string(found) +
                                    " (expected " + std::to_string(version) + ")");
  return {bytes.begin() + static_cast<std::ptrdiff_t>(magic.size() + 1),
          bytes.begin() + static_cast<std::ptrdiff_t>(body)};
}

} // namespace fmp
