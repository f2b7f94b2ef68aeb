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

#include "fmp/ipv4.hpp"

#include <charconv>

namespace fmp {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (p == end || *p != '.')
        return std::nullopt;
      ++p;
    }
    const char* start = p;
    while (p != end && *p >= '0' && *p <= '9')
      ++p;
    auto digits = p - start;
    if (digits < 1 || digits > 3)
      return std::nullopt;
    unsigned octet = 0;
    std::from_chars(start, p, octet);
    if (octet > 255)
      return std::nullopt;
    value = (value << 8) | octet;
  }
  if (p != end)
    return std::nullopt;
  return Ipv4{value};
}

std::string Ipv4::to_string() const {
  auto o = octets();
  std::string out;
  out.reserve(15);
  for (int i = 0; i < 4; ++i) {
    if (i)
      out.push_back('.');
    out += std::to_string(o[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::string Prefix24::to_string() const { return network().to_string() + "/24"; }

std::optional<Cidr> Cidr::parse(std::string_view text) {
  auto slash = text.find('/');
  auto ip = Ipv4::parse(text.substr(0, slash));
  if (!ip)
    return std::nullopt;
  int length = 32;
  if (slash != std::string_view::npos) {
    auto len_text = text.substr(slash + 1);
    if (len_text.empty() || len_text.size() > 2)
      return std::nullopt;
    auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), length);
    if (ec != std::errc{} || ptr != len_text.data() + len_text.size() || length < 0 || length > 32)
      return std::nullopt;
  }
  Cidr cidr{*ip, length};
  if ((ip->value() & cidr.mask()) != ip->value())
    return std::nullopt;
  return cidr;
}

std::string Cidr::to_string() const {
  return network.to_string() + "/" + std::to_string(length);
}

} // namespace fmp
