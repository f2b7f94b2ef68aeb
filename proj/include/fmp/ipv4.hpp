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

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fmp {

class Ipv4 {
public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
               (std::uint32_t{c} << 8) | std::uint32_t{d}) {}

  // Strict dotted quad: four decimal octets of 1-3 digits, each <= 255.
  static std::optional<Ipv4> parse(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  constexpr std::array<std::uint8_t, 4> octets() const {
    return {static_cast<std::uint8_t>(value_ >> 24),
            static_cast<std::uint8_t>(value_ >> 16),
            static_cast<std::uint8_t>(value_ >> 8),
            static_cast<std::uint8_t>(value_)};
  }
  std::string to_string() const;

  constexpr auto operator<=>(const Ipv4&) const = default;

private:
  std::uint32_t value_ = 0;
};

/// Network address of the /24 containing an IP, e.g. 192.0.2.0 for 192.0.2.7.
class Prefix24 {
public:
  constexpr Prefix24() = default;
  constexpr explicit Prefix24(Ipv4 ip) : network_(ip.value() & 0xffffff00u) {}

  constexpr Ipv4 network() const { return Ipv4{network_}; }
  constexpr bool contains(Ipv4 ip) const {
    return (ip.value() & 0xffffff00u) == network_;
  }
  std::string to_string() const;

  constexpr auto operator<=>(const Prefix24&) const = default;

private:
  std::uint32_t network_ = 0;
};

struct Cidr {
  Ipv4 network;
  int length = 32;

  // "a.b.c.d/n" or a bare address (treated as /32). Host bits must be zero.
  static std::optional<Cidr> parse(std::string_view text);

  std::uint32_t mask() const {
    return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  }
  bool contains(Ipv4 ip) const {
    return (ip.value() & mask()) == network.value();
  }
  std::uint64_t size() const { return std::uint64_t{1} << (32 - length); }
  std::string to_string() const;

  auto operator<=>(const Cidr&) const = default;
};

/// Longest-prefix-match table. One hash map per prefix length; a lookup probes
/// from /32 down to /0 and stops at the first hit.
template <typename T>
class PrefixTable {
public:
  void insert(const Cidr& cidr, T value) {
    auto& level = levels_[static_cast<std::size_t>(cidr.length)];
    auto [it, inserted] = level.insert_or_assign(cidr.network.value(), std::move(value));
    (void)it;
    if (inserted)
      ++size_;
  }

  const T* lookup(Ipv4 ip) const {
    if (size_ == 0)
      return nullptr;
    for (int len = 32; len >= 0; --len) {
      const auto& level = levels_[static_cast<std::size_t>(len)];
      if (level.empty())
        continue;
      std::uint32_t mask = len == 0 ? 0u : ~std::uint32_t{0} << (32 - len);
      if (auto it = level.find(ip.value() & mask); it != level.end())
        return &it->second;
    }
    return nullptr;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // Entries ordered by (network, length) for stable serialization.
  std::vector<std::pair<Cidr, T>> entries() const {
    std::vector<std::pair<Cidr, T>> out;
    out.reserve(size_);
    for (int len = 0; len <= 32; ++len)
      for (const auto& [net, value] : levels_[static_cast<std::size_t>(len)])
        out.emplace_back(Cidr{Ipv4{net}, len}, value);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

private:
  std::array<std::unordered_map<std::uint32_t, T>, 33> levels_;
  std::size_t size_ = 0;
};

} // namespace fmp

template <>
struct std::hash<fmp::Ipv4> {
  std::size_t operator()(const fmp::Ipv4& ip) const noexcept {
    return std::hash<std::uint32_t>{}(ip.value());
  }
};

template <>
struct std::hash<fmp::Prefix24> {
  std::size_t operator()(const fmp::Prefix24& p) const noexcept {
    return std::hash<std::uint32_t>{}(p.network().value());
  }
};
