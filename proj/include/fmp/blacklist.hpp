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

#include "fmp/alerts.hpp"
#include "fmp/ipv4.hpp"
#include "fmp/store.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fmp {

enum class PolicyKind { fmp_topn, fmp_threshold, gwol, third_party, combined };

std::string_view to_string(PolicyKind kind);

struct BlacklistPolicy {
  PolicyKind kind = PolicyKind::fmp_topn;
  std::size_t n = 0;       // topn and gwol
  double threshold = 0;    // fmp_threshold
  int window_days = 0;     // gwol
};

struct BlacklistEntry {
  Ipv4 ip;
  // FMP score, GWOL alert count, or 1 for third-party lists.
  double score = 0;
  // Names of the lists that contributed this IP (one unless combined).
  std::vector<std::string> sources;
};

struct Blacklist {
  std::string name;
  Timestamp generated_at{};
  Category category = Category::scan;
  BlacklistPolicy policy;
  std::vector<BlacklistEntry> entries;

  std::size_t size() const { return entries.size(); }
};

struct ScoredIp {
  Ipv4 ip;
  double score = 0;
};

/// Score descending, ties by ascending IP; the first n entries.
Blacklist fmp_topn(std::span<const ScoredIp> scored, std::size_t n, Timestamp t0,
                   Category category);

/// Every IP scoring >= threshold, in the same order as fmp_topn.
Blacklist fmp_threshold(std::span<const ScoredIp> scored, double threshold, Timestamp t0,
                        Category category);

/// Most active IPs by alert count of `category` within [t0 - window_days, t0);
/// ties go to the larger total volume, then the smaller IP.
Blacklist gwol(const AlertStore& store, Timestamp t0, int window_days, std::size_t n,
               Category category);

/// Plain IP list, one address or CIDR per line; '#' starts a comment. CIDRs of
/// /24 and longer are expanded, shorter ones rejected. Order of first
/// appearance is kept.
Blacklist read_third_party(std::istream& in, std::string name, Timestamp t0, Category category);

/// Set union. Entries are ordered by the best position they hold in any input
/// list, then by IP; every contributing list name is kept.
Blacklist union_blacklists(std::span<const Blacklist> lists);

struct HitReport {
  std::size_t list_size = 0;
  std::size_t hit_count = 0;
  double hit_rate = 0;
  std::size_t attackers_total = 0;
  double attackers_blocked_fraction = 0;
  double new_attacker_fraction = 0;
};

/// Scores the list against the day (t0, t0 + 24h], with t0 = generated_at.
/// An attacker is new when it has no `category` alert in [t0 - 7 days, t0).
HitReport evaluate_blacklist(const Blacklist& bl, const AlertStore& store, Category category);

/// bl.txt with one IP per line plus a <path>.json sidecar.
void write_blacklist(const Blacklist& bl, const std::filesystem::path& path);
Blacklist read_blacklist(const std::filesystem::path& path);

std::string to_json(const HitReport& report, int indent = 2);

} // namespace fmp
