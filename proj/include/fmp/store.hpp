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

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fmp {

/// Half-open time range [begin, end).
struct Interval {
  Timestamp begin;
  Timestamp end;

  bool contains(Timestamp t) const { return t >= begin && t < end; }
  bool empty() const { return end <= begin; }
};

/// An alert as held by the store. The detector is interned; resolve it with
/// AlertStore::detector_name.
struct StoredAlert {
  Timestamp t;
  Ipv4 ip;
  Category category = Category::scan;
  std::uint64_t volume = 0;
  std::uint32_t detector = 0;
};

struct HostnameTags {
  bool is_static = false;
  bool is_dynamic = false;
  bool ip_in_hostname = false;
  bool no_ptr = false;

  auto operator<=>(const HostnameTags&) const = default;
};

/// Keyword and address-encoding rules over a reverse-DNS name. `no_ptr_rule`
/// controls whether an absent hostname raises the no-PTR tag.
HostnameTags derive_hostname_tags(const std::optional<std::string>& hostname, Ipv4 ip,
                                  bool no_ptr_rule = true);

struct EnrichmentTags {
  std::array<bool, 5> blacklists{};
  bool dynamic_list = false;
  std::optional<std::string> hostname;
  HostnameTags host;
  std::optional<std::uint32_t> asn;
  std::optional<std::string> country;

  bool operator==(const EnrichmentTags&) const = default;
};

struct EnrichmentRecord {
  Ipv4 ip;
  std::array<bool, 5> blacklists{};
  bool dynamic_list = false;
  std::optional<std::string> hostname;
  std::optional<std::uint32_t> asn;
  std::optional<std::string> country;
};

/// One line of the enrichment format; std::nullopt for blank/comment lines.
std::optional<EnrichmentRecord> parse_enrichment(std::string_view line);

struct EntityRecord {
  Ipv4 ip;
  std::vector<StoredAlert> alerts; // ascending by time
  EnrichmentTags enrichment;
  bool enriched = false;
};

struct ContextMaps {
  PrefixTable<std::uint32_t> ip_to_asn;
  PrefixTable<std::string> ip_to_country;
  std::map<std::uint32_t, std::uint64_t> asn_sizes;
  std::map<std::string, std::uint64_t> country_sizes;

  /// Loads asn_map.csv, cc_map.csv, asn_sizes.csv and cc_sizes.csv from a
  /// directory. Missing files are skipped; malformed rows throw.
  static ContextMaps load_directory(const std::filesystem::path& dir);
};

struct IngestSummary {
  std::array<std::size_t, kCategoryCount> added{};
  std::size_t duplicates = 0;

  std::size_t scan() const { return added[index_of(Category::scan)]; }
  std::size_t access() const { return added[index_of(Category::access)]; }
};

struct EnrichSummary {
  std::size_t applied = 0;
  std::size_t created = 0;
  std::size_t rejected = 0;
  std::vector<std::string> first_errors;
};

/// Time-indexed alert storage keyed by IP and by /24 prefix, plus per-IP
/// enrichment and the ASN/country context maps.
///
/// One writer at a time; any number of concurrent readers. Each ingest or
/// enrichment batch is applied under an exclusive lock, so readers observe
/// whole batches only. Queries return copies.
class AlertStore {
public:
  AlertStore() = default;
  AlertStore(const AlertStore& other);
  AlertStore& operator=(const AlertStore& other);

  IngestSummary ingest(std::span<const Alert> alerts);

  EnrichSummary attach_enrichment(std::istream& in);
  void attach_enrichment(std::span<const EnrichmentRecord> records,
                         EnrichSummary* summary = nullptr);

  void set_context_maps(ContextMaps maps);
  void set_no_ptr_rule(bool enabled);
  bool no_ptr_rule() const;

  std::vector<StoredAlert> query_entity(Ipv4 ip, Interval interval) const;
  std::vector<StoredAlert> query_prefix(Prefix24 prefix, Interval interval) const;

  /// Distinct IPs (ascending) with at least one alert in the interval,
  /// optionally restricted to one category.
  std::vector<Ipv4> active_ips(Interval interval,
                               std::optional<Category> category = std::nullopt) const;

  /// True when `ip` has an alert of `category` in the interval.
  bool has_alert(Ipv4 ip, Category category, Interval interval) const;

  /// Enrichment for an IP; IPs never enriched get the defaults (no hostname).
  EnrichmentTags enrichment(Ipv4 ip) const;
  std::optional<EntityRecord> entity(Ipv4 ip) const;

  /// ASN/country from the enrichment record when present, else from the maps.
  std::optional<std::uint32_t> asn_of(Ipv4 ip) const;
  std::optional<std::string> country_of(Ipv4 ip) const;
  std::optional<std::uint64_t> asn_size(std::uint32_t asn) const;
  std::optional<std::uint64_t> country_size(const std::string& cc) const;

  std::string detector_name(std::uint32_t id) const;
  Alert to_alert(const StoredAlert& a) const;

  std::vector<Ipv4> ips() const;
  std::size_t entity_count() const;
  std::size_t alert_count() const;
  /// Earliest and latest alert times, if any alerts are stored.
  std::optional<Interval> time_span() const;

  void save(const std::filesystem::path& path) const;
  static AlertStore load(const std::filesystem::path& path);

private:
  std::optional<std::uint32_t> asn_of_unlocked(Ipv4 ip) const;
  std::optional<std::string> country_of_unlocked(Ipv4 ip) const;
  EnrichmentTags default_tags(Ipv4 ip) const;
  std::uint32_t intern(const std::string& detector);
  void rebuild_prefix_index();

  mutable std::shared_mutex mutex_;
  std::map<Ipv4, EntityRecord> entities_;
  std::unordered_map<Prefix24, std::vector<StoredAlert>> prefixes_;
  std::vector<std::string> detectors_;
  std::unordered_map<std::string, std::uint32_t> detector_ids_;
  ContextMaps maps_;
  bool no_ptr_rule_ = true;
  std::size_t alert_count_ = 0;
};

} // namespace fmp
