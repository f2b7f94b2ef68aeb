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
#include "fmp/store.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fmp {

// Feature vector layout. Alert-based features come first (48), then the ten
// enrichment flags.
//   [ 0, 12)  IP scope, scan       f1..f12
//   [12, 24)  IP scope, access     f1..f12
//   [24, 35)  /24 scope, scan      p1..p11
//   [35, 46)  /24 scope, access    p1..p11
//   46        country maliciousness rate
//   47        ASN maliciousness rate
//   [48, 53)  blacklist flags bl1..bl5
//   53        dynamic-range list flag
//   [54, 58)  hostname tags: static, dynamic, ip-in-hostname, no-PTR
inline constexpr std::size_t kFeatureCount = 58;
inline constexpr std::size_t kIpFeatureCount = 12;
inline constexpr std::size_t kPrefixFeatureCount = 11;

namespace layout {
constexpr std::size_t ip_scope(Category c) { return kIpFeatureCount * index_of(c); }
constexpr std::size_t prefix_scope(Category c) {
  return 2 * kIpFeatureCount + kPrefixFeatureCount * index_of(c);
}
inline constexpr std::size_t country_rate = 46;
inline constexpr std::size_t asn_rate = 47;
inline constexpr std::size_t blacklists = 48;
inline constexpr std::size_t dynamic_list = 53;
inline constexpr std::size_t host_tags = 54;
} // namespace layout

using FeatureVector = std::array<double, kFeatureCount>;

/// Canonical column names, in layout order.
const std::array<std::string, kFeatureCount>& feature_names();

/// CRC-32 over the canonical names; stamped into models so that a model is
/// never applied to vectors of a different layout.
std::uint32_t feature_schema_hash();

/// Feature groups used for ablation studies, relative to a target category.
enum class FeatureGroup {
  same_category,  // IP scope, target category
  other_category, // IP scope, the other category
  prefix,         // both categories, /24 scope
  context_rates,  // country + ASN rates
  tags,           // blacklist, dynamic-list and hostname flags
};

std::vector<std::size_t> feature_indices(FeatureGroup group, Category target);

struct EwmaParams {
  double alpha = 0.25;

  EwmaParams() = default;
  explicit EwmaParams(double a);
};

double log1p_transform(double x);
/// exp(-x); +infinity maps to 0.
double expneg_transform(double x);

/// Series is oldest-first. Starts at the oldest value, then folds in each
/// newer value with weight alpha.
double ewma(std::span<const double> series, const EwmaParams& params);

struct DayBucket {
  double count = 0;
  double volume = 0;
  double presence = 0;
};

/// Daily aggregates over the history window. Element k-1 is bucket k, covering
/// [t0 - k days, t0 - (k-1) days); element 0 is the most recent day. Alerts
/// outside the history window are ignored.
std::vector<DayBucket> day_buckets(std::span<const StoredAlert> alerts, const WindowConfig& window,
                                   std::optional<Category> category = std::nullopt);

/// Untransformed statistics for one scope (an IP or a /24) and one category.
/// Gaps and the last-alert age are in fractional days; absent when undefined.
struct ScopeStats {
  double alerts_1d = 0;
  double volume_1d = 0;
  double detectors_1d = 0;
  double alerts_wh = 0;
  double volume_wh = 0;
  double detectors_wh = 0;
  double ewma_alerts = 0;
  double ewma_volume = 0;
  double ewma_presence = 0;
  std::optional<double> days_since_last;
  std::optional<double> mean_gap;
  std::optional<double> median_gap;
  double distinct_ips_1d = 0;
  double distinct_ips_wh = 0;
};

ScopeStats scope_stats(std::span<const StoredAlert> alerts, Category category,
                       const WindowConfig& window, const EwmaParams& params);

/// f1..f12 of the layout, from stats of a single IP.
std::array<double, kIpFeatureCount> transform_ip_stats(const ScopeStats& s);
/// p1..p11 of the layout, from stats of a /24.
std::array<double, kPrefixFeatureCount> transform_prefix_stats(const ScopeStats& s);

std::array<double, kIpFeatureCount> ip_features(const AlertStore& store, Ipv4 ip,
                                                Category category, const WindowConfig& window,
                                                const EwmaParams& params = {});

std::array<double, kPrefixFeatureCount> prefix_features(const AlertStore& store, Ipv4 ip,
                                                        Category category,
                                                        const WindowConfig& window,
                                                        const EwmaParams& params = {});

/// Per-window counts of reported IPs per ASN and per country. Built once per
/// prediction time and shared by every vector assembled for it.
class ContextRates {
public:
  ContextRates(const AlertStore& store, const WindowConfig& window);

  /// (country rate, ASN rate), each clamped to [0, 1]; 0 when unmapped.
  std::pair<double, double> rates(Ipv4 ip) const;

private:
  const AlertStore* store_;
  std::map<std::uint32_t, std::uint64_t> asn_reported_;
  std::map<std::string, std::uint64_t> country_reported_;
};

std::pair<double, double> context_rates(const AlertStore& store, Ipv4 ip,
                                        const WindowConfig& window);

/// Assembles vectors for many IPs at one prediction time.
class FeatureExtractor {
public:
  FeatureExtractor(const AlertStore& store, const WindowConfig& window,
                   const EwmaParams& params = {});

  FeatureVector assemble(Ipv4 ip) const;
  const WindowConfig& window() const { return window_; }

private:
  const AlertStore* store_;
  WindowConfig window_;
  EwmaParams params_;
  ContextRates rates_;
};

FeatureVector assemble_vector(const AlertStore& store, Ipv4 ip, const WindowConfig& window,
                              const EwmaParams& params = {});

} // namespace fmp
