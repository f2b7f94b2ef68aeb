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

#include "fmp/features.hpp"

#include "fmp/binary_io.hpp"
#include "fmp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fmp {

namespace {

constexpr double kSecondsPerDay = 86400.0;

double days_between(Timestamp later, Timestamp earlier) {
  return static_cast<double>((later - earlier).count()) / kSecondsPerDay;
}

template <typename T>
std::size_t count_distinct(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double expneg_or_zero(const std::optional<double>& days) {
  return days ? expneg_transform(*days) : 0.0;
}

std::array<std::string, kFeatureCount> make_names() {
  std::array<std::string, kFeatureCount> names;
  const char* ip_suffix[kIpFeatureCount] = {
      "alerts_1d", "volume_1d",   "detectors_1d",  "alerts_wh",  "volume_wh", "detectors_wh",
      "ewma_alerts", "ewma_volume", "ewma_presence", "last_alert", "mean_gap",  "median_gap"};
  const char* prefix_suffix[kPrefixFeatureCount] = {
      "alerts_1d",   "volume_1d",   "detectors_1d",  "alerts_wh", "volume_wh", "detectors_wh",
      "ewma_alerts", "ewma_volume", "ewma_presence", "ips_1d",    "ips_wh"};
  for (auto c : kCategories) {
    for (std::size_t i = 0; i < kIpFeatureCount; ++i)
      names[layout::ip_scope(c) + i] = "ip_" + std::string(to_string(c)) + "_" + ip_suffix[i];
    for (std::size_t i = 0; i < kPrefixFeatureCount; ++i)
      names[layout::prefix_scope(c) + i] =
          "prefix_" + std::string(to_string(c)) + "_" + prefix_suffix[i];
  }
  names[layout::country_rate] = "country_rate";
  names[layout::asn_rate] = "asn_rate";
  for (std::size_t i = 0; i < 5; ++i)
    names[layout::blacklists + i] = "bl" + std::to_string(i + 1);
  names[layout::dynamic_list] = "dynamic_list";
  names[layout::host_tags + 0] = "host_static";
  names[layout::host_tags + 1] = "host_dynamic";
  names[layout::host_tags + 2] = "host_ip_in_name";
  names[layout::host_tags + 3] = "host_no_ptr";
  return names;
}

} // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
  static const auto names = make_names();
  return names;
}

std::uint32_t feature_schema_hash() {
  static const std::uint32_t hash = [] {
    std::string joined;
    for (const auto& n : feature_names()) {
      joined += n;
      joined += ',';
    }
    return crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(joined.data()), joined.size()));
  }();
  return hash;
}

std::vector<std::size_t> feature_indices(FeatureGroup group, Category target) {
  std::vector<std::size_t> out;
  auto range = [&](std::size_t begin, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(begin + i);
  };
  const Category other = target == Category::scan ? Category::access : Category::scan;
  switch (group) {
  case FeatureGroup::same_category:
    range(layout::ip_scope(target), kIpFeatureCount);
    break;
  case FeatureGroup::other_category:
    range(layout::ip_scope(other), kIpFeatureCount);
    break;
  case FeatureGroup::prefix:
    range(layout::prefix_scope(Category::scan), 2 * kPrefixFeatureCount);
    break;
  case FeatureGroup::context_rates:
    out = {layout::country_rate, layout::asn_rate};
    break;
  case FeatureGroup::tags:
    range(layout::blacklists, kFeatureCount - layout::blacklists);
    break;
  }
  return out;
}

EwmaParams::EwmaParams(double a) : alpha(a) {
  if (!(a > 0.0 && a < 1.0))
    fail(Errc::ConfigError, "EWMA alpha must lie in (0, 1)");
}

double log1p_transform(double x) {
  if (!(x >= 0.0))
    fail(Errc::DomainError, "log1p_transform expects x >= 0");
  return std::log1p(x);
}

double expneg_transform(double x) {
  if (!(x >= 0.0))
    fail(Errc::DomainError, "expneg_transform expects x >= 0");
  if (std::isinf(x))
    return 0.0;
  return std::exp(-x);
}

double ewma(std::span<const double> series, const EwmaParams& params) {
  if (series.empty())
    fail(Errc::EmptySeries, "EWMA of an empty series");
  // Same as alpha*x + (1-alpha)*avg, but a constant series stays exact.
  double avg = series.front();
  for (std::size_t i = 1; i < series.size(); ++i)
    avg += params.alpha * (series[i] - avg);
  return avg;
}

std::vector<DayBucket> day_buckets(std::span<const StoredAlert> alerts, const WindowConfig& window,
                                   std::optional<Category> category) {
  const auto days = static_cast<std::size_t>(window.history_days());
  std::vector<DayBucket> buckets(days);
  for (const auto& a : alerts) {
    if (category && a.category != *category)
      continue;
    if (!window.in_history(a.t))
      continue;
    // (t0 - t) in [1s, w_h days]; bucket k holds ages in ((k-1) days, k days].
    auto age = (window.t0() - a.t).count();
    auto k = static_cast<std::size_t>((age - 1) / kDay.count());
    auto& b = buckets[k];
    b.count += 1;
    b.volume += static_cast<double>(a.volume);
    b.presence = 1;
  }
  return buckets;
}

ScopeStats scope_stats(std::span<const StoredAlert> alerts, Category category,
                       const WindowConfig& window, const EwmaParams& params) {
  ScopeStats s;
  const Timestamp day_begin = window.t0() - kDay;
  std::vector<std::uint32_t> det_1d, det_wh;
  std::vector<std::uint32_t> ips_1d, ips_wh;
  std::vector<Timestamp> times;
  for (const auto& a : alerts) {
    if (a.category != category || !window.in_history(a.t))
      continue;
    s.alerts_wh += 1;
    s.volume_wh += static_cast<double>(a.volume);
    det_wh.push_back(a.detector);
    ips_wh.push_back(a.ip.value());
    times.push_back(a.t);
    if (a.t >= day_begin) {
      s.alerts_1d += 1;
      s.volume_1d += static_cast<double>(a.volume);
      det_1d.push_back(a.detector);
      ips_1d.push_back(a.ip.value());
    }
  }
  s.detectors_1d = static_cast<double>(count_distinct(det_1d));
  s.detectors_wh = static_cast<double>(count_distinct(det_wh));
  s.distinct_ips_1d = static_cast<double>(count_distinct(ips_1d));
  s.distinct_ips_wh = static_cast<double>(count_distinct(ips_wh));

  auto buckets = day_buckets(alerts, window, category);
  std::vector<double> counts, volumes, presence;
  for (auto it = buckets.rbegin(); it != buckets.rend(); ++it) {
    counts.push_back(it->count);
    volumes.push_back(it->volume);
    presence.push_back(it->presence);
  }
  s.ewma_alerts = ewma(counts, params);
  s.ewma_volume = ewma(volumes, params);
  s.ewma_presence = ewma(presence, params);

  if (!times.empty()) {
    std::sort(times.begin(), times.end());
    s.days_since_last = days_between(window.t0(), times.back());
    if (times.size() >= 2) {
      std::vector<double> gaps;
      gaps.reserve(times.size() - 1);
      double total = 0;
      for (std::size_t i = 1; i < times.size(); ++i) {
        gaps.push_back(days_between(times[i], times[i - 1]));
        total += gaps.back();
      }
      s.mean_gap = total / static_cast<double>(gaps.size());
      s.median_gap = median_of(std::move(gaps));
    }
  }
  return s;
}

std::array<double, kIpFeatureCount> transform_ip_stats(const ScopeStats& s) {
  return {log1p_transform(s.alerts_1d),   log1p_transform(s.volume_1d),
          log1p_transform(s.detectors_1d), log1p_transform(s.alerts_wh),
          log1p_transform(s.volume_wh),   log1p_transform(s.detectors_wh),
          log1p_transform(s.ewma_alerts), log1p_transform(s.ewma_volume),
          s.ewma_presence,                expneg_or_zero(s.days_since_last),
          expneg_or_zero(s.mean_gap),     expneg_or_zero(s.median_gap)};
}

std::array<double, kPrefixFeatureCount> transform_prefix_stats(const ScopeStats& s) {
  auto ip = transform_ip_stats(s);
  std::array<double, kPrefixFeatureCount> out{};
  std::copy_n(ip.begin(), 9, out.begin());
  out[9] = log1p_transform(s.distinct_ips_1d);
  out[10] = log1p_transform(s.distinct_ips_wh);
  return out;
}

std::array<double, kIpFeatureCount> ip_features(const AlertStore& store, Ipv4 ip,
                                                Category category, const WindowConfig& window,
                                                const EwmaParams& params) {
  auto alerts = store.query_entity(ip, {window.history_begin(), window.t0()});
  return transform_ip_stats(scope_stats(alerts, category, window, params));
}

std::array<double, kPrefixFeatureCount> prefix_features(const AlertStore& store, Ipv4 ip,
                                                        Category category,
                                                        const WindowConfig& window,
                                                        const EwmaParams& params) {
  auto alerts = store.query_prefix(Prefix24(ip), {window.history_begin(), window.t0()});
  return transform_prefix_stats(scope_stats(alerts, category, window, params));
}

ContextRates::ContextRates(const AlertStore& store, const WindowConfig& window)
    : store_(&store) {
  for (auto ip : store.active_ips({window.history_begin(), window.t0()})) {
    if (auto asn = store.asn_of(ip))
      ++asn_reported_[*asn];
    if (auto cc = store.country_of(ip))
      ++country_reported_[*cc];
  }
}

std::pair<double, double> ContextRates::rates(Ipv4 ip) const {
  auto ratio = [](std::uint64_t reported, std::uint64_t size) {
    return std::clamp(static_cast<double>(reported) / static_cast<double>(size), 0.0, 1.0);
  };
  double country = 0.0, asn_rate = 0.0;
  if (auto cc = store_->country_of(ip)) {
    auto size = store_->country_size(*cc);
    auto it = country_reported_.find(*cc);
    if (size && it != country_reported_.end())
      country = ratio(it->second, *size);
  }
  if (auto asn = store_->asn_of(ip)) {
    auto size = store_->asn_size(*asn);
    auto it = asn_reported_.find(*asn);
    if (size && it != asn_reported_.end())
      asn_rate = ratio(it->second, *size);
  }
  return {country, asn_rate};
}

std::pair<double, double> context_rates(const AlertStore& store, Ipv4 ip,
                                        const WindowConfig& window) {
  return ContextRates(store, window).rates(ip);
}

FeatureExtractor::FeatureExtractor(const AlertStore& store, const WindowConfig& window,
                                   const EwmaParams& params)
    : store_(&store), window_(window), params_(params), rates_(store, window) {}

FeatureVector FeatureExtractor::assemble(Ipv4 ip) const {
  FeatureVector x{};
  const Interval history{window_.history_begin(), window_.t0()};
  const auto own = store_->query_entity(ip, history);
  const auto prefix = store_->query_prefix(Prefix24(ip), history);
  for (auto c : kCategories) {
    auto f = transform_ip_stats(scope_stats(own, c, window_, params_));
    std::copy(f.begin(), f.end(), x.begin() + static_cast<std::ptrdiff_t>(layout::ip_scope(c)));
    auto p = transform_prefix_stats(scope_stats(prefix, c, window_, params_));
    std::copy(p.begin(), p.end(),
              x.begin() + static_cast<std::ptrdiff_t>(layout::prefix_scope(c)));
  }
  auto [country, asn] = rates_.rates(ip);
  x[layout::country_rate] = country;
  x[layout::asn_rate] = asn;

  const auto tags = store_->enrichment(ip);
  for (std::size_t i = 0; i < 5; ++i)
    x[layout::blacklists + i] = tags.blacklists[i] ? 1.0 : 0.0;
  x[layout::dynamic_list] = tags.dynamic_list ? 1.0 : 0.0;
  x[layout::host_tags + 0] = tags.host.is_static ? 1.0 : 0.0;
  x[layout::host_tags + 1] = tags.host.is_dynamic ? 1.0 : 0.0;
  x[layout::host_tags + 2] = tags.host.ip_in_hostname ? 1.0 : 0.0;
  x[layout::host_tags + 3] = tags.host.no_ptr ? 1.0 : 0.0;
  return x;
}

FeatureVector assemble_vector(const AlertStore& store, Ipv4 ip, const WindowConfig& window,
                              const EwmaParams& params) {
  return FeatureExtractor(store, window, params).assemble(ip);
}

} // namespace fmp
