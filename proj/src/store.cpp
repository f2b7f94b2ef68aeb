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

#include "fmp/store.hpp"

#include "fmp/binary_io.hpp"
#include "fmp/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <mutex>
#include <set>

namespace fmp {

namespace {

constexpr std::string_view kSnapshotMagic = "FMPS";
constexpr std::uint8_t kSnapshotVersion = 1;

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& ch : out)
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

// Ordering key for stored alerts. Detector ids are interned in arrival order,
// so ties are broken by detector *name* rank to keep query results
// independent of ingest order.
struct AlertOrder {
  const std::vector<std::uint32_t>& rank;

  bool operator()(const StoredAlert& a, const StoredAlert& b) const {
    if (a.t != b.t)
      return a.t < b.t;
    if (a.ip != b.ip)
      return a.ip < b.ip;
    if (a.category != b.category)
      return a.category < b.category;
    if (a.volume != b.volume)
      return a.volume < b.volume;
    return rank[a.detector] < rank[b.detector];
  }
};

bool same_alert(const StoredAlert& a, const StoredAlert& b) {
  return a.t == b.t && a.ip == b.ip && a.category == b.category && a.volume == b.volume &&
         a.detector == b.detector;
}

std::vector<std::uint32_t> name_ranks(const std::vector<std::string>& names) {
  std::vector<std::uint32_t> order(names.size());
  for (std::uint32_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return names[a] < names[b]; });
  std::vector<std::uint32_t> rank(names.size());
  for (std::uint32_t r = 0; r < order.size(); ++r)
    rank[order[r]] = r;
  return rank;
}

std::size_t sort_unique(std::vector<StoredAlert>& v, const std::vector<std::uint32_t>& rank) {
  std::sort(v.begin(), v.end(), AlertOrder{rank});
  auto before = v.size();
  v.erase(std::unique(v.begin(), v.end(), same_alert), v.end());
  return before - v.size();
}

std::pair<std::vector<StoredAlert>::const_iterator, std::vector<StoredAlert>::const_iterator>
time_range(const std::vector<StoredAlert>& v, Interval interval) {
  auto lo = std::lower_bound(v.begin(), v.end(), interval.begin,
                             [](const StoredAlert& a, Timestamp t) { return a.t < t; });
  auto hi = std::lower_bound(lo, v.end(), interval.end,
                             [](const StoredAlert& a, Timestamp t) { return a.t < t; });
  return {lo, hi};
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                   : comma - start);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front())))
      cell.remove_prefix(1);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back())))
      cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_uint(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    return std::nullopt;
  return v;
}

std::optional<std::string> parse_country(std::string_view s) {
  if (s.size() != 2 || !std::isalpha(static_cast<unsigned char>(s[0])) ||
      !std::isalpha(static_cast<unsigned char>(s[1])))
    return std::nullopt;
  std::string out(s);
  for (auto& ch : out)
    ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

// Calls `row(fields, line_no)` for each data row of a small CSV file. A first
// line that fails to parse is treated as a header.
template <typename F>
void for_each_csv_row(const std::filesystem::path& path, F&& row) {
  std::ifstream in(path);
  if (!in)
    fail(Errc::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    try {
      row(split_csv(line));
    } catch (const Error& e) {
      if (line_no == 1)
        continue;
      throw Error(e.code(), path.filename().string() + ":" + std::to_string(line_no) + ": " +
                                e.what());
    }
  }
}

void write_tags(BinaryWriter& w, const EnrichmentTags& e) {
  std::uint8_t lists = 0;
  for (std::size_t i = 0; i < 5; ++i)
    if (e.blacklists[i])
      lists |= static_cast<std::uint8_t>(1u << i);
  if (e.dynamic_list)
    lists |= 1u << 5;
  w.u8(lists);
  std::uint8_t host = static_cast<std::uint8_t>((e.host.is_static ? 1 : 0) |
                                                (e.host.is_dynamic ? 2 : 0) |
                                                (e.host.ip_in_hostname ? 4 : 0) |
                                                (e.host.no_ptr ? 8 : 0));
  w.u8(host);
  w.u8(e.hostname ? 1 : 0);
  if (e.hostname)
    w.str(*e.hostname);
  w.u8(e.asn ? 1 : 0);
  if (e.asn)
    w.u32(*e.asn);
  w.u8(e.country ? 1 : 0);
  if (e.country)
    w.str(*e.country);
}

EnrichmentTags read_tags(BinaryReader& r) {
  EnrichmentTags e;
  auto lists = r.u8();
  for (std::size_t i = 0; i < 5; ++i)
    e.blacklists[i] = (lists >> i) & 1u;
  e.dynamic_list = (lists >> 5) & 1u;
  auto host = r.u8();
  e.host = {(host & 1) != 0, (host & 2) != 0, (host & 4) != 0, (host & 8) != 0};
  if (r.u8())
    e.hostname = r.str();
  if (r.u8())
    e.asn = r.u32();
  if (r.u8())
    e.country = r.str();
  return e;
}

} // namespace

HostnameTags derive_hostname_tags(const std::optional<std::string>& hostname, Ipv4 ip,
                                  bool no_ptr_rule) {
  HostnameTags tags;
  if (!hostname) {
    tags.no_ptr = no_ptr_rule;
    return tags;
  }
  const auto name = lowercase(*hostname);
  tags.is_static = name.find("static") != std::string::npos;
  for (std::string_view kw : {"dynamic", "dyn", "dsl", "dial", "pool"})
    if (name.find(kw) != std::string::npos)
      tags.is_dynamic = true;

  // Maximal digit runs, as numbers; runs longer than 3 digits can never be an
  // octet and act as separators-that-break-the-sequence.
  std::vector<int> numbers;
  for (std::size_t i = 0; i < name.size();) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < name.size() && std::isdigit(static_cast<unsigned char>(name[j])))
      ++j;
    int value = -1;
    if (j - i <= 3)
      std::from_chars(name.data() + i, name.data() + j, value);
    numbers.push_back(value);
    i = j;
  }
  const auto o = ip.octets();
  auto match_at = [&](std::size_t pos, bool reversed) {
    for (std::size_t k = 0; k < 4; ++k) {
      int want = o[reversed ? 3 - k : k];
      if (numbers[pos + k] != want)
        return false;
    }
    return true;
  };
  for (std::size_t pos = 0; pos + 4 <= numbers.size() && !tags.ip_in_hostname; ++pos)
    tags.ip_in_hostname = match_at(pos, false) || match_at(pos, true);
  return tags;
}

std::optional<EnrichmentRecord> parse_enrichment(std::string_view line) {
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front())))
    line.remove_prefix(1);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
    line.remove_suffix(1);
  if (line.empty() || line.front() == '#')
    return std::nullopt;

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::MalformedRecord, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object())
    fail(Errc::MalformedRecord, "enrichment record must be a JSON object");

  EnrichmentRecord rec;
  auto ip_it = doc.find("ip");
  if (ip_it == doc.end() || !ip_it->is_string())
    fail(Errc::MalformedRecord, "missing or non-string 'ip'");
  auto ip = Ipv4::parse(ip_it->get_ref<const std::string&>());
  if (!ip)
    fail(Errc::MalformedRecord, "invalid IPv4 address in 'ip'");
  rec.ip = *ip;

  auto bl = doc.find("bl");
  if (bl == doc.end() || !bl->is_array() || bl->size() != 5)
    fail(Errc::MalformedRecord, "'bl' must be an array of 5 flags");
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& flag = (*bl)[i];
    if (!flag.is_number_integer() || (flag.get<int>() != 0 && flag.get<int>() != 1))
      fail(Errc::MalformedRecord, "'bl' entries must be 0 or 1");
    rec.blacklists[i] = flag.get<int>() == 1;
  }

  auto dyn = doc.find("dyn");
  if (dyn == doc.end() || !dyn->is_number_integer() ||
      (dyn->get<int>() != 0 && dyn->get<int>() != 1))
    fail(Errc::MalformedRecord, "'dyn' must be 0 or 1");
  rec.dynamic_list = dyn->get<int>() == 1;

  if (auto h = doc.find("hostname"); h != doc.end() && !h->is_null()) {
    if (!h->is_string())
      fail(Errc::MalformedRecord, "'hostname' must be a string");
    if (!h->get_ref<const std::string&>().empty())
      rec.hostname = h->get<std::string>();
  }
  if (auto a = doc.find("asn"); a != doc.end() && !a->is_null()) {
    if (!a->is_number_unsigned() || a->get<std::uint64_t>() > 0xffffffffull)
      fail(Errc::MalformedRecord, "'asn' must be a 32-bit unsigned integer");
    rec.asn = a->get<std::uint32_t>();
  }
  if (auto c = doc.find("cc"); c != doc.end() && !c->is_null()) {
    if (!c->is_string())
      fail(Errc::MalformedRecord, "'cc' must be a string");
    rec.country = parse_country(c->get_ref<const std::string&>());
    if (!rec.country)
      fail(Errc::MalformedRecord, "'cc' must be an ISO 3166 alpha-2 code");
  }
  return rec;
}

ContextMaps ContextMaps::load_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    fail(Errc::IoError, "maps directory not found: " + dir.string());
  ContextMaps maps;
  auto need = [](const std::vector<std::string>& f) {
    if (f.size() != 2)
      fail(Errc::MalformedRecord, "expected two columns");
  };
  if (auto p = dir / "asn_map.csv"; fs::exists(p))
    for_each_csv_row(p, [&](const std::vector<std::string>& f) {
      need(f);
      auto cidr = Cidr::parse(f[0]);
      auto asn = parse_uint<std::uint32_t>(f[1]);
      if (!cidr || !asn)
        fail(Errc::MalformedRecord, "bad cidr,asn row");
      maps.ip_to_asn.insert(*cidr, *asn);
    });
  if (auto p = dir / "cc_map.csv"; fs::exists(p))
    for_each_csv_row(p, [&](const std::vector<std::string>& f) {
      need(f);
      auto cidr = Cidr::parse(f[0]);
      auto cc = parse_country(f[1]);
      if (!cidr || !cc)
        fail(Errc::MalformedRecord, "bad cidr,cc row");
      maps.ip_to_country.insert(*cidr, *cc);
    });
  if (auto p = dir / "asn_sizes.csv"; fs::exists(p))
    for_each_csv_row(p, [&](const std::vector<std::string>& f) {
      need(f);
      auto asn = parse_uint<std::uint32_t>(f[0]);
      auto n = parse_uint<std::uint64_t>(f[1]);
      if (!asn || !n || *n < 1)
        fail(Errc::MalformedRecord, "bad asn,count row");
      maps.asn_sizes[*asn] = *n;
    });
  if (auto p = dir / "cc_sizes.csv"; fs::exists(p))
    for_each_csv_row(p, [&](const std::vector<std::string>& f) {
      need(f);
      auto cc = parse_country(f[0]);
      auto n = parse_uint<std::uint64_t>(f[1]);
      if (!cc || !n || *n < 1)
        fail(Errc::MalformedRecord, "bad cc,count row");
      maps.country_sizes[*cc] = *n;
    });
  return maps;
}

AlertStore::AlertStore(const AlertStore& other) {
  std::shared_lock lock(other.mutex_);
  entities_ = other.entities_;
  prefixes_ = other.prefixes_;
  detectors_ = other.detectors_;
  detector_ids_ = other.detector_ids_;
  maps_ = other.maps_;
  no_ptr_rule_ = other.no_ptr_rule_;
  alert_count_ = other.alert_count_;
}

AlertStore& AlertStore::operator=(const AlertStore& other) {
  if (this == &other)
    return *this;
  AlertStore copy(other);
  std::unique_lock lock(mutex_);
  entities_ = std::move(copy.entities_);
  prefixes_ = std::move(copy.prefixes_);
  detectors_ = std::move(copy.detectors_);
  detector_ids_ = std::move(copy.detector_ids_);
  maps_ = std::move(copy.maps_);
  no_ptr_rule_ = copy.no_ptr_rule_;
  alert_count_ = copy.alert_count_;
  return *this;
}

std::uint32_t AlertStore::intern(const std::string& detector) {
  auto [it, inserted] =
      detector_ids_.try_emplace(detector, static_cast<std::uint32_t>(detectors_.size()));
  if (inserted)
    detectors_.push_back(detector);
  return it->second;
}

IngestSummary AlertStore::ingest(std::span<const Alert> alerts) {
  std::unique_lock lock(mutex_);
  IngestSummary summary;

  std::set<Ipv4> touched;
  std::set<Prefix24> touched_prefixes;
  std::array<std::size_t, kCategoryCount> offered{};
  for (const auto& a : alerts) {
    StoredAlert s{a.t, a.source, a.category, a.volume, intern(a.detector)};
    auto& rec = entities_[a.source];
    rec.ip = a.source;
    if (!rec.enriched)
      rec.enrichment = default_tags(a.source);
    rec.alerts.push_back(s);
    prefixes_[Prefix24(a.source)].push_back(s);
    touched.insert(a.source);
    touched_prefixes.insert(Prefix24(a.source));
    ++offered[index_of(a.category)];
  }

  const auto rank = name_ranks(detectors_);
  std::array<std::size_t, kCategoryCount> removed{};
  for (auto ip : touched) {
    auto& v = entities_[ip].alerts;
    std::sort(v.begin(), v.end(), AlertOrder{rank});
    auto last = std::unique(v.begin(), v.end(), same_alert);
    // std::unique leaves the tail unspecified, so count per category from the
    // kept prefix against the full count taken beforehand.
    std::array<std::size_t, kCategoryCount> total{};
    for (const auto& a : v)
      ++total[index_of(a.category)];
    for (auto it = v.begin(); it != last; ++it)
      --total[index_of(it->category)];
    for (std::size_t c = 0; c < kCategoryCount; ++c)
      removed[c] += total[c];
    v.erase(last, v.end());
  }
  for (auto p : touched_prefixes)
    sort_unique(prefixes_[p], rank);

  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    summary.added[c] = offered[c] - removed[c];
    summary.duplicates += removed[c];
    alert_count_ += summary.added[c];
  }
  return summary;
}

EnrichSummary AlertStore::attach_enrichment(std::istream& in) {
  EnrichSummary summary;
  std::vector<EnrichmentRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      if (auto rec = parse_enrichment(line))
        records.push_back(std::move(*rec));
    } catch (const Error& e) {
      ++summary.rejected;
      if (summary.first_errors.size() < 5)
        summary.first_errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  attach_enrichment(records, &summary);
  return summary;
}

void AlertStore::attach_enrichment(std::span<const EnrichmentRecord> records,
                                   EnrichSummary* summary) {
  std::unique_lock lock(mutex_);
  for (const auto& rec : records) {
    auto [it, created] = entities_.try_emplace(rec.ip);
    auto& entity = it->second;
    entity.ip = rec.ip;
    entity.enriched = true;
    auto& tags = entity.enrichment;
    tags.blacklists = rec.blacklists;
    tags.dynamic_list = rec.dynamic_list;
    tags.hostname = rec.hostname;
    tags.host = derive_hostname_tags(rec.hostname, rec.ip, no_ptr_rule_);
    tags.asn = rec.asn;
    tags.country = rec.country;
    if (summary) {
      ++summary->applied;
      if (created)
        ++summary->created;
    }
  }
}

void AlertStore::set_context_maps(ContextMaps maps) {
  std::unique_lock lock(mutex_);
  maps_ = std::move(maps);
}

void AlertStore::set_no_ptr_rule(bool enabled) {
  std::unique_lock lock(mutex_);
  no_ptr_rule_ = enabled;
  for (auto& [ip, rec] : entities_)
    rec.enrichment.host = derive_hostname_tags(rec.enrichment.hostname, ip, enabled);
}

bool AlertStore::no_ptr_rule() const {
  std::shared_lock lock(mutex_);
  return no_ptr_rule_;
}

std::vector<StoredAlert> AlertStore::query_entity(Ipv4 ip, Interval interval) const {
  std::shared_lock lock(mutex_);
  if (interval.empty())
    return {};
  auto it = entities_.find(ip);
  if (it == entities_.end())
    return {};
  auto [lo, hi] = time_range(it->second.alerts, interval);
  return {lo, hi};
}

std::vector<StoredAlert> AlertStore::query_prefix(Prefix24 prefix, Interval interval) const {
  std::shared_lock lock(mutex_);
  if (interval.empty())
    return {};
  auto it = prefixes_.find(prefix);
  if (it == prefixes_.end())
    return {};
  auto [lo, hi] = time_range(it->second, interval);
  return {lo, hi};
}

std::vector<Ipv4> AlertStore::active_ips(Interval interval,
                                         std::optional<Category> category) const {
  std::shared_lock lock(mutex_);
  std::vector<Ipv4> out;
  if (interval.empty())
    return out;
  for (const auto& [ip, rec] : entities_) {
    auto [lo, hi] = time_range(rec.alerts, interval);
    bool hit = category ? std::any_of(lo, hi, [&](const StoredAlert& a) {
      return a.category == *category;
    })
                        : lo != hi;
    if (hit)
      out.push_back(ip);
  }
  return out;
}

bool AlertStore::has_alert(Ipv4 ip, Category category, Interval interval) const {
  std::shared_lock lock(mutex_);
  if (interval.empty())
    return false;
  auto it = entities_.find(ip);
  if (it == entities_.end())
    return false;
  auto [lo, hi] = time_range(it->second.alerts, interval);
  return std::any_of(lo, hi, [&](const StoredAlert& a) { return a.category == category; });
}

EnrichmentTags AlertStore::default_tags(Ipv4 ip) const {
  EnrichmentTags tags;
  tags.host = derive_hostname_tags(std::nullopt, ip, no_ptr_rule_);
  return tags;
}

EnrichmentTags AlertStore::enrichment(Ipv4 ip) const {
  std::shared_lock lock(mutex_);
  auto it = entities_.find(ip);
  if (it == entities_.end() || !it->second.enriched)
    return default_tags(ip);
  return it->second.enrichment;
}

std::optional<EntityRecord> AlertStore::entity(Ipv4 ip) const {
  std::shared_lock lock(mutex_);
  auto it = entities_.find(ip);
  if (it == entities_.end())
    return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> AlertStore::asn_of_unlocked(Ipv4 ip) const {
  auto it = entities_.find(ip);
  if (it != entities_.end() && it->second.enriched && it->second.enrichment.asn)
    return it->second.enrichment.asn;
  if (const auto* asn = maps_.ip_to_asn.lookup(ip))
    return *asn;
  return std::nullopt;
}

std::optional<std::string> AlertStore::country_of_unlocked(Ipv4 ip) const {
  auto it = entities_.find(ip);
  if (it != entities_.end() && it->second.enriched && it->second.enrichment.country)
    return it->second.enrichment.country;
  if (const auto* cc = maps_.ip_to_country.lookup(ip))
    return *cc;
  return std::nullopt;
}

std::optional<std::uint32_t> AlertStore::asn_of(Ipv4 ip) const {
  std::shared_lock lock(mutex_);
  return asn_of_unlocked(ip);
}

std::optional<std::string> AlertStore::country_of(Ipv4 ip) const {
  std::shared_lock lock(mutex_);
  return country_of_unlocked(ip);
}

std::optional<std::uint64_t> AlertStore::asn_size(std::uint32_t asn) const {
  std::shared_lock lock(mutex_);
  auto it = maps_.asn_sizes.find(asn);
  if (it == maps_.asn_sizes.end())
    return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> AlertStore::country_size(const std::string& cc) const {
  std::shared_lock lock(mutex_);
  auto it = maps_.country_sizes.find(cc);
  if (it == maps_.country_sizes.end())
    return std::nullopt;
  return it->second;
}

std::string AlertStore::detector_name(std::uint32_t id) const {
  std::shared_lock lock(mutex_);
  if (id >= detectors_.size())
    fail(Errc::OutOfRange, "unknown detector id " + std::to_string(id));
  return detectors_[id];
}

Alert AlertStore::to_alert(const StoredAlert& a) const {
  return Alert{a.t, a.ip, a.category, a.volume, detector_name(a.detector)};
}

std::vector<Ipv4> AlertStore::ips() const {
  std::shared_lock lock(mutex_);
  std::vector<Ipv4> out;
  out.reserve(entities_.size());
  for (const auto& [ip, rec] : entities_)
    out.push_back(ip);
  return out;
}

std::size_t AlertStore::entity_count() const {
  std::shared_lock lock(mutex_);
  return entities_.size();
}

std::size_t AlertStore::alert_count() const {
  std::shared_lock lock(mutex_);
  return alert_count_;
}

std::optional<Interval> AlertStore::time_span() const {
  std::shared_lock lock(mutex_);
  std::optional<Interval> span;
  for (const auto& [ip, rec] : entities_) {
    if (rec.alerts.empty())
      continue;
    auto first = rec.alerts.front().t;
    auto last = rec.alerts.back().t;
    if (!span)
      span = Interval{first, last};
    span->begin = std::min(span->begin, first);
    span->end = std::max(span->end, last);
  }
  return span;
}

void AlertStore::rebuild_prefix_index() {
  prefixes_.clear();
  for (const auto& [ip, rec] : entities_) {
    auto& v = prefixes_[Prefix24(ip)];
    v.insert(v.end(), rec.alerts.begin(), rec.alerts.end());
  }
  const auto rank = name_ranks(detectors_);
  for (auto& [p, v] : prefixes_)
    std::sort(v.begin(), v.end(), AlertOrder{rank});
}

// Snapshot layout (little-endian), framed by binary_io:
//   "FMPS" u8:version
//   u8:flags(bit0 = no-PTR rule)
//   u32:n_detectors { str }
//   u64:n_entities { u32:ip u64:n_alerts { i64:t u8:cat u64:vol u32:det }
//                    u8:enriched [tags] }
//   u32:n { u32:net u8:len u32:asn }      ip -> ASN
//   u32:n { u32:net u8:len str:cc }       ip -> country
//   u32:n { u32:asn u64:size }
//   u32:n { str:cc u64:size }
//   u32:crc32
void AlertStore::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  BinaryWriter w;
  w.raw(kSnapshotMagic);
  w.u8(kSnapshotVersion);
  w.u8(no_ptr_rule_ ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(detectors_.size()));
  for (const auto& d : detectors_)
    w.str(d);
  w.u64(entities_.size());
  for (const auto& [ip, rec] : entities_) {
    w.u32(ip.value());
    w.u64(rec.alerts.size());
    for (const auto& a : rec.alerts) {
      w.i64(a.t.time_since_epoch().count());
      w.u8(static_cast<std::uint8_t>(a.category));
      w.u64(a.volume);
      w.u32(a.detector);
    }
    w.u8(rec.enriched ? 1 : 0);
    if (rec.enriched)
      write_tags(w, rec.enrichment);
  }
  auto asn_entries = maps_.ip_to_asn.entries();
  w.u32(static_cast<std::uint32_t>(asn_entries.size()));
  for (const auto& [cidr, asn] : asn_entries) {
    w.u32(cidr.network.value());
    w.u8(static_cast<std::uint8_t>(cidr.length));
    w.u32(asn);
  }
  auto cc_entries = maps_.ip_to_country.entries();
  w.u32(static_cast<std::uint32_t>(cc_entries.size()));
  for (const auto& [cidr, cc] : cc_entries) {
    w.u32(cidr.network.value());
    w.u8(static_cast<std::uint8_t>(cidr.length));
    w.str(cc);
  }
  w.u32(static_cast<std::uint32_t>(maps_.asn_sizes.size()));
  for (const auto& [asn, n] : maps_.asn_sizes) {
    w.u32(asn);
    w.u64(n);
  }
  w.u32(static_cast<std::uint32_t>(maps_.country_sizes.size()));
  for (const auto& [cc, n] : maps_.country_sizes) {
    w.str(cc);
    w.u64(n);
  }
  w.finish_to_file(path);
}

AlertStore AlertStore::load(const std::filesystem::path& path) {
  auto payload =
      open_container(path, kSnapshotMagic, kSnapshotVersion, Errc::CorruptSnapshot);
  BinaryReader r(payload, Errc::CorruptSnapshot);
  AlertStore store;
  store.no_ptr_rule_ = (r.u8() & 1) != 0;
  auto n_det = r.u32();
  for (std::uint32_t i = 0; i < n_det; ++i)
    store.intern(r.str());
  auto n_ent = r.u64();
  for (std::uint64_t i = 0; i < n_ent; ++i) {
    Ipv4 ip{r.u32()};
    EntityRecord rec;
    rec.ip = ip;
    auto n_alerts = r.u64();
    if (n_alerts > r.remaining())
      r.corrupt("alert count exceeds payload");
    rec.alerts.reserve(n_alerts);
    for (std::uint64_t k = 0; k < n_alerts; ++k) {
      StoredAlert a;
      a.t = Timestamp{Seconds{r.i64()}};
      a.ip = ip;
      auto cat = r.u8();
      if (cat >= kCategoryCount)
        r.corrupt("bad category code");
      a.category = static_cast<Category>(cat);
      a.volume = r.u64();
      a.detector = r.u32();
      if (a.detector >= n_det)
        r.corrupt("bad detector id");
      rec.alerts.push_back(a);
    }
    rec.enriched = r.u8() != 0;
    rec.enrichment = rec.enriched ? read_tags(r) : store.default_tags(ip);
    store.alert_count_ += rec.alerts.size();
    store.entities_.emplace(ip, std::move(rec));
  }
  auto n_asn = r.u32();
  for (std::uint32_t i = 0; i < n_asn; ++i) {
    Ipv4 net{r.u32()};
    int len = r.u8();
    store.maps_.ip_to_asn.insert(Cidr{net, len}, r.u32());
  }
  auto n_cc = r.u32();
  for (std::uint32_t i = 0; i < n_cc; ++i) {
    Ipv4 net{r.u32()};
    int len = r.u8();
    store.maps_.ip_to_country.insert(Cidr{net, len}, r.str());
  }
  auto n_asn_sizes = r.u32();
  for (std::uint32_t i = 0; i < n_asn_sizes; ++i) {
    auto asn = r.u32();
    store.maps_.asn_sizes[asn] = r.u64();
  }
  auto n_cc_sizes = r.u32();
  for (std::uint32_t i = 0; i < n_cc_sizes; ++i) {
    auto cc = r.str();
    store.maps_.country_sizes[cc] = r.u64();
  }
  if (!r.at_end())
    r.corrupt("trailing bytes in snapshot");
  store.rebuild_prefix_index();
  return store;
}

} // namespace fmp
