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

#include "fmp/alerts.hpp"

#include "fmp/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <istream>

namespace fmp {

namespace {

bool read_fixed(std::string_view& s, std::size_t width, int& out) {
  if (s.size() < width)
    return false;
  for (std::size_t i = 0; i < width; ++i)
    if (s[i] < '0' || s[i] > '9')
      return false;
  std::from_chars(s.data(), s.data() + width, out);
  s.remove_prefix(width);
  return true;
}

bool expect(std::string_view& s, char c) {
  if (s.empty() || s.front() != c)
    return false;
  s.remove_prefix(1);
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

Ipv4 parse_ip_field(const nlohmann::json& value) {
  if (!value.is_string())
    fail(Errc::MalformedRecord, "source address must be a string");
  auto ip = Ipv4::parse(value.get_ref<const std::string&>());
  if (!ip)
    fail(Errc::InvalidField, "invalid IPv4 address: " + value.get<std::string>());
  return *ip;
}

} // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  int year, month, day, hour, minute, second;
  if (!read_fixed(s, 4, year) || !expect(s, '-') || !read_fixed(s, 2, month) ||
      !expect(s, '-') || !read_fixed(s, 2, day))
    return std::nullopt;
  if (s.empty() || (s.front() != 'T' && s.front() != 't' && s.front() != ' '))
    return std::nullopt;
  s.remove_prefix(1);
  if (!read_fixed(s, 2, hour) || !expect(s, ':') || !read_fixed(s, 2, minute) ||
      !expect(s, ':') || !read_fixed(s, 2, second))
    return std::nullopt;
  if (!s.empty() && s.front() == '.') {
    s.remove_prefix(1);
    std::size_t digits = 0;
    while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9')
      ++digits;
    if (digits == 0)
      return std::nullopt;
    s.remove_prefix(digits);
  }
  int offset_minutes = 0;
  if (s == "Z" || s == "z") {
    s.remove_prefix(1);
  } else if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    int sign = s.front() == '-' ? -1 : 1;
    s.remove_prefix(1);
    int oh, om;
    if (!read_fixed(s, 2, oh) || !expect(s, ':') || !read_fixed(s, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset_minutes = sign * (oh * 60 + om);
  } else {
    return std::nullopt;
  }
  if (!s.empty())
    return std::nullopt;

  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                     std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60)
    return std::nullopt;
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} -
         minutes{offset_minutes};
}

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  auto day_start = floor<days>(t);
  year_month_day ymd{day_start};
  hh_mm_ss<seconds> hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string_view to_string(Category c) {
  return c == Category::scan ? "scan" : "access";
}

std::optional<Category> parse_category(std::string_view text) {
  if (text == "scan")
    return Category::scan;
  if (text == "access")
    return Category::access;
  return std::nullopt;
}

WindowConfig::WindowConfig(Timestamp t0, int history_days, int prediction_days)
    : t0_(t0), history_days_(history_days), prediction_days_(prediction_days) {
  if (history_days < 1 || prediction_days < 1)
    fail(Errc::ConfigError, "window lengths must be at least one day");
}

std::optional<AlertRecord> parse_record(std::string_view line) {
  line = trim(line);
  if (line.empty() || line.front() == '#')
    return std::nullopt;

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::MalformedRecord, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object())
    fail(Errc::MalformedRecord, "alert record must be a JSON object");

  auto field = [&](const char* key) -> const nlohmann::json& {
    auto it = doc.find(key);
    if (it == doc.end())
      fail(Errc::MalformedRecord, std::string("missing key '") + key + "'");
    return *it;
  };

  AlertRecord rec;

  const auto& ts = field("ts");
  if (!ts.is_string())
    fail(Errc::MalformedRecord, "'ts' must be a string");
  auto t = parse_rfc3339(ts.get_ref<const std::string&>());
  if (!t)
    fail(Errc::InvalidField, "unparseable timestamp: " + ts.get<std::string>());
  rec.t = *t;

  bool has_src = doc.contains("src");
  bool has_srcs = doc.contains("srcs");
  if (has_src == has_srcs)
    fail(Errc::MalformedRecord, "exactly one of 'src' or 'srcs' is required");
  if (has_src) {
    rec.sources.push_back(parse_ip_field(doc["src"]));
  } else {
    const auto& srcs = doc["srcs"];
    if (!srcs.is_array() || srcs.empty())
      fail(Errc::MalformedRecord, "'srcs' must be a non-empty array");
    for (const auto& s : srcs)
      rec.sources.push_back(parse_ip_field(s));
  }

  const auto& cat = field("cat");
  if (!cat.is_string())
    fail(Errc::MalformedRecord, "'cat' must be a string");
  auto category = parse_category(cat.get_ref<const std::string&>());
  if (!category)
    fail(Errc::InvalidField, "unsupported category: " + cat.get<std::string>());
  rec.category = *category;

  const auto& vol = field("vol");
  if (vol.is_number_unsigned())
    rec.volume = vol.get<std::uint64_t>();
  else if (vol.is_number_integer())
    fail(Errc::InvalidField, "negative volume");
  else if (vol.is_number())
    fail(Errc::InvalidField, "volume must be an integer");
  else
    fail(Errc::MalformedRecord, "'vol' must be a number");

  const auto& det = field("det");
  if (!det.is_string())
    fail(Errc::MalformedRecord, "'det' must be a string");
  rec.detector = det.get<std::string>();
  if (rec.detector.empty())
    fail(Errc::InvalidField, "empty detector identifier");

  return rec;
}

Alert parse_alert(std::string_view line) {
  auto rec = parse_record(line);
  if (!rec)
    fail(Errc::MalformedRecord, "blank or comment line");
  if (rec->sources.size() != 1)
    fail(Errc::MalformedRecord, "multi-source record; expand it with expand_multisource");
  return Alert{rec->t, rec->sources.front(), rec->category, rec->volume,
               std::move(rec->detector)};
}

std::vector<Alert> expand_multisource(const AlertRecord& record) {
  const auto k = record.sources.size();
  if (k == 0)
    fail(Errc::MalformedRecord, "record lists no sources");
  std::vector<Alert> out;
  out.reserve(k);
  const std::uint64_t base = record.volume / k;
  const std::uint64_t extra = record.volume % k;
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(Alert{record.t, record.sources[i], record.category,
                        base + (i < extra ? 1 : 0), record.detector});
  return out;
}

std::string render_alert(const Alert& alert) {
  nlohmann::ordered_json j;
  j["ts"] = format_rfc3339(alert.t);
  j["src"] = alert.source.to_string();
  j["cat"] = to_string(alert.category);
  j["vol"] = alert.volume;
  j["det"] = alert.detector;
  return j.dump();
}

StreamReadStats read_alerts(std::istream& in, const std::function<void(Alert&&)>& sink,
                            bool strict) {
  StreamReadStats stats;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines;
    try {
      auto rec = parse_record(line);
      if (!rec)
        continue;
      ++stats.records;
      for (auto& alert : expand_multisource(*rec)) {
        ++stats.alerts;
        sink(std::move(alert));
      }
    } catch (const Error& e) {
      if (strict)
        throw Error(e.code(), "line " + std::to_string(stats.lines) + ": " + e.what());
      ++stats.rejected;
      if (stats.first_errors.size() < 5)
        stats.first_errors.push_back("line " + std::to_string(stats.lines) + ": " + e.what());
    }
  }
  return stats;
}

} // namespace fmp
