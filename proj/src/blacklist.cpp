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

#include "fmp/blacklist.hpp"

#include "fmp/binary_io.hpp"
#include "fmp/dataset.hpp"
#include "fmp/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fmp {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<ScoredIp> ranked(std::span<const ScoredIp> scored) {
  std::vector<ScoredIp> out(scored.begin(), scored.end());
  std::unordered_set<Ipv4> seen;
  for (const auto& s : out) {
    if (!(s.score >= 0.0 && s.score <= 1.0))
      fail(Errc::DomainError, "score outside [0, 1] for " + s.ip.to_string());
    if (!seen.insert(s.ip).second)
      fail(Errc::DomainError, "duplicate score for " + s.ip.to_string());
  }
  std::sort(out.begin(), out.end(), [](const ScoredIp& a, const ScoredIp& b) {
    return a.score != b.score ? a.score > b.score : a.ip < b.ip;
  });
  return out;
}

Blacklist make_list(std::string name, Timestamp t0, Category category, BlacklistPolicy policy) {
  Blacklist bl;
  bl.name = std::move(name);
  bl.generated_at = t0;
  bl.category = category;
  bl.policy = policy;
  return bl;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

PolicyKind parse_policy_kind(const std::string& s) {
  for (auto k : {PolicyKind::fmp_topn, PolicyKind::fmp_threshold, PolicyKind::gwol,
                 PolicyKind::third_party, PolicyKind::combined})
    if (to_string(k) == s)
      return k;
  fail(Errc::MalformedRecord, "unknown blacklist policy '" + s + "'");
}

} // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
  case PolicyKind::fmp_topn:
    return "fmp_topn";
  case PolicyKind::fmp_threshold:
    return "fmp_threshold";
  case PolicyKind::gwol:
    return "gwol";
  case PolicyKind::third_party:
    return "third_party";
  case PolicyKind::combined:
    return "union";
  }
  return "unknown";
}

Blacklist fmp_topn(std::span<const ScoredIp> scored, std::size_t n, Timestamp t0,
                   Category category) {
  if (n < 1)
    fail(Errc::ConfigError, "top-N list needs N >= 1");
  BlacklistPolicy policy{PolicyKind::fmp_topn, n, 0, 0};
  auto bl = make_list("fmp_top" + std::to_string(n), t0, category, policy);
  auto order = ranked(scored);
  order.resize(std::min(order.size(), n));
  for (const auto& s : order)
    bl.entries.push_back({s.ip, s.score, {bl.name}});
  return bl;
}

Blacklist fmp_threshold(std::span<const ScoredIp> scored, double threshold, Timestamp t0,
                        Category category) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    fail(Errc::ConfigError, "threshold must lie in [0, 1]");
  BlacklistPolicy policy{PolicyKind::fmp_threshold, 0, threshold, 0};
  auto bl = make_list("fmp_t" + format_double(threshold), t0, category, policy);
  for (const auto& s : ranked(scored)) {
    if (s.score < threshold)
      break;
    bl.entries.push_back({s.ip, s.score, {bl.name}});
  }
  return bl;
}

Blacklist gwol(const AlertStore& store, Timestamp t0, int window_days, std::size_t n,
               Category category) {
  if (window_days < 1)
    fail(Errc::ConfigError, "GWOL window must be >= 1 day");
  if (n < 1)
    fail(Errc::ConfigError, "GWOL list needs N >= 1");
  const Interval window{t0 - window_days * kDay, t0};

  struct Activity {
    Ipv4 ip;
    std::size_t count = 0;
    std::uint64_t volume = 0;
  };
  std::vector<Activity> act;
  for (auto ip : store.active_ips(window, category)) {
    Activity a{ip};
    for (const auto& alert : store.query_entity(ip, window))
      if (alert.category == category) {
        ++a.count;
        a.volume += alert.volume;
      }
    act.push_back(a);
  }
  std::sort(act.begin(), act.end(), [](const Activity& a, const Activity& b) {
    if (a.count != b.count)
      return a.count > b.count;
    if (a.volume != b.volume)
      return a.volume > b.volume;
    return a.ip < b.ip;
  });
  act.resize(std::min(act.size(), n));

  BlacklistPolicy policy{PolicyKind::gwol, n, 0, window_days};
  auto bl = make_list("gwol" + std::to_string(window_days), t0, category, policy);
  for (const auto& a : act)
    bl.entries.push_back({a.ip, static_cast<double>(a.count), {bl.name}});
  return bl;
}

Blacklist read_third_party(std::istream& in, std::string name, Timestamp t0, Category category) {
  auto bl = make_list(std::move(name), t0, category, {PolicyKind::third_party, 0, 0, 0});
  std::unordered_set<Ipv4> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto text = trim(std::string_view(line).substr(0, line.find('#')));
    if (text.empty())
      continue;
    auto cidr = Cidr::parse(text);
    if (!cidr)
      fail(Errc::InvalidField, "line " + std::to_string(lineno) + ": not an IPv4 address or CIDR");
    if (cidr->length < 24)
      fail(Errc::InvalidField, "line " + std::to_string(lineno) + ": prefixes shorter than /24 are not expanded");
    for (std::uint64_t k = 0; k < cidr->size(); ++k) {
      Ipv4 ip{cidr->network.value() + static_cast<std::uint32_t>(k)};
      if (seen.insert(ip).second)
        bl.entries.push_back({ip, 1.0, {bl.name}});
    }
  }
  return bl;
}

Blacklist union_blacklists(std::span<const Blacklist> lists) {
  if (lists.empty())
    fail(Errc::Empty, "nothing to combine");
  for (const auto& l : lists)
    if (l.category != lists.front().category)
      fail(Errc::CategoryMismatch, "cannot combine lists for different categories");

  struct Merged {
    std::size_t best_rank;
    double score;
    std::vector<std::string> sources;
  };
  std::unordered_map<Ipv4, Merged> merged;
  for (const auto& l : lists)
    for (std::size_t r = 0; r < l.entries.size(); ++r) {
      const auto& e = l.entries[r];
      auto [it, inserted] = merged.try_emplace(e.ip, Merged{r, e.score, {}});
      auto& m = it->second;
      if (!inserted && r < m.best_rank) {
        m.best_rank = r;
        m.score = e.score;
      }
      for (const auto& s : e.sources)
        if (std::find(m.sources.begin(), m.sources.end(), s) == m.sources.end())
          m.sources.push_back(s);
    }

  std::string name;
  for (const auto& l : lists)
    name += (name.empty() ? "" : "+") + l.name;
  auto bl = make_list(name, lists.front().generated_at, lists.front().category,
                      {PolicyKind::combined, 0, 0, 0});
  std::vector<std::pair<Ipv4, Merged*>> order;
  for (auto& [ip, m] : merged)
    order.emplace_back(ip, &m);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second->best_rank != b.second->best_rank ? a.second->best_rank < b.second->best_rank
                                                      : a.first < b.first;
  });
  for (auto& [ip, m] : order)
    bl.entries.push_back({ip, m->score, std::move(m->sources)});
  return bl;
}

HitReport evaluate_blacklist(const Blacklist& bl, const AlertStore& store, Category category) {
  const Timestamp t0 = bl.generated_at;
  const Interval day{t0 + std::chrono::seconds{1}, t0 + kDay + std::chrono::seconds{1}};
  const Interval prior{t0 - 7 * kDay, t0};

  HitReport r;
  r.list_size = bl.entries.size();
  auto attackers = store.active_ips(day, category);
  std::unordered_set<Ipv4> attacking(attackers.begin(), attackers.end());
  for (const auto& e : bl.entries)
    r.hit_count += attacking.count(e.ip);
  r.attackers_total = attackers.size();
  if (r.list_size > 0)
    r.hit_rate = static_cast<double>(r.hit_count) / static_cast<double>(r.list_size);
  if (r.attackers_total > 0) {
    std::size_t fresh = 0;
    for (auto ip : attackers)
      fresh += !store.has_alert(ip, category, prior);
    const double total = static_cast<double>(r.attackers_total);
    r.attackers_blocked_fraction = static_cast<double>(r.hit_count) / total;
    r.new_attacker_fraction = static_cast<double>(fresh) / total;
  }
  return r;
}

void write_blacklist(const Blacklist& bl, const std::filesystem::path& path) {
  std::string txt;
  for (const auto& e : bl.entries)
    txt += e.ip.to_string() + '\n';
  write_text_file(path, txt);

  ordered_json j;
  j["name"] = bl.name;
  j["t0"] = format_rfc3339(bl.generated_at);
  j["category"] = std::string(to_string(bl.category));
  auto& p = j["policy"];
  p["kind"] = std::string(to_string(bl.policy.kind));
  if (bl.policy.kind == PolicyKind::fmp_topn || bl.policy.kind == PolicyKind::gwol)
    p["n"] = bl.policy.n;
  if (bl.policy.kind == PolicyKind::fmp_threshold)
    p["threshold"] = bl.policy.threshold;
  if (bl.policy.kind == PolicyKind::gwol)
    p["window_days"] = bl.policy.window_days;
  j["size"] = bl.entries.size();
  j["entries"] = ordered_json::array();
  for (const auto& e : bl.entries)
    j["entries"].push_back({{"ip", e.ip.to_string()}, {"score", e.score}, {"sources", e.sources}});
  write_text_file(path.string() + ".json", j.dump(2) + "\n");
}

Blacklist read_blacklist(const std::filesystem::path& path) {
  const std::filesystem::path sidecar = path.string() + ".json";
  if (!std::filesystem::exists(sidecar)) {
    std::ifstream in(path);
    if (!in)
      fail(Errc::IoError, "cannot open " + path.string());
    return read_third_party(in, path.filename().string(), Timestamp{}, Category::scan);
  }
  std::ifstream in(sidecar);
  if (!in)
    fail(Errc::IoError, "cannot open " + sidecar.string());
  Blacklist bl;
  try {
    auto j = nlohmann::json::parse(in);
    bl.name = j.at("name").get<std::string>();
    auto t0 = parse_rfc3339(j.at("t0").get<std::string>());
    auto category = parse_category(j.at("category").get<std::string>());
    if (!t0 || !category)
      fail(Errc::MalformedRecord, "bad t0 or category in " + sidecar.string());
    bl.generated_at = *t0;
    bl.category = *category;
    const auto& p = j.at("policy");
    bl.policy.kind = parse_policy_kind(p.at("kind").get<std::string>());
    bl.policy.n = p.value("n", std::size_t{0});
    bl.policy.threshold = p.value("threshold", 0.0);
    bl.policy.window_days = p.value("window_days", 0);
    for (const auto& e : j.at("entries")) {
      auto ip = Ipv4::parse(e.at("ip").get<std::string>());
      if (!ip)
        fail(Errc::MalformedRecord, "bad IP in " + sidecar.string());
      bl.entries.push_back({*ip, e.at("score").get<double>(),
                            e.at("sources").get<std::vector<std::string>>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::MalformedRecord, sidecar.string() + ": " + ex.what());
  }
  return bl;
}

std::string to_json(const HitReport& r, int indent) {
  ordered_json j;
  j["list_size"] = r.list_size;
  j["hit_count"] = r.hit_count;
  j["hit_rate"] = r.hit_rate;
  j["attackers_total"] = r.attackers_total;
  j["attackers_blocked_fraction"] = r.attackers_blocked_fraction;
  j["new_attacker_fraction"] = r.new_attacker_fraction;
  return j.dump(indent) + "\n";
}

} // namespace fmp
