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

#include "fmp/simgen.hpp"

#include "fmp/binary_io.hpp"
#include "fmp/dataset.hpp"
#include "fmp/error.hpp"
#include "fmp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace fmp {

namespace {

using json = nlohmann::json;

constexpr std::uint32_t kActorBase = 20u << 24;        // 20.0.0.0/8, one /24 per actor
constexpr std::uint32_t kNeighborhoodBase = 30u << 24; // 30.0.0.0/8, one /24 per neighborhood
constexpr std::uint32_t kNoiseBase = 40u << 24;        // 40.0.0.0/8, random hosts
constexpr std::size_t kSlotsPerBlock = 1u << 16;       // /24s in a /8

// ---------------------------------------------------------------------------
// Scenario JSON

[[noreturn]] void bad_config(const std::string& what) { fail(Errc::ConfigError, what); }

void reject_unknown(const json& obj, std::initializer_list<std::string_view> keys,
                    const std::string& where) {
  if (!obj.is_object())
    bad_config(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      bad_config("unknown key '" + k + "' in " + where);
}

UniformRange read_range(const json& v, const std::string& key) {
  if (v.is_number())
    return {v.get<double>(), v.get<double>()};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  bad_config("'" + key + "' must be a number or [lo, hi]");
}

IntRange read_int_range(const json& v, const std::string& key) {
  if (v.is_number_integer())
    return {v.get<int>(), v.get<int>()};
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer())
    return {v[0].get<int>(), v[1].get<int>()};
  bad_config("'" + key + "' must be an integer or [lo, hi]");
}

VolumeDist read_volume(const json& v) {
  if (v.is_object() && v.size() == 1) {
    if (auto c = v.find("constant"); c != v.end() && c->is_number_integer())
      return {false, c->get<double>()};
    if (auto g = v.find("geometric"); g != v.end() && g->is_number())
      return {true, g->get<double>()};
  }
  bad_config("'volume' must be {\"constant\": k} or {\"geometric\": p}");
}

std::vector<Category> read_categories(const json& v) {
  if (!v.is_array() || v.empty())
    bad_config("'categories' must be a non-empty array");
  std::vector<Category> out;
  for (const auto& c : v) {
    auto cat = c.is_string() ? parse_category(c.get<std::string>()) : std::nullopt;
    if (!cat)
      bad_config("unknown category in 'categories'");
    if (std::find(out.begin(), out.end(), *cat) == out.end())
      out.push_back(*cat);
  }
  return out;
}

ActorKind read_kind(const json& v) {
  if (v.is_string())
    for (auto k : {ActorKind::persistent, ActorKind::periodic, ActorKind::oneshot,
                   ActorKind::churning, ActorKind::cross_category})
      if (to_string(k) == v.get<std::string>())
        return k;
  bad_config("'kind' must be one of persistent, periodic, oneshot, churning, cross_category");
}

template <typename T>
T get_as(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end())
    return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    bad_config(std::string("'") + key + "' has the wrong type");
  }
}

ActorGroup read_group(const json& g) {
  reject_unknown(g,
                 {"kind", "count", "categories", "p", "alerts_per_day", "volume", "detectors",
                  "period_days", "lifetime_days", "coupling", "base_access", "blacklist_rate"},
                 "actor group");
  ActorGroup out;
  if (!g.contains("kind"))
    bad_config("actor group needs 'kind'");
  out.kind = read_kind(g["kind"]);
  out.count = get_as<std::size_t>(g, "count", 0);
  if (g.contains("categories"))
    out.categories = read_categories(g["categories"]);
  if (g.contains("p"))
    out.p = read_range(g["p"], "p");
  if (g.contains("alerts_per_day"))
    out.alerts_per_day = read_int_range(g["alerts_per_day"], "alerts_per_day");
  if (g.contains("volume"))
    out.volume = read_volume(g["volume"]);
  out.detectors = get_as<int>(g, "detectors", out.detectors);
  if (g.contains("period_days"))
    out.period_days = read_int_range(g["period_days"], "period_days");
  if (g.contains("lifetime_days"))
    out.lifetime_days = read_int_range(g["lifetime_days"], "lifetime_days");
  out.coupling = get_as<double>(g, "coupling", out.coupling);
  if (g.contains("base_access"))
    out.base_access = read_range(g["base_access"], "base_access");
  out.blacklist_rate = get_as<double>(g, "blacklist_rate", out.blacklist_rate);
  return out;
}

NeighborhoodSpec read_neighborhood(const json& g) {
  reject_unknown(g,
                 {"count", "members", "categories", "p", "p_stay", "p_wake", "alerts_per_day",
                  "volume", "detectors"},
                 "neighborhood");
  NeighborhoodSpec out;
  out.count = get_as<std::size_t>(g, "count", 0);
  if (g.contains("members"))
    out.members = read_int_range(g["members"], "members");
  if (g.contains("categories"))
    out.categories = read_categories(g["categories"]);
  if (g.contains("p"))
    out.p = read_range(g["p"], "p");
  out.p_stay = get_as<double>(g, "p_stay", out.p_stay);
  out.p_wake = get_as<double>(g, "p_wake", out.p_wake);
  if (g.contains("alerts_per_day"))
    out.alerts_per_day = read_int_range(g["alerts_per_day"], "alerts_per_day");
  if (g.contains("volume"))
    out.volume = read_volume(g["volume"]);
  out.detectors = get_as<int>(g, "detectors", out.detectors);
  return out;
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_range(const UniformRange& r, const std::string& what) {
  if (!is_probability(r.lo) || !is_probability(r.hi) || r.lo > r.hi)
    bad_config(what + " must satisfy 0 <= lo <= hi <= 1");
}

void check_int_range(const IntRange& r, int min, const std::string& what) {
  if (r.lo < min || r.lo > r.hi)
    bad_config(what + " must satisfy " + std::to_string(min) + " <= lo <= hi");
}

void check_volume(const VolumeDist& v) {
  if (v.geometric ? !(v.param > 0.0 && v.param <= 1.0) : !(v.param >= 1.0))
    bad_config("volume must be a constant >= 1 or geometric with p in (0, 1]");
}

// ---------------------------------------------------------------------------
// Generation

struct Actor {
  Ipv4 ip;
  ActorKind kind = ActorKind::persistent;
  std::size_t group = 0;
  std::array<bool, kCategoryCount> cats{};
  double p = 0;
  IntRange alerts{1, 1};
  VolumeDist volume;
  std::vector<std::uint32_t> detectors;
  int start = 0;
  int end = 0;
  int period = 1;
  int phase = 0;
  double coupling = 0;
  double base_access = 0;
  std::size_t hood = 0;
  bool scanned_yesterday = false;
  int first_day = -1;
  std::vector<std::array<double, kCategoryCount>> truth;
};

struct Hood {
  bool active = false;
  double p_stay = 0;
  double p_wake = 0;
};

std::array<bool, kCategoryCount> category_mask(const std::vector<Category>& cats) {
  std::array<bool, kCategoryCount> m{};
  for (auto c : cats)
    m[index_of(c)] = true;
  return m;
}

std::vector<std::uint32_t> pick_detectors(Rng& rng, int pool, int k) {
  std::vector<std::uint32_t> all(static_cast<std::size_t>(pool));
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

std::string detector_label(std::uint32_t id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "det-%02u", id + 1);
  return buf;
}

std::uint64_t draw_volume(Rng& rng, const VolumeDist& v) {
  return v.geometric ? rng.geometric(v.param) : static_cast<std::uint64_t>(v.param);
}

void emit(Rng& rng, std::vector<Alert>& out, const Actor& a, Category cat, Timestamp day_start) {
  const auto k = rng.between(a.alerts.lo, a.alerts.hi);
  for (std::int64_t i = 0; i < k; ++i) {
    Alert alert;
    alert.t = day_start + std::chrono::seconds{rng.between(1, 86399)};
    alert.source = a.ip;
    alert.category = cat;
    alert.volume = draw_volume(rng, a.volume);
    alert.detector = detector_label(a.detectors[rng.below(a.detectors.size())]);
    out.push_back(std::move(alert));
  }
}

std::string make_hostname(Rng& rng, Ipv4 ip) {
  auto o = ip.octets();
  char buf[96];
  switch (rng.below(4)) {
  case 0:
    std::snprintf(buf, sizeof buf, "static-%u-%u-%u-%u.isp%u.example", o[0], o[1], o[2], o[3],
                  static_cast<unsigned>(rng.below(10)));
    break;
  case 1:
    std::snprintf(buf, sizeof buf, "dyn-%u-%u-%u-%u.pool.example", o[3], o[2], o[1], o[0]);
    break;
  case 2:
    std::snprintf(buf, sizeof buf, "host%u.example.net", static_cast<unsigned>(rng.below(100000)));
    break;
  default:
    std::snprintf(buf, sizeof buf, "dsl%u.access.example", static_cast<unsigned>(rng.below(100000)));
    break;
  }
  return buf;
}

EnrichmentRecord make_enrichment(Rng& rng, Ipv4 ip, double bl_rate, double dyn_rate,
                                 double no_ptr_rate) {
  EnrichmentRecord rec;
  rec.ip = ip;
  for (auto& b : rec.blacklists)
    b = rng.bernoulli(bl_rate);
  rec.dynamic_list = rng.bernoulli(dyn_rate);
  if (!rng.bernoulli(no_ptr_rate))
    rec.hostname = make_hostname(rng, ip);
  return rec;
}

constexpr const char* kCountries[] = {"CZ", "DE", "US", "CN", "BR", "RU", "NL", "FR"};

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (comma == std::string_view::npos)
      break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

} // namespace

std::string_view to_string(ActorKind kind) {
  switch (kind) {
  case ActorKind::persistent:
    return "persistent";
  case ActorKind::periodic:
    return "periodic";
  case ActorKind::oneshot:
    return "oneshot";
  case ActorKind::churning:
    return "churning";
  case ActorKind::neighborhood_member:
    return "neighborhood_member";
  case ActorKind::cross_category:
    return "cross_category";
  case ActorKind::noise:
    return "noise";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  if (n_days < 1)
    bad_config("n_days must be >= 1");
  if (first_t0_day < 0 || first_t0_day >= n_days)
    bad_config("first_t0_day must lie in [0, n_days)");
  if (detector_pool < 1 || detector_pool > 99)
    bad_config("detector_pool must lie in [1, 99]");
  std::size_t slots = 0;
  for (const auto& g : actors) {
    if (g.kind == ActorKind::neighborhood_member || g.kind == ActorKind::noise)
      bad_config("neighborhoods and noise have their own sections");
    check_range(g.p, "p");
    check_int_range(g.alerts_per_day, 1, "alerts_per_day");
    check_volume(g.volume);
    if (g.detectors < 1 || g.detectors > detector_pool)
      bad_config("detectors must lie in [1, detector_pool]");
    check_int_range(g.period_days, 1, "period_days");
    check_int_range(g.lifetime_days, 1, "lifetime_days");
    if (!is_probability(g.coupling))
      bad_config("coupling must lie in [0, 1]");
    check_range(g.base_access, "base_access");
    if (g.blacklist_rate >= 0 && g.blacklist_rate > 1)
      bad_config("blacklist_rate must lie in [0, 1]");
    if (g.categories.empty())
      bad_config("categories must not be empty");
    slots += g.count;
  }
  if (slots > kSlotsPerBlock)
    bad_config("too many actors (at most 65536)");
  std::size_t hoods = 0;
  for (const auto& h : neighborhoods) {
    check_int_range(h.members, 1, "members");
    if (h.members.hi > 254)
      bad_config("a neighborhood holds at most 254 members");
    check_range(h.p, "p");
    if (!is_probability(h.p_stay) || !is_probability(h.p_wake))
      bad_config("p_stay and p_wake must lie in [0, 1]");
    check_int_range(h.alerts_per_day, 1, "alerts_per_day");
    check_volume(h.volume);
    if (h.detectors < 1 || h.detectors > detector_pool)
      bad_config("detectors must lie in [1, detector_pool]");
    if (h.categories.empty())
      bad_config("categories must not be empty");
    hoods += h.count;
  }
  if (hoods > kSlotsPerBlock)
    bad_config("too many neighborhoods (at most 65536)");
  if (!is_probability(noise.daily_prob))
    bad_config("noise.daily_prob must lie in [0, 1]");
  if (noise.pool > (1u << 23))
    bad_config("noise.pool must be at most 8388608");
  if (noise.pool > 0 && noise.categories.empty())
    bad_config("noise.categories must not be empty");
  for (double r : {enrichment.blacklist_rate_actor, enrichment.blacklist_rate_noise,
                   enrichment.dynamic_rate_actor, enrichment.dynamic_rate_noise,
                   enrichment.no_ptr_rate})
    if (!is_probability(r))
      bad_config("enrichment rates must lie in [0, 1]");
}

ScenarioConfig ScenarioConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad_config(std::string("scenario is not valid JSON: ") + e.what());
  }
  reject_unknown(doc,
                 {"seed", "start", "n_days", "first_t0_day", "detector_pool", "actors",
                  "neighborhoods", "noise", "enrichment"},
                 "scenario");
  ScenarioConfig cfg;
  cfg.seed = get_as<std::uint64_t>(doc, "seed", 0);
  if (auto s = doc.find("start"); s != doc.end()) {
    auto t = s->is_string() ? parse_rfc3339(s->get<std::string>()) : std::nullopt;
    if (!t)
      bad_config("'start' must be an RFC 3339 timestamp");
    cfg.start = *t;
  } else {
    cfg.start = *parse_rfc3339("2026-01-01T00:00:00Z");
  }
  cfg.n_days = get_as<int>(doc, "n_days", cfg.n_days);
  cfg.first_t0_day = get_as<int>(doc, "first_t0_day", std::min(cfg.first_t0_day, cfg.n_days - 1));
  cfg.detector_pool = get_as<int>(doc, "detector_pool", cfg.detector_pool);
  if (auto a = doc.find("actors"); a != doc.end()) {
    if (!a->is_array())
      bad_config("'actors' must be an array");
    for (const auto& g : *a)
      cfg.actors.push_back(read_group(g));
  }
  if (auto n = doc.find("neighborhoods"); n != doc.end()) {
    if (!n->is_array())
      bad_config("'neighborhoods' must be an array");
    for (const auto& g : *n)
      cfg.neighborhoods.push_back(read_neighborhood(g));
  }
  if (auto n = doc.find("noise"); n != doc.end()) {
    reject_unknown(*n, {"pool", "daily_prob", "categories"}, "noise");
    cfg.noise.pool = get_as<std::size_t>(*n, "pool", 0);
    cfg.noise.daily_prob = get_as<double>(*n, "daily_prob", 0.0);
    if (n->contains("categories"))
      cfg.noise.categories = read_categories((*n)["categories"]);
  }
  if (auto e = doc.find("enrichment"); e != doc.end()) {
    reject_unknown(*e,
                   {"blacklist_rate_actor", "blacklist_rate_noise", "dynamic_rate_actor",
                    "dynamic_rate_noise", "no_ptr_rate"},
                   "enrichment");
    auto& en = cfg.enrichment;
    en.blacklist_rate_actor = get_as<double>(*e, "blacklist_rate_actor", en.blacklist_rate_actor);
    en.blacklist_rate_noise = get_as<double>(*e, "blacklist_rate_noise", en.blacklist_rate_noise);
    en.dynamic_rate_actor = get_as<double>(*e, "dynamic_rate_actor", en.dynamic_rate_actor);
    en.dynamic_rate_noise = get_as<double>(*e, "dynamic_rate_noise", en.dynamic_rate_noise);
    en.no_ptr_rate = get_as<double>(*e, "no_ptr_rate", en.no_ptr_rate);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    fail(Errc::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

Simulation generate(const ScenarioConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int n_days = config.n_days;

  // Actor /24s are scattered over 20.0.0.0/8 so no /16 collects one kind.
  std::size_t n_slots = 0;
  for (const auto& g : config.actors)
    n_slots += g.count;
  std::vector<std::uint32_t> slots;
  {
    std::unordered_set<std::uint32_t> used;
    while (slots.size() < n_slots) {
      auto s = static_cast<std::uint32_t>(rng.below(kSlotsPerBlock));
      if (used.insert(s).second)
        slots.push_back(s);
    }
  }

  std::vector<Actor> actors;
  std::size_t next_slot = 0;
  for (std::size_t gi = 0; gi < config.actors.size(); ++gi) {
    const auto& g = config.actors[gi];
    for (std::size_t i = 0; i < g.count; ++i) {
      Actor a;
      a.ip = Ipv4{kActorBase + (slots[next_slot++] << 8) + static_cast<std::uint32_t>(rng.between(1, 254))};
      a.kind = g.kind;
      a.group = gi;
      a.cats = category_mask(g.categories);
      a.p = rng.uniform(g.p.lo, g.p.hi);
      a.alerts = g.alerts_per_day;
      a.volume = g.volume;
      a.detectors = pick_detectors(rng, config.detector_pool, g.detectors);
      a.end = n_days;
      switch (g.kind) {
      case ActorKind::periodic:
        a.period = static_cast<int>(rng.between(g.period_days.lo, g.period_days.hi));
        a.phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(a.period)));
        break;
      case ActorKind::oneshot:
        a.start = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_days)));
        a.end = a.start + 1;
        break;
      case ActorKind::churning:
        a.start = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_days)));
        a.end = a.start + static_cast<int>(rng.between(g.lifetime_days.lo, g.lifetime_days.hi));
        break;
      case ActorKind::cross_category:
        a.cats = {true, true};
        a.coupling = g.coupling;
        a.base_access = rng.uniform(g.base_access.lo, g.base_access.hi);
        break;
      default:
        break;
      }
      actors.push_back(std::move(a));
    }
  }

  std::vector<Hood> hoods;
  std::uint32_t hood_slot = 0;
  for (std::size_t hi = 0; hi < config.neighborhoods.size(); ++hi) {
    const auto& h = config.neighborhoods[hi];
    for (std::size_t k = 0; k < h.count; ++k) {
      const std::uint32_t net = kNeighborhoodBase + (hood_slot++ << 8);
      std::vector<std::uint32_t> hosts(254);
      for (std::uint32_t j = 0; j < 254; ++j)
        hosts[j] = j + 1;
      rng.shuffle(hosts);
      const auto members = static_cast<std::size_t>(rng.between(h.members.lo, h.members.hi));
      for (std::size_t m = 0; m < members; ++m) {
        Actor a;
        a.ip = Ipv4{net + hosts[m]};
        a.kind = ActorKind::neighborhood_member;
        a.group = config.actors.size() + hi;
        a.cats = category_mask(h.categories);
        a.p = rng.uniform(h.p.lo, h.p.hi);
        a.alerts = h.alerts_per_day;
        a.volume = h.volume;
        a.detectors = pick_detectors(rng, config.detector_pool, h.detectors);
        a.end = n_days;
        a.hood = hoods.size();
        actors.push_back(std::move(a));
      }
      hoods.push_back({false, h.p_stay, h.p_wake});
    }
  }

  std::vector<Ipv4> noise_ips;
  {
    std::unordered_set<std::uint32_t> used;
    while (noise_ips.size() < config.noise.pool) {
      auto host = static_cast<std::uint32_t>(rng.below(1u << 24));
      if (used.insert(host).second)
        noise_ips.push_back(Ipv4{kNoiseBase + host});
    }
  }
  std::vector<int> noise_first(noise_ips.size(), -1);
  std::array<double, kCategoryCount> noise_truth{};
  for (auto c : config.noise.categories)
    noise_truth[index_of(c)] =
        config.noise.daily_prob / static_cast<double>(config.noise.categories.size());
  const std::vector<std::uint32_t> noise_detectors{0};

  Simulation sim;
  sim.config = config;
  for (auto& a : actors)
    a.truth.assign(static_cast<std::size_t>(n_days), {0.0, 0.0});

  for (int d = 0; d < n_days; ++d) {
    const Timestamp day_start = config.start + d * kDay;

    // Probability each neighborhood is active today, then today's state.
    std::vector<double> hood_on(hoods.size());
    for (std::size_t h = 0; h < hoods.size(); ++h) {
      auto& hd = hoods[h];
      const double stationary =
          hd.p_wake + (1.0 - hd.p_stay) > 0 ? hd.p_wake / (hd.p_wake + 1.0 - hd.p_stay) : 0.0;
      hood_on[h] = d == 0 ? stationary : (hd.active ? hd.p_stay : hd.p_wake);
      hd.active = rng.bernoulli(hood_on[h]);
    }

    for (auto& a : actors) {
      auto& t = a.truth[static_cast<std::size_t>(d)];
      bool attacked = false;
      std::array<bool, kCategoryCount> fire{};
      const bool alive = d >= a.start && d < a.end;
      switch (a.kind) {
      case ActorKind::persistent:
      case ActorKind::churning:
        for (std::size_t c = 0; c < kCategoryCount; ++c)
          t[c] = a.cats[c] && alive ? a.p : 0.0;
        break;
      case ActorKind::periodic: {
        const bool on = (d - a.phase) % a.period == 0;
        for (std::size_t c = 0; c < kCategoryCount; ++c)
          t[c] = a.cats[c] && on ? a.p : 0.0;
        break;
      }
      case ActorKind::oneshot:
        for (std::size_t c = 0; c < kCategoryCount; ++c)
          t[c] = a.cats[c] && alive ? 1.0 : 0.0;
        break;
      case ActorKind::cross_category:
        t[index_of(Category::scan)] = a.p;
        t[index_of(Category::access)] = a.scanned_yesterday ? a.coupling : a.base_access;
        break;
      case ActorKind::neighborhood_member:
      case ActorKind::noise:
        break;
      }
      if (a.kind == ActorKind::neighborhood_member) {
        const bool active = hoods[a.hood].active;
        for (std::size_t c = 0; c < kCategoryCount; ++c) {
          t[c] = a.cats[c] ? a.p * hood_on[a.hood] : 0.0;
          fire[c] = a.cats[c] && active && rng.bernoulli(a.p);
        }
      } else {
        for (std::size_t c = 0; c < kCategoryCount; ++c)
          fire[c] = t[c] > 0 && rng.bernoulli(t[c]);
      }
      for (std::size_t c = 0; c < kCategoryCount; ++c)
        if (fire[c]) {
          emit(rng, sim.alerts, a, kCategories[c], day_start);
          attacked = true;
        }
      if (a.kind == ActorKind::cross_category)
        a.scanned_yesterday = fire[index_of(Category::scan)];
      if (attacked && a.first_day < 0)
        a.first_day = d;
    }

    if (config.noise.daily_prob > 0)
      for (std::size_t i = 0; i < noise_ips.size(); ++i) {
        if (!rng.bernoulli(config.noise.daily_prob))
          continue;
        Actor a;
        a.ip = noise_ips[i];
        a.detectors = noise_detectors;
        const auto cat = config.noise.categories[rng.below(config.noise.categories.size())];
        emit(rng, sim.alerts, a, cat, day_start);
        if (noise_first[i] < 0)
          noise_first[i] = d;
      }
  }

  std::sort(sim.alerts.begin(), sim.alerts.end(), [](const Alert& a, const Alert& b) {
    if (a.t != b.t)
      return a.t < b.t;
    if (a.source != b.source)
      return a.source < b.source;
    if (a.category != b.category)
      return a.category < b.category;
    if (a.volume != b.volume)
      return a.volume < b.volume;
    return a.detector < b.detector;
  });

  const auto& en = config.enrichment;
  for (const auto& a : actors) {
    sim.actors.push_back({a.ip, a.kind, a.group});
    if (a.first_day >= 0)
      for (int d = a.first_day; d < n_days; ++d)
        sim.truth.push_back({a.ip, d, a.truth[static_cast<std::size_t>(d)]});
    double bl_rate = en.blacklist_rate_actor;
    if (a.group < config.actors.size() && config.actors[a.group].blacklist_rate >= 0)
      bl_rate = config.actors[a.group].blacklist_rate;
    sim.enrichment.push_back(make_enrichment(rng, a.ip, bl_rate, en.dynamic_rate_actor, en.no_ptr_rate));
  }
  for (std::size_t i = 0; i < noise_ips.size(); ++i) {
    if (noise_first[i] < 0)
      continue;
    sim.actors.push_back({noise_ips[i], ActorKind::noise, config.actors.size() + config.neighborhoods.size()});
    for (int d = noise_first[i]; d < n_days; ++d)
      sim.truth.push_back({noise_ips[i], d, noise_truth});
    sim.enrichment.push_back(make_enrichment(rng, noise_ips[i], en.blacklist_rate_noise,
                                             en.dynamic_rate_noise, en.no_ptr_rate));
  }
  std::sort(sim.truth.begin(), sim.truth.end(), [](const TruthRow& a, const TruthRow& b) {
    return a.day != b.day ? a.day < b.day : a.ip < b.ip;
  });
  std::sort(sim.actors.begin(), sim.actors.end(),
            [](const ActorInfo& a, const ActorInfo& b) { return a.ip < b.ip; });
  std::sort(sim.enrichment.begin(), sim.enrichment.end(),
            [](const EnrichmentRecord& a, const EnrichmentRecord& b) { return a.ip < b.ip; });

  // One ASN per /16 in use; countries assigned round-robin.
  std::set<std::uint32_t> blocks;
  for (const auto& a : sim.actors)
    blocks.insert(a.ip.value() & 0xffff0000u);
  std::uint32_t asn = 64512;
  for (auto b : blocks) {
    sim.maps.push_back({Cidr{Ipv4{b}, 16}, asn, kCountries[(asn - 64512) % std::size(kCountries)]});
    ++asn;
  }

  for (int d = config.first_t0_day; d < n_days; ++d)
    sim.prediction_times.push_back(config.start + d * kDay);
  return sim;
}

ContextMaps Simulation::context_maps() const {
  ContextMaps m;
  for (const auto& e : maps) {
    m.ip_to_asn.insert(e.cidr, e.asn);
    m.ip_to_country.insert(e.cidr, e.country);
    m.asn_sizes[e.asn] += e.cidr.size();
    m.country_sizes[e.country] += e.cidr.size();
  }
  return m;
}

AlertStore Simulation::make_store() const {
  AlertStore store;
  store.ingest(alerts);
  store.attach_enrichment(enrichment);
  store.set_context_maps(context_maps());
  return store;
}

std::string render_enrichment(const EnrichmentRecord& rec) {
  nlohmann::ordered_json j;
  j["ip"] = rec.ip.to_string();
  if (rec.hostname)
    j["hostname"] = *rec.hostname;
  j["bl"] = nlohmann::ordered_json::array();
  for (bool b : rec.blacklists)
    j["bl"].push_back(b ? 1 : 0);
  j["dyn"] = rec.dynamic_list ? 1 : 0;
  if (rec.asn)
    j["asn"] = *rec.asn;
  if (rec.country)
    j["cc"] = *rec.country;
  return j.dump();
}

std::string truth_csv(const Simulation& sim) {
  std::string out = "# start=" + format_rfc3339(sim.config.start) +
                    " n_days=" + std::to_string(sim.config.n_days) + "\n";
  out += "ip,day_index,p_scan,p_access\n";
  for (const auto& r : sim.truth)
    out += r.ip.to_string() + ',' + std::to_string(r.day) + ',' + format_double(r.p[0]) + ',' +
           format_double(r.p[1]) + '\n';
  return out;
}

void write_simulation(const Simulation& sim, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "maps", ec);
  if (ec)
    fail(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::string alerts;
  for (const auto& a : sim.alerts)
    (alerts += render_alert(a)) += '\n';
  write_text_file(dir / "alerts.jsonl", alerts);
  write_text_file(dir / "truth.csv", truth_csv(sim));

  std::string actors = "ip,kind,group\n";
  for (const auto& a : sim.actors)
    actors += a.ip.to_string() + ',' + std::string(to_string(a.kind)) + ',' + std::to_string(a.group) + '\n';
  write_text_file(dir / "actors.csv", actors);

  std::string enrichment;
  for (const auto& e : sim.enrichment)
    (enrichment += render_enrichment(e)) += '\n';
  write_text_file(dir / "enrichment.jsonl", enrichment);

  std::string t0s;
  for (auto t : sim.prediction_times)
    (t0s += format_rfc3339(t)) += '\n';
  write_text_file(dir / "t0.txt", t0s);

  std::string asn_map = "cidr,asn\n", cc_map = "cidr,cc\n";
  for (const auto& e : sim.maps) {
    asn_map += e.cidr.to_string() + ',' + std::to_string(e.asn) + '\n';
    cc_map += e.cidr.to_string() + ',' + e.country + '\n';
  }
  auto ctx = sim.context_maps();
  std::string asn_sizes = "asn,count\n", cc_sizes = "cc,count\n";
  for (const auto& [a, n] : ctx.asn_sizes)
    asn_sizes += std::to_string(a) + ',' + std::to_string(n) + '\n';
  for (const auto& [c, n] : ctx.country_sizes)
    cc_sizes += c + ',' + std::to_string(n) + '\n';
  write_text_file(dir / "maps" / "asn_map.csv", asn_map);
  write_text_file(dir / "maps" / "cc_map.csv", cc_map);
  write_text_file(dir / "maps" / "asn_sizes.csv", asn_sizes);
  write_text_file(dir / "maps" / "cc_sizes.csv", cc_sizes);
}

GroundTruth::GroundTruth(Timestamp start, int n_days, std::vector<TruthRow> rows)
    : start_(start), n_days_(n_days), rows_(std::move(rows)),
      by_day_(static_cast<std::size_t>(std::max(n_days, 0))) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (r.day < 0 || r.day >= n_days_)
      fail(Errc::OutOfRange, "truth row day outside the scenario");
    by_day_[static_cast<std::size_t>(r.day)][r.ip] = i;
  }
}

GroundTruth GroundTruth::from(const Simulation& sim) {
  return GroundTruth(sim.config.start, sim.config.n_days, sim.truth);
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    fail(Errc::IoError, "cannot open " + path.string());
  std::string line;
  std::optional<Timestamp> start;
  int n_days = -1;
  std::vector<TruthRow> rows;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& what) {
    fail(Errc::MalformedRecord, path.filename().string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (line.front() == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("start=", 0) == 0)
          start = parse_rfc3339(tok.substr(6));
        else if (tok.rfind("n_days=", 0) == 0 && !parse_number(std::string_view(tok).substr(7), n_days))
          bad("bad n_days");
      }
      continue;
    }
    if (line.rfind("ip,", 0) == 0)
      continue;
    auto f = split_csv_line(line);
    if (f.size() != 4)
      bad("expected ip,day_index,p_scan,p_access");
    TruthRow r;
    auto ip = Ipv4::parse(f[0]);
    if (!ip || !parse_number(f[1], r.day) || !parse_number(f[2], r.p[0]) || !parse_number(f[3], r.p[1]))
      bad("malformed row");
    r.ip = *ip;
    rows.push_back(r);
  }
  if (!start || n_days < 1)
    fail(Errc::MalformedRecord, path.string() + ": missing '# start=... n_days=...' header");
  return GroundTruth(*start, n_days, std::move(rows));
}

int GroundTruth::day_of(Timestamp t0) const {
  const auto offset = (t0 - start_).count();
  const auto day_len = kDay.count();
  if (offset < 0 || offset % day_len != 0 || offset / day_len >= n_days_)
    fail(Errc::OutOfRange, "t0 " + format_rfc3339(t0) + " is not a day boundary of the scenario");
  return static_cast<int>(offset / day_len);
}

double GroundTruth::probability(Ipv4 ip, int day, Category category) const {
  if (day < 0 || day >= n_days_)
    fail(Errc::OutOfRange, "day outside the scenario");
  const auto& m = by_day_[static_cast<std::size_t>(day)];
  auto it = m.find(ip);
  return it == m.end() ? 0.0 : rows_[it->second].p[index_of(category)];
}

std::vector<ScoredIp> GroundTruth::oracle_scores(Timestamp t0, Category category) const {
  const auto& m = by_day_[static_cast<std::size_t>(day_of(t0))];
  std::vector<ScoredIp> out;
  out.reserve(m.size());
  for (const auto& [ip, idx] : m)
    out.push_back({ip, rows_[idx].p[index_of(category)]});
  std::sort(out.begin(), out.end(), [](const ScoredIp& a, const ScoredIp& b) { return a.ip < b.ip; });
  return out;
}

} // namespace fmp
