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

#include "fmp/rng.hpp"
#include "fmp/store.hpp"

#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

using namespace fmp;
using fmp::test::alert;
using fmp::test::at;
using fmp::test::error_of;
using fmp::test::ip;

namespace {

const Timestamp kDay0 = at("2020-01-01T00:00:00Z");

Timestamp day(int d) { return kDay0 + d * kDay; }

std::vector<Alert> random_alerts(Rng& rng, std::size_t n) {
  std::vector<Alert> out;
  for (std::size_t i = 0; i < n; ++i) {
    Alert a;
    a.t = kDay0 + Seconds{static_cast<std::int64_t>(rng.below(20 * 86400))};
    // A handful of /24s so prefixes are shared.
    a.source = Ipv4(0x0A000000u | static_cast<std::uint32_t>(rng.below(4) << 8) |
                    static_cast<std::uint32_t>(rng.below(6)));
    a.category = rng.bernoulli(0.5) ? Category::scan : Category::access;
    a.volume = rng.below(50);
    a.detector = "det" + std::to_string(rng.below(3));
    out.push_back(a);
  }
  return out;
}

bool same_alerts(const std::vector<StoredAlert>& a, const AlertStore& sa,
                 const std::vector<StoredAlert>& b, const AlertStore& sb) {
  if (a.size() != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (sa.to_alert(a[i]) != sb.to_alert(b[i]))
      return false;
  return true;
}

} // namespace

TEST_CASE("ingest counts per category and deduplicates") {
  AlertStore s;
  std::vector<Alert> batch = {alert(day(1), "192.0.2.7"), alert(day(2), "192.0.2.7"),
                              alert(day(1), "192.0.2.8")};
  auto sum = s.ingest(batch);
  CHECK(sum.scan() == 3);
  CHECK(sum.access() == 0);
  CHECK(s.entity_count() == 2);

  auto again = s.ingest(std::vector<Alert>{alert(day(1), "192.0.2.7")});
  CHECK(again.scan() == 0);
  CHECK(again.duplicates == 1);
  CHECK(s.alert_count() == 3);
}

TEST_CASE("query_entity filters by half-open interval") {
  AlertStore s;
  s.ingest(std::vector<Alert>{alert(day(9), "192.0.2.7"), alert(day(1), "192.0.2.7"),
                              alert(day(3), "192.0.2.7")});
  auto got = s.query_entity(ip("192.0.2.7"), {day(0), day(7)});
  REQUIRE(got.size() == 2);
  CHECK(got[0].t == day(1));
  CHECK(got[1].t == day(3));
  CHECK(s.query_entity(ip("192.0.2.99"), {day(0), day(30)}).empty());
  CHECK(s.query_entity(ip("192.0.2.7"), {day(1), day(1)}).empty());
  // end is exclusive, begin inclusive
  CHECK(s.query_entity(ip("192.0.2.7"), {day(1), day(3)}).size() == 1);
}

TEST_CASE("query_prefix groups by /24") {
  AlertStore s;
  s.ingest(std::vector<Alert>{alert(day(1), "192.0.2.7"), alert(day(1), "192.0.2.200"),
                              alert(day(1), "192.0.3.7")});
  auto got = s.query_prefix(Prefix24(ip("192.0.2.1")), {day(0), day(2)});
  REQUIRE(got.size() == 2);
  CHECK(got[0].ip == ip("192.0.2.7"));
  CHECK(got[1].ip == ip("192.0.2.200"));
}

TEST_CASE("hostname tag rules") {
  const Ipv4 a = ip("192.0.2.7");
  CHECK(derive_hostname_tags(std::string("static-192-0-2-7.isp.example"), a) ==
        HostnameTags{true, false, true, false});
  CHECK(derive_hostname_tags(std::string("mail.example.org"), a) == HostnameTags{});
  CHECK(derive_hostname_tags(std::nullopt, a) == HostnameTags{false, false, false, true});
  CHECK(derive_hostname_tags(std::nullopt, a, false) == HostnameTags{});
  CHECK(derive_hostname_tags(std::string("7.2.0.192.DSL.example"), a) ==
        HostnameTags{false, true, true, false});
  CHECK(derive_hostname_tags(std::string("POOL-x.example"), a).is_dynamic);
  CHECK(derive_hostname_tags(std::string("STATIC.example"), a).is_static);
  // Octets must be delimited: 1192-0-2-7 does not encode 192.0.2.7.
  CHECK_FALSE(derive_hostname_tags(std::string("h1192-0-2-7.example"), a).ip_in_hostname);
  CHECK_FALSE(derive_hostname_tags(std::string("192-0-2-70.example"), a).ip_in_hostname);
}

TEST_CASE("attach_enrichment applies tags, last writer wins") {
  AlertStore s;
  s.ingest(std::vector<Alert>{alert(day(1), "192.0.2.7")});
  std::istringstream in(
      R"({"ip":"192.0.2.7","hostname":"static-192-0-2-7.isp.example","bl":[1,0,0,0,0],"dyn":0,"asn":64500,"cc":"CZ"})"
      "\n"
      R"({"ip":"198.51.100.1","bl":[0,0,0,0,0],"dyn":1})"
      "\n"
      "not json\n");
  auto sum = s.attach_enrichment(in);
  CHECK(sum.applied == 2);
  CHECK(sum.created == 1);
  CHECK(sum.rejected == 1);

  auto e = s.enrichment(ip("192.0.2.7"));
  CHECK(e.host == HostnameTags{true, false, true, false});
  CHECK(e.blacklists[0]);
  CHECK(e.asn == 64500u);
  CHECK(e.country == "CZ");

  auto fresh = s.enrichment(ip("198.51.100.1"));
  CHECK(fresh.dynamic_list);
  CHECK(fresh.host == HostnameTags{false, false, false, true});
  CHECK(s.entity(ip("198.51.100.1"))->alerts.empty());

  std::istringstream second(R"({"ip":"192.0.2.7","bl":[0,0,0,0,1],"dyn":0})");
  s.attach_enrichment(second);
  auto e2 = s.enrichment(ip("192.0.2.7"));
  CHECK_FALSE(e2.blacklists[0]);
  CHECK(e2.blacklists[4]);
  CHECK_FALSE(e2.hostname);
  CHECK(e2.host.no_ptr);
}

TEST_CASE("context maps load from CSV with header rows") {
  fmp::test::TempDir dir;
  fmp::test::spit(dir / "asn_map.csv", "cidr,asn\n10.0.0.0/8,100\n10.1.0.0/16,200\n");
  fmp::test::spit(dir / "cc_map.csv", "cidr,cc\n10.0.0.0/8,CZ\n");
  fmp::test::spit(dir / "asn_sizes.csv", "asn,count\n100,1000\n200,10\n");
  fmp::test::spit(dir / "cc_sizes.csv", "cc,count\nCZ,5000\n");
  AlertStore s;
  s.set_context_maps(ContextMaps::load_directory(dir.path()));
  CHECK(s.asn_of(ip("10.1.2.3")) == 200u);
  CHECK(s.asn_of(ip("10.2.2.3")) == 100u);
  CHECK_FALSE(s.asn_of(ip("11.0.0.1")));
  CHECK(s.country_of(ip("10.1.2.3")) == "CZ");
  CHECK(s.asn_size(200) == 10u);
  CHECK(s.country_size("CZ") == 5000u);

  fmp::test::spit(dir / "asn_sizes.csv", "asn,count\n100,0\n");
  CHECK(error_of([&] { ContextMaps::load_directory(dir.path()); }) == Errc::MalformedRecord);
}

TEST_CASE("snapshot round trip reproduces every query") {
  Rng rng(5);
  AlertStore s;
  s.ingest(random_alerts(rng, 2000));
  std::istringstream enr(R"({"ip":"10.0.0.1","hostname":"dyn-10-0-0-1.example","bl":[0,1,0,0,0],"dyn":1,"asn":7,"cc":"DE"})");
  s.attach_enrichment(enr);
  fmp::test::TempDir dir;
  s.save(dir / "s.snap");
  auto t = AlertStore::load(dir / "s.snap");

  CHECK(t.alert_count() == s.alert_count());
  CHECK(t.ips() == s.ips());
  const Interval all{day(-1), day(30)};
  for (int i = 0; i < 100; ++i) {
    Ipv4 probe(0x0A000000u | static_cast<std::uint32_t>(rng.below(4) << 8) |
               static_cast<std::uint32_t>(rng.below(8)));
    CHECK(same_alerts(s.query_entity(probe, all), s, t.query_entity(probe, all), t));
    CHECK(same_alerts(s.query_prefix(Prefix24(probe), all), s,
                      t.query_prefix(Prefix24(probe), all), t));
    CHECK(s.enrichment(probe) == t.enrichment(probe));
  }

  // Saving the loaded copy yields the same bytes.
  t.save(dir / "t.snap");
  CHECK(fmp::test::slurp(dir / "s.snap") == fmp::test::slurp(dir / "t.snap"));
}

TEST_CASE("empty store round trip and corruption") {
  fmp::test::TempDir dir;
  AlertStore empty;
  empty.save(dir / "e.snap");
  auto back = AlertStore::load(dir / "e.snap");
  CHECK(back.entity_count() == 0);
  CHECK(back.alert_count() == 0);

  AlertStore s;
  s.ingest(std::vector<Alert>{alert(day(1), "192.0.2.7")});
  s.save(dir / "s.snap");
  auto bytes = fmp::test::slurp(dir / "s.snap");

  fmp::test::spit(dir / "trunc.snap", bytes.substr(0, bytes.size() - 7));
  CHECK(error_of([&] { AlertStore::load(dir / "trunc.snap"); }) == Errc::CorruptSnapshot);

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  fmp::test::spit(dir / "flip.snap", flipped);
  CHECK(error_of([&] { AlertStore::load(dir / "flip.snap"); }) == Errc::CorruptSnapshot);

  CHECK(error_of([&] { AlertStore::load(dir / "missing.snap"); }) == Errc::IoError);
}

TEST_CASE("property: interval partition splits query results") {
  Rng rng(8);
  AlertStore s;
  s.ingest(random_alerts(rng, 1500));
  for (int trial = 0; trial < 200; ++trial) {
    const Ipv4 probe(0x0A000000u | static_cast<std::uint32_t>(rng.below(4) << 8) |
                     static_cast<std::uint32_t>(rng.below(6)));
    const Timestamp a = kDay0 + Seconds{static_cast<std::int64_t>(rng.below(10 * 86400))};
    const Timestamp b = a + Seconds{static_cast<std::int64_t>(rng.below(10 * 86400))};
    const Timestamp mid = a + (b - a) / 2;
    auto whole = s.query_entity(probe, {a, b});
    auto left = s.query_entity(probe, {a, mid});
    auto right = s.query_entity(probe, {mid, b});
    left.insert(left.end(), right.begin(), right.end());
    CHECK(same_alerts(whole, s, left, s));

    // prefix dominance
    auto pref = s.query_prefix(Prefix24(probe), {a, b});
    for (const auto& x : whole)
      CHECK(std::any_of(pref.begin(), pref.end(), [&](const StoredAlert& y) {
        return s.to_alert(x) == s.to_alert(y);
      }));
  }
}

TEST_CASE("property: ingest order never changes query results") {
  Rng rng(21);
  auto alerts = random_alerts(rng, 1200);
  // Include exact duplicates.
  for (int i = 0; i < 100; ++i)
    alerts.push_back(alerts[rng.below(alerts.size())]);
  AlertStore a;
  a.ingest(alerts);

  for (int trial = 0; trial < 3; ++trial) {
    auto shuffled = alerts;
    rng.shuffle(shuffled);
    AlertStore b;
    // Several batches, so the interned detector ids differ too.
    std::size_t cut = rng.below(shuffled.size());
    b.ingest(std::span(shuffled).first(cut));
    b.ingest(std::span(shuffled).subspan(cut));
    CHECK(b.alert_count() == a.alert_count());
    const Interval all{day(-1), day(30)};
    for (auto probe : a.ips()) {
      CHECK(same_alerts(a.query_entity(probe, all), a, b.query_entity(probe, all), b));
      CHECK(same_alerts(a.query_prefix(Prefix24(probe), all), a,
                        b.query_prefix(Prefix24(probe), all), b));
    }
  }
}

TEST_CASE("readers observe whole ingest batches only") {
  AlertStore s;
  constexpr std::size_t kBatch = 50;
  constexpr int kBatches = 40;
  std::atomic<bool> done{false};
  std::atomic<int> torn{0};
  std::atomic<long> reads{0};

  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r)
    readers.emplace_back([&] {
      while (!done.load()) {
        auto got = s.query_entity(ip("192.0.2.7"), {day(-1), day(400)});
        if (got.size() % kBatch != 0)
          ++torn;
        ++reads;
      }
    });
  for (int b = 0; b < kBatches; ++b) {
    std::vector<Alert> batch;
    for (std::size_t i = 0; i < kBatch; ++i)
      batch.push_back(alert(day(0) + Seconds{static_cast<std::int64_t>(b * kBatch + i)},
                            "192.0.2.7"));
    s.ingest(batch);
  }
  done = true;
  for (auto& t : readers)
    t.join();
  CHECK(torn.load() == 0);
  CHECK(s.alert_count() == kBatch * kBatches);
}
