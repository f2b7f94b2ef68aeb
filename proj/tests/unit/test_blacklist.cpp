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
#include "fmp/rng.hpp"

#include "support.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace fmp;
using doctest::Approx;
using fmp::test::alert;
using fmp::test::at;
using fmp::test::error_of;
using fmp::test::ip;

namespace {

const Timestamp kT0 = at("2020-01-08T00:00:00Z");

std::vector<Ipv4> ips_of(const Blacklist& bl) {
  std::vector<Ipv4> out;
  for (const auto& e : bl.entries)
    out.push_back(e.ip);
  return out;
}

std::vector<ScoredIp> random_scores(Rng& rng, std::size_t n) {
  std::set<std::uint32_t> used;
  std::vector<ScoredIp> out;
  while (out.size() < n) {
    auto v = static_cast<std::uint32_t>(rng.below(1000));
    if (!used.insert(v).second)
      continue;
    out.push_back({Ipv4(v), static_cast<double>(rng.below(11)) / 10.0});
  }
  return out;
}

} // namespace

TEST_CASE("top-N ordering and tie-break") {
  const Ipv4 a = ip("10.0.0.9"), b = ip("10.0.0.5"), c = ip("10.0.0.1");
  std::vector<ScoredIp> s = {{a, 0.9}, {b, 0.5}, {c, 0.9}};
  auto bl = fmp_topn(s, 2, kT0, Category::scan);
  CHECK(ips_of(bl) == std::vector<Ipv4>{c, a});
  CHECK(bl.name == "fmp_top2");
  CHECK(bl.policy.kind == PolicyKind::fmp_topn);
  CHECK(bl.generated_at == kT0);
  CHECK(fmp_topn(s, 10, kT0, Category::scan).size() == 3);

  CHECK(error_of([&] { fmp_topn(s, 0, kT0, Category::scan); }) == Errc::ConfigError);
  std::vector<ScoredIp> bad = {{a, 1.2}};
  CHECK(error_of([&] { fmp_topn(bad, 1, kT0, Category::scan); }) == Errc::DomainError);
  std::vector<ScoredIp> dup = {{a, 0.2}, {a, 0.3}};
  CHECK(error_of([&] { fmp_topn(dup, 1, kT0, Category::scan); }) == Errc::DomainError);
}

TEST_CASE("threshold lists") {
  std::vector<ScoredIp> s = {{ip("1.0.0.1"), 0.99}, {ip("1.0.0.2"), 0.5}, {ip("1.0.0.3"), 0.0}};
  CHECK(fmp_threshold(s, 0.0, kT0, Category::scan).size() == 3);
  CHECK(fmp_threshold(s, 0.5, kT0, Category::scan).size() == 2);
  CHECK(fmp_threshold(s, 0.99, kT0, Category::scan).size() == 1);
  CHECK(fmp_threshold(s, 1.0, kT0, Category::scan).size() == 0);
  CHECK(error_of([&] { fmp_threshold(s, 1.5, kT0, Category::scan); }) == Errc::ConfigError);
  CHECK(error_of([&] { fmp_threshold(s, -0.1, kT0, Category::scan); }) == Errc::ConfigError);
}

TEST_CASE("property: list nesting in N and T") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    auto s = random_scores(rng, 1 + rng.below(60));
    for (std::size_t n = 1; n <= s.size(); ++n) {
      auto small = ips_of(fmp_topn(s, n, kT0, Category::scan));
      auto big = ips_of(fmp_topn(s, n + 1, kT0, Category::scan));
      CHECK(std::equal(small.begin(), small.end(), big.begin()));
    }
    std::size_t prev = s.size() + 1;
    for (int k = 0; k <= 10; ++k) {
      auto bl = fmp_threshold(s, k / 10.0, kT0, Category::scan);
      CHECK(bl.size() <= prev);
      prev = bl.size();
      for (const auto& e : bl.entries)
        CHECK(e.score >= k / 10.0);
      const auto listed = ips_of(bl);
      std::set<Ipv4> uniq(listed.begin(), listed.end());
      CHECK(uniq.size() == bl.size());
    }
  }
}

TEST_CASE("property: top-N from true probabilities maximises expected hits") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 2 + rng.below(14); // at most 15
    std::vector<ScoredIp> s;
    for (std::size_t i = 0; i < m; ++i)
      s.push_back({Ipv4(static_cast<std::uint32_t>(i)), rng.uniform()});
    const std::size_t n = 1 + rng.below(m);
    double listed = 0;
    for (const auto& e : fmp_topn(s, n, kT0, Category::scan).entries)
      listed += e.score;
    double best = 0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != n)
        continue;
      double sum = 0;
      for (std::size_t i = 0; i < m; ++i)
        if (mask >> i & 1u)
          sum += s[i].score;
      best = std::max(best, sum);
    }
    CHECK(listed == Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("gwol ranks by count, then volume, then address") {
  AlertStore s;
  std::vector<Alert> a;
  for (int i = 0; i < 5; ++i)
    a.push_back(alert(kT0 - Seconds{100 + i}, "10.0.0.5"));
  for (int i = 0; i < 3; ++i)
    a.push_back(alert(kT0 - Seconds{100 + i}, "10.0.0.3", Category::scan, 1));
  for (int i = 0; i < 3; ++i)
    a.push_back(alert(kT0 - Seconds{100 + i}, "10.0.0.4", Category::scan, 9));
  for (int i = 0; i < 3; ++i)
    a.push_back(alert(kT0 - Seconds{100 + i}, "10.0.0.2", Category::scan, 1));
  // outside a one-day window, inside seven days
  for (int i = 0; i < 10; ++i)
    a.push_back(alert(kT0 - 3 * kDay + Seconds{i}, "10.0.0.7"));
  // other category and at t0 are ignored
  for (int i = 0; i < 10; ++i)
    a.push_back(alert(kT0 - Seconds{5 + i}, "10.0.0.8", Category::access));
  a.push_back(alert(kT0, "10.0.0.9"));
  s.ingest(a);

  auto one = gwol(s, kT0, 1, 1, Category::scan);
  CHECK(ips_of(one) == std::vector<Ipv4>{ip("10.0.0.5")});
  CHECK(one.name == "gwol1");
  auto all = gwol(s, kT0, 1, 10, Category::scan);
  CHECK(ips_of(all) ==
        std::vector<Ipv4>{ip("10.0.0.5"), ip("10.0.0.4"), ip("10.0.0.2"), ip("10.0.0.3")});
  CHECK(all.entries[0].score == 5);
  auto week = gwol(s, kT0, 7, 1, Category::scan);
  CHECK(ips_of(week) == std::vector<Ipv4>{ip("10.0.0.7")});
  CHECK(week.name == "gwol7");
  CHECK(error_of([&] { gwol(s, kT0, 0, 1, Category::scan); }) == Errc::ConfigError);
  CHECK(error_of([&] { gwol(s, kT0, 1, 0, Category::scan); }) == Errc::ConfigError);
}

TEST_CASE("evaluate_blacklist") {
  AlertStore s;
  s.ingest(std::vector<Alert>{
      alert(kT0 + Seconds{10}, "10.0.0.1"),       // listed, attacks
      alert(kT0 + kDay, "10.0.0.2"),              // listed, attacks at the end of the day
      alert(kT0 + kDay + Seconds{1}, "10.0.0.3"), // listed, too late
      alert(kT0, "10.0.0.4"),                     // listed, at t0: not in the day
      alert(kT0 + Seconds{50}, "10.0.0.5"),       // not listed; seen before
      alert(kT0 - 2 * kDay, "10.0.0.5"),
      alert(kT0 + Seconds{60}, "10.0.0.6"),       // not listed; new
      alert(kT0 + Seconds{70}, "10.0.0.1", Category::access),
  });
  std::vector<ScoredIp> sc = {{ip("10.0.0.1"), 0.9},
                              {ip("10.0.0.2"), 0.8},
                              {ip("10.0.0.3"), 0.7},
                              {ip("10.0.0.4"), 0.6}};
  auto bl = fmp_topn(sc, 4, kT0, Category::scan);
  auto r = evaluate_blacklist(bl, s, Category::scan);
  CHECK(r.list_size == 4);
  CHECK(r.hit_count == 2);
  CHECK(r.hit_rate == 0.5);
  CHECK(r.attackers_total == 4);
  CHECK(r.attackers_blocked_fraction == 0.5);
  CHECK(r.new_attacker_fraction == 0.75);
  CHECK(r.hit_count <= std::min(r.list_size, r.attackers_total));

  Blacklist empty = bl;
  empty.entries.clear();
  auto e = evaluate_blacklist(empty, s, Category::scan);
  CHECK(e.hit_count == 0);
  CHECK(e.hit_rate == 0);

  AlertStore quiet;
  auto q = evaluate_blacklist(bl, quiet, Category::scan);
  CHECK(q.attackers_total == 0);
  CHECK(q.attackers_blocked_fraction == 0);
  CHECK(q.new_attacker_fraction == 0);
}

TEST_CASE("third-party lists") {
  std::istringstream in("# header\n10.0.0.1\n10.0.1.0/30\n\n10.0.0.1\n10.0.2.0/24 # comment\n");
  auto bl = read_third_party(in, "tp", kT0, Category::scan);
  CHECK(bl.size() == 1 + 4 + 256);
  CHECK(bl.entries[0].ip == ip("10.0.0.1"));
  CHECK(bl.entries[1].ip == ip("10.0.1.0"));
  CHECK(bl.policy.kind == PolicyKind::third_party);

  std::istringstream wide("10.0.0.0/16\n");
  CHECK(error_of([&] { read_third_party(wide, "x", kT0, Category::scan); }) ==
        Errc::InvalidField);
  std::istringstream junk("hello\n");
  CHECK(error_of([&] { read_third_party(junk, "x", kT0, Category::scan); }) ==
        Errc::InvalidField);
}

TEST_CASE("union of lists") {
  std::vector<ScoredIp> a = {{ip("1.0.0.1"), 0.9}, {ip("1.0.0.2"), 0.8}, {ip("1.0.0.3"), 0.7}};
  std::vector<ScoredIp> b = {{ip("2.0.0.1"), 0.9}, {ip("2.0.0.2"), 0.8},
                             {ip("2.0.0.3"), 0.7}, {ip("2.0.0.4"), 0.6}};
  auto la = fmp_topn(a, 3, kT0, Category::scan);
  auto lb = fmp_topn(b, 4, kT0, Category::scan);
  lb.name = "other";
  std::vector<Blacklist> both = {la, lb};
  auto u = union_blacklists(both);
  CHECK(u.size() == 7);
  CHECK(u.name == "fmp_top3+other");
  // rank 1 of each list first, ties by address
  CHECK(u.entries[0].ip == ip("1.0.0.1"));
  CHECK(u.entries[1].ip == ip("2.0.0.1"));

  auto renamed = la;
  renamed.name = "copy";
  for (auto& e : renamed.entries)
    e.sources = {"copy"};
  std::vector<Blacklist> same = {la, renamed};
  auto us = union_blacklists(same);
  CHECK(us.size() == 3);
  CHECK(us.entries[0].sources.size() == 2);

  auto access = la;
  access.category = Category::access;
  std::vector<Blacklist> mixed = {la, access};
  CHECK(error_of([&] { union_blacklists(mixed); }) == Errc::CategoryMismatch);
  CHECK(error_of([] { union_blacklists(std::vector<Blacklist>{}); }) == Errc::Empty);

  // union hits dominate every part
  AlertStore s;
  s.ingest(std::vector<Alert>{alert(kT0 + Seconds{1}, "1.0.0.1"), alert(kT0 + Seconds{1}, "2.0.0.2"),
                              alert(kT0 + Seconds{1}, "2.0.0.4")});
  auto hu = evaluate_blacklist(u, s, Category::scan).hit_count;
  CHECK(hu >= evaluate_blacklist(la, s, Category::scan).hit_count);
  CHECK(hu >= evaluate_blacklist(lb, s, Category::scan).hit_count);
  CHECK(hu == 3);
}

TEST_CASE("blacklist files round trip") {
  std::vector<ScoredIp> s = {{ip("1.0.0.1"), 0.25}, {ip("1.0.0.2"), 1.0 / 3.0}};
  auto bl = fmp_threshold(s, 0.2, kT0, Category::access);
  fmp::test::TempDir dir;
  write_blacklist(bl, dir / "bl.txt");
  CHECK(fmp::test::slurp(dir / "bl.txt") == "1.0.0.2\n1.0.0.1\n");
  auto back = read_blacklist(dir / "bl.txt");
  CHECK(back.name == bl.name);
  CHECK(back.generated_at == kT0);
  CHECK(back.category == Category::access);
  CHECK(back.policy.kind == PolicyKind::fmp_threshold);
  CHECK(back.policy.threshold == 0.2);
  REQUIRE(back.size() == 2);
  CHECK(back.entries[0].score == 1.0 / 3.0);

  // without a sidecar the file reads as a plain list
  fmp::test::spit(dir / "plain.txt", "1.0.0.9\n");
  auto plain = read_blacklist(dir / "plain.txt");
  CHECK(plain.size() == 1);
  CHECK(plain.policy.kind == PolicyKind::third_party);
}
