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

#include "fmp/dataset.hpp"
#include "fmp/rng.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace fmp;
using doctest::Approx;
using fmp::test::alert;
using fmp::test::at;
using fmp::test::error_of;
using fmp::test::ip;

namespace {

const Timestamp kStart = at("2020-01-01T00:00:00Z");

Dataset synthetic(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed = 1) {
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    Sample s;
    s.ip = Ipv4(static_cast<std::uint32_t>(i + 1));
    s.t0 = kStart;
    for (auto& v : s.x)
      v = rng.uniform();
    s.y = i < n_pos ? 1 : 0;
    ds.samples.push_back(s);
  }
  rng.shuffle(ds.samples);
  ds.recount();
  ds.beta = class_ratio(ds.n_pos, ds.n_neg);
  return ds;
}

std::set<std::pair<std::uint32_t, std::int64_t>> keys(const Dataset& ds) {
  std::set<std::pair<std::uint32_t, std::int64_t>> out;
  for (const auto& s : ds.samples)
    out.insert({s.ip.value(), s.t0.time_since_epoch().count()});
  return out;
}

} // namespace

TEST_CASE("label uses the target category inside (t0, t0 + w_p]") {
  const Timestamp t0 = kStart + 7 * kDay;
  const WindowConfig w(t0);
  AlertStore s;
  s.ingest(std::vector<Alert>{alert(t0 + Seconds{3600}, "192.0.2.1"),
                              alert(t0 + Seconds{3600}, "192.0.2.2", Category::access),
                              alert(t0, "192.0.2.3"),
                              alert(t0 + kDay, "192.0.2.4"),
                              alert(t0 + kDay + Seconds{1}, "192.0.2.5")});
  CHECK(label(s, ip("192.0.2.1"), w, Category::scan) == 1);
  CHECK(label(s, ip("192.0.2.2"), w, Category::scan) == 0);
  CHECK(label(s, ip("192.0.2.2"), w, Category::access) == 1);
  CHECK(label(s, ip("192.0.2.3"), w, Category::scan) == 0);
  CHECK(label(s, ip("192.0.2.4"), w, Category::scan) == 1);
  CHECK(label(s, ip("192.0.2.5"), w, Category::scan) == 0);
}

TEST_CASE("build: a persistent scanner gives one positive per prediction time") {
  AlertStore s;
  std::vector<Alert> a;
  for (int d = 0; d < 10; ++d)
    a.push_back(alert(kStart + d * kDay + Seconds{600}, "192.0.2.1"));
  // Reported only inside a prediction window: never sampled.
  a.push_back(alert(kStart + 9 * kDay + Seconds{5}, "198.51.100.1"));
  s.ingest(a);
  std::vector<Timestamp> times = {kStart + 7 * kDay, kStart + 8 * kDay, kStart + 9 * kDay};
  auto ds = build(s, times, Category::scan);
  REQUIRE(ds.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ds.samples[i].ip == ip("192.0.2.1"));
    CHECK(ds.samples[i].t0 == times[i]);
    CHECK(ds.samples[i].y == 1);
  }
  CHECK(ds.n_pos == 3);
  CHECK(ds.n_neg == 0);
  CHECK(std::isinf(ds.beta));
  CHECK_FALSE(ds.subsampled);
  CHECK(ds.positive_fraction() == 1.0);

  CHECK(error_of([&] { build(s, times, Category::access); }) == Errc::EmptyDataset);
}

TEST_CASE("build is ordered by (t0, ip) and independent of the thread count") {
  Rng rng(3);
  AlertStore s;
  std::vector<Alert> a;
  for (int i = 0; i < 3000; ++i) {
    Alert x;
    x.t = kStart + Seconds{static_cast<std::int64_t>(rng.below(14 * 86400))};
    x.source = Ipv4(0x0A000000u | static_cast<std::uint32_t>(rng.below(400)));
    x.category = rng.bernoulli(0.7) ? Category::scan : Category::access;
    x.volume = rng.geometric(0.2);
    x.detector = "d" + std::to_string(rng.below(3));
    a.push_back(x);
  }
  s.ingest(a);
  std::vector<Timestamp> times = {kStart + 9 * kDay, kStart + 7 * kDay, kStart + 11 * kDay};
  BuildOptions one;
  one.threads = 1;
  BuildOptions many;
  many.threads = 4;
  auto d1 = build(s, times, Category::scan, one);
  auto d4 = build(s, times, Category::scan, many);
  REQUIRE(d1.size() == d4.size());
  for (std::size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1.samples[i].ip == d4.samples[i].ip);
    CHECK(d1.samples[i].x == d4.samples[i].x);
    CHECK(d1.samples[i].y == d4.samples[i].y);
    if (i > 0) {
      const auto& p = d1.samples[i - 1];
      const auto& q = d1.samples[i];
      CHECK((p.t0 < q.t0 || (p.t0 == q.t0 && p.ip < q.ip)));
    }
  }
  CHECK(d1.n_pos + d1.n_neg == d1.size());
  CHECK(d1.beta == Approx(static_cast<double>(d1.n_pos) / static_cast<double>(d1.n_neg)));

  // Every sample has a target alert in its history window; labels are a pure
  // function of the store.
  for (const auto& smp : d1.samples) {
    const WindowConfig w(smp.t0);
    CHECK(s.has_alert(smp.ip, Category::scan, {w.history_begin(), smp.t0}));
    CHECK(label(s, smp.ip, w, Category::scan) == smp.y);
  }
}

TEST_CASE("subsample_majority") {
  auto ds = synthetic(100, 900);
  auto sub = subsample_majority(ds, 1.0, 7);
  CHECK(sub.n_pos == 100);
  CHECK(sub.n_neg == 100);
  CHECK(sub.size() == 200);
  CHECK(sub.beta == Approx(100.0 / 900.0));
  CHECK(sub.subsampled);

  // All positives survive; order is preserved.
  std::size_t pos = 0;
  for (const auto& s : sub.samples)
    pos += s.y;
  CHECK(pos == 100);
  auto full = keys(ds);
  for (const auto& k : keys(sub))
    CHECK(full.count(k) == 1);

  auto again = subsample_majority(ds, 1.0, 7);
  CHECK(keys(again) == keys(sub));
  auto other = subsample_majority(ds, 1.0, 8);
  CHECK(keys(other) != keys(sub));

  auto all = subsample_majority(ds, 100.0, 7);
  CHECK(keys(all) == full);

  auto half = subsample_majority(ds, 0.5, 7);
  CHECK(half.n_neg == 50);

  CHECK(error_of([&] { subsample_majority(ds, 0.0); }) == Errc::InvalidRatio);
  CHECK(error_of([&] { subsample_majority(ds, -1.0); }) == Errc::InvalidRatio);
  CHECK(error_of([&] { subsample_majority(sub, 1.0); }) == Errc::AlreadySubsampled);
}

TEST_CASE("split partitions and keeps the pool distribution") {
  auto ds = synthetic(1500, 8500, 2);
  auto [train, test] = split(ds, 0.1, 11);
  CHECK(test.size() == 1000);
  CHECK(train.size() == 9000);
  auto a = keys(train), b = keys(test);
  for (const auto& k : b)
    CHECK(a.count(k) == 0);
  a.insert(b.begin(), b.end());
  CHECK(a == keys(ds));

  // 3 sigma of the hypergeometric share
  const double p = 0.15;
  const double sigma = std::sqrt(p * (1 - p) / 1000.0);
  CHECK(std::abs(test.positive_fraction() - p) < 3 * sigma);
  CHECK(train.beta == Approx(static_cast<double>(train.n_pos) / static_cast<double>(train.n_neg)));
  CHECK(test.beta == Approx(static_cast<double>(test.n_pos) / static_cast<double>(test.n_neg)));

  auto [train2, test2] = split(ds, 0.1, 11);
  CHECK(keys(test2) == keys(test));

  CHECK(error_of([&] { split(ds, 0.0); }) == Errc::InvalidFraction);
  CHECK(error_of([&] { split(ds, 1.0); }) == Errc::InvalidFraction);
  auto sub = subsample_majority(ds);
  CHECK(error_of([&] { split(sub, 0.5); }) == Errc::AlreadySubsampled);
}

TEST_CASE("zero_features clears only the given columns") {
  auto ds = synthetic(5, 5);
  auto idx = feature_indices(FeatureGroup::prefix, Category::scan);
  auto before = ds;
  zero_features(ds, idx);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const bool zeroed = std::find(idx.begin(), idx.end(), j) != idx.end();
      CHECK(ds.samples[i].x[j] == (zeroed ? 0.0 : before.samples[i].x[j]));
    }
}

TEST_CASE("dataset files round trip exactly") {
  auto ds = synthetic(30, 70, 9);
  ds.target = Category::access;
  ds.seed = 1234;
  ds.alpha = 0.3;
  ds.history_days = 5;
  ds.samples[0].x[3] = 1.0 / 3.0;
  ds.samples[1].x[4] = 1e-300;
  auto sub = subsample_majority(ds, 1.0, 5);
  fmp::test::TempDir dir;
  write_dataset(sub, dir / "ds");
  auto back = read_dataset(dir / "ds");
  CHECK(back.target == Category::access);
  CHECK(back.beta == sub.beta);
  CHECK(back.subsampled);
  CHECK(back.seed == 5); // subsampling records its own seed
  CHECK(back.alpha == 0.3);
  CHECK(back.history_days == 5);
  CHECK(back.n_pos == sub.n_pos);
  REQUIRE(back.size() == sub.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.samples[i].ip == sub.samples[i].ip);
    CHECK(back.samples[i].t0 == sub.samples[i].t0);
    CHECK(back.samples[i].x == sub.samples[i].x);
    CHECK(back.samples[i].y == sub.samples[i].y);
  }
  write_dataset(back, dir / "again");
  CHECK(fmp::test::slurp(dir / "ds" / "features.csv") ==
        fmp::test::slurp(dir / "again" / "features.csv"));
  CHECK(fmp::test::slurp(dir / "ds" / "dataset.json") ==
        fmp::test::slurp(dir / "again" / "dataset.json"));

  // header names every column
  auto csv = fmp::test::slurp(dir / "ds" / "features.csv");
  auto header = csv.substr(0, csv.find('\n'));
  CHECK(header.rfind("ip,t0,ip_scan_alerts_1d,", 0) == 0);
  CHECK(header.size() > 6);
  CHECK(header.substr(header.size() - 6) == ",label");

  fmp::test::spit(dir / "ds" / "features.csv", "ip,t0,bogus\n");
  CHECK(error_of([&] { read_dataset(dir / "ds"); }) == Errc::SchemaMismatch);
}

TEST_CASE("format_double round trips") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.between(-60, 60)));
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0) == "0");
}
