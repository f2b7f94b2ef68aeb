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


// Acceptance checks for the scoring engine. Prints one PASS/FAIL line per
// criterion and exits non-zero if any fails. Pass criterion numbers as
// arguments to run a subset.

#include "fmp/blacklist.hpp"
#include "fmp/dataset.hpp"
#include "fmp/eval.hpp"
#include "fmp/features.hpp"
#include "fmp/model.hpp"
#include "fmp/rng.hpp"
#include "fmp/simgen.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fmp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScenarioConfig scenario(const char* name) {
  return ScenarioConfig::load(fs::path(FMP_SCENARIO_DIR) / name);
}

struct World {
  Simulation sim;
  AlertStore store;
  GroundTruth truth;
};

World world(const char* name) {
  World w;
  w.sim = generate(scenario(name));
  w.store = w.sim.make_store();
  w.truth = GroundTruth::from(w.sim);
  return w;
}

std::vector<std::uint8_t> labels(const Dataset& ds) {
  std::vector<std::uint8_t> y;
  y.reserve(ds.size());
  for (const auto& s : ds.samples)
    y.push_back(s.y);
  return y;
}

std::vector<double> scores(const TrainedModel& m, const Dataset& ds, bool raw = false) {
  std::vector<double> p;
  p.reserve(ds.size());
  for (const auto& s : ds.samples)
    p.push_back(raw ? predict_raw(m, s.x) : fmp_score(m, s.x));
  return p;
}

std::vector<double> oracle(const GroundTruth& truth, const Dataset& ds) {
  std::vector<double> p;
  p.reserve(ds.size());
  for (const auto& s : ds.samples)
    p.push_back(truth.probability(s.ip, truth.day_of(s.t0), ds.target));
  return p;
}

// Small scenario shared by the quick criteria.
struct Small {
  World w;
  Dataset train, test;
};

const Small& small() {
  static const Small s = [] {
    Small out{world("small.json"), {}, {}};
    auto ds = build(out.w.store, out.w.sim.prediction_times, Category::scan);
    std::tie(out.train, out.test) = split(ds, 0.3, 1);
    return out;
  }();
  return s;
}

// ---------------------------------------------------------------------------

Outcome recalibration_identity() {
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double y = i / 9999.0;
    worst = std::max(worst, std::abs(recalibrate(y, 1.0) - y));
  }
  bool ends = true;
  for (double beta : {0.01, 0.1, 1.0, 10.0})
    ends = ends && recalibrate(0.0, beta) == 0.0 && recalibrate(1.0, beta) == 1.0;
  return {worst <= 1e-12 && ends, fmt("max |r(y,1)-y| = %.3g, endpoints exact: %s", worst,
                                      ends ? "yes" : "no")};
}

Outcome recalibration_end_to_end() {
  auto w = world("recal.json");
  auto ds = build(w.store, w.sim.prediction_times, Category::scan);
  auto [train, test] = split(ds, 0.3, 1);
  auto sub = subsample_majority(train, 1.0, 2);
  auto model = train_logreg(sub, {}, 2);
  const auto y = labels(test);
  const double raw = calibration_curve(scores(model, test, true), y, 10, 500).max_gap;
  const double cal = calibration_curve(scores(model, test), y, 10, 500).max_gap;
  const bool ok = ds.size() >= 100000 && cal <= 0.05 && raw >= 0.10;
  return {ok, fmt("n = %zu, positive rate %.3f, beta %.4f, max gap recalibrated %.4f, raw %.4f",
                  ds.size(), ds.positive_fraction(), sub.beta, cal, raw)};
}

// The standard scenario is shared by the oracle and model-quality criteria.
struct Standard {
  World w;
  Dataset ds, train, test;
};

const Standard& standard() {
  static const Standard s = [] {
    Standard out{world("standard.json"), {}, {}, {}};
    out.ds = build(out.w.store, out.w.sim.prediction_times, Category::scan);
    std::tie(out.train, out.test) = split(out.ds, 0.3, 1);
    return out;
  }();
  return s;
}

Outcome oracle_brier() {
  const auto& s = standard();
  const auto p = oracle(s.w.truth, s.ds);
  const auto y = labels(s.ds);
  double mean = 0, var = 0;
  for (double q : p) {
    const double m = q * (1 - q);
    mean += m;
    var += m * ((1 - q) * (1 - q) * (1 - q) + q * q * q) - m * m;
  }
  const double n = static_cast<double>(p.size());
  mean /= n;
  const double sigma = std::sqrt(var) / n;
  const double b = brier(p, y);
  const double z = sigma > 0 ? std::abs(b - mean) / sigma : 0.0;
  return {p.size() >= 100000 && z <= 3.0,
          fmt("n = %zu, Brier %.5f, analytic %.5f, sigma %.2g, |z| = %.2f", p.size(), b, mean,
              sigma, z)};
}

Outcome model_quality() {
  const auto& s = standard();
  GbdtConfig cfg; // 200 trees of depth 7
  auto model = train_gbdt(s.train, cfg, 0);
  const auto y = labels(s.test);
  const auto p = scores(model, s.test);
  const double auc = roc(p, y).auc;
  const double bm = brier(p, y);
  const double bo = brier(oracle(s.w.truth, s.test), y);
  return {auc >= 0.85 && bm - bo <= 0.02,
          fmt("test n = %zu, AUC %.4f, Brier %.5f vs oracle %.5f (excess %.5f)", s.test.size(),
              auc, bm, bo, bm - bo)};
}

Outcome blacklist_optimality() {
  Rng rng(5);
  std::size_t checks = 0, failures = 0;
  for (int trial = 0; trial < 60; ++trial) {
    ScenarioConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
    cfg.start = fmp::test::at("2026-01-01T00:00:00Z");
    cfg.n_days = 6;
    cfg.first_t0_day = 1;
    ActorGroup persistent;
    persistent.count = 1 + rng.below(10);
    persistent.p = {0.0, 1.0};
    ActorGroup churning;
    churning.kind = ActorKind::churning;
    churning.count = rng.below(16 - persistent.count);
    churning.p = {0.0, 1.0};
    churning.lifetime_days = {1, 6};
    cfg.actors = {persistent, churning};
    const auto sim = generate(cfg);
    const auto truth = GroundTruth::from(sim);
    const Timestamp t0 = sim.prediction_times.back();
    const int day = truth.day_of(t0);
    const auto scored = truth.oracle_scores(t0, Category::scan);

    std::vector<double> p;
    for (const auto& a : sim.actors)
      p.push_back(truth.probability(a.ip, day, Category::scan));
    const std::size_t m = p.size();
    for (std::size_t n = 1; n <= scored.size(); ++n) {
      double listed = 0;
      for (const auto& e : fmp_topn(scored, n, t0, Category::scan).entries)
        listed += truth.probability(e.ip, day, Category::scan);
      double best = 0;
      for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n)
          continue;
        double sum = 0;
        for (std::size_t i = 0; i < m; ++i)
          if (mask >> i & 1u)
            sum += p[i];
        best = std::max(best, sum);
      }
      ++checks;
      failures += listed + 1e-12 < best;
    }
  }
  return {checks > 0 && failures == 0,
          fmt("%zu (population, N) cases enumerated, %zu suboptimal", checks, failures)};
}

Outcome fmp_beats_gwol() {
  auto w = world("gwol_mix.json");
  const auto& times = w.sim.prediction_times;
  const std::vector<Timestamp> train_t(times.begin(), times.end() - 6);
  const std::vector<Timestamp> eval_t(times.end() - 5, times.end());
  auto ds = build(w.store, train_t, Category::scan);
  auto model = train_gbdt(subsample_majority(ds, 1.0, 3), {}, 0);
  double fmp = 0, g1 = 0, g7 = 0;
  for (auto t0 : eval_t) {
    const std::vector<Timestamp> one{t0};
    auto candidates = build(w.store, one, Category::scan);
    std::vector<ScoredIp> sc;
    for (const auto& s : candidates.samples)
      sc.push_back({s.ip, fmp_score(model, s.x)});
    fmp += evaluate_blacklist(fmp_topn(sc, 100, t0, Category::scan), w.store, Category::scan)
               .hit_count;
    g1 += evaluate_blacklist(gwol(w.store, t0, 1, 100, Category::scan), w.store, Category::scan)
              .hit_count;
    g7 += evaluate_blacklist(gwol(w.store, t0, 7, 100, Category::scan), w.store, Category::scan)
              .hit_count;
  }
  fmp /= 5, g1 /= 5, g7 /= 5;
  return {fmp > g1 && fmp > g7,
          fmt("mean top-100 hits over 5 days: FMP %.1f, GWOL1 %.1f, GWOL7 %.1f", fmp, g1, g7)};
}

Outcome feature_schema() {
  bool ok = feature_names().size() == kFeatureCount;
  std::set<std::string> names(feature_names().begin(), feature_names().end());
  ok = ok && names.size() == kFeatureCount;
  for (auto target : {Category::scan, Category::access}) {
    std::vector<std::size_t> all;
    for (auto g : {FeatureGroup::same_category, FeatureGroup::other_category, FeatureGroup::prefix,
                   FeatureGroup::context_rates, FeatureGroup::tags}) {
      auto idx = feature_indices(g, target);
      all.insert(all.end(), idx.begin(), idx.end());
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i)
      ok = ok && all[i] == i;
    ok = ok && all.size() == kFeatureCount;
    ok = ok && feature_indices(FeatureGroup::same_category, target).front() ==
                   layout::ip_scope(target);
  }

  auto w = world("neighborhood.json");
  auto ds = build(w.store, w.sim.prediction_times, Category::scan);

  // Direct assembly agrees with the dataset and is finite, seen or not.
  Rng rng(7);
  std::size_t vectors = 0, bad = 0;
  for (int i = 0; i < 300; ++i) {
    const auto& s = ds.samples[rng.below(ds.size())];
    const WindowConfig window(s.t0);
    auto x = assemble_vector(w.store, s.ip, window);
    auto fresh = assemble_vector(w.store, Ipv4{static_cast<std::uint32_t>(rng.next())}, window);
    for (std::size_t k = 0; k < kFeatureCount; ++k)
      bad += !std::isfinite(x[k]) || !std::isfinite(fresh[k]) || x[k] != s.x[k];
    vectors += 2;
  }
  for (const auto& s : ds.samples)
    for (double v : s.x)
      bad += !std::isfinite(v);
  ok = ok && bad == 0;

  auto [train, test] = split(ds, 0.3, 1);
  const auto y = labels(test);
  GbdtConfig cfg;
  const double full = roc(scores(train_gbdt(train, cfg, 0), test), y).auc;
  const auto idx = feature_indices(FeatureGroup::prefix, Category::scan);
  zero_features(train, idx);
  zero_features(test, idx);
  const double ablated = roc(scores(train_gbdt(train, cfg, 0), test), y).auc;
  ok = ok && full - ablated >= 0.02;
  return {ok, fmt("layout ok, %zu + %zu vectors finite (%zu bad); AUC %.4f, prefix zeroed %.4f, "
                  "drop %.4f",
                  vectors, ds.size(), bad, full, ablated, full - ablated)};
}

Outcome metric_invariances() {
  const auto& s = small();
  const auto y = labels(s.test);
  Rng rng(8);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    auto sub = subsample_majority(s.train, 1.0, static_cast<std::uint64_t>(i));
    TrainedModel model;
    if (i % 2 == 0) {
      LogRegConfig cfg;
      cfg.epochs = 200;
      model = train_logreg(sub, cfg, static_cast<std::uint64_t>(i));
    } else {
      GbdtConfig cfg;
      cfg.n_trees = 20;
      cfg.max_depth = 3;
      cfg.min_samples_leaf = 5;
      model = train_gbdt(sub, cfg, static_cast<std::uint64_t>(i));
    }
    const double beta = std::pow(10.0, rng.uniform(-2.0, 1.0));
    auto raw = scores(model, s.test, true);
    auto cal = raw;
    for (auto& v : cal)
      v = recalibrate(v, beta);
    worst = std::max(worst, std::abs(roc(raw, y).auc - roc(cal, y).auc));
  }

  std::size_t broken = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<double> p(n);
    std::vector<std::uint8_t> lab(n);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = static_cast<double>(rng.below(i % 2 ? 10 : 1000)) / 1000.0;
      lab[k] = rng.bernoulli(0.3);
    }
    lab[0] = 0;
    lab[1] = 1;
    const auto r = roc(p, lab);
    const auto& pts = r.points;
    bool good = pts.front().fpr == 0 && pts.front().tpr == 0 && pts.back().fpr == 1 &&
                pts.back().tpr == 1 && r.auc >= 0 && r.auc <= 1;
    for (std::size_t k = 1; k < pts.size(); ++k)
      good = good && pts[k].fpr >= pts[k - 1].fpr && pts[k].tpr >= pts[k - 1].tpr &&
             pts[k].threshold < pts[k - 1].threshold;
    broken += !good;
  }
  return {worst <= 1e-12 && broken == 0,
          fmt("max AUC change under recalibration %.3g over 20 models; %zu of 100 ROC curves "
              "malformed",
              worst, broken)};
}

Outcome numerical_checks() {
  const auto& s = small();
  Rng rng(9);
  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(kFeatureCount + 1), g(kFeatureCount + 1);
    for (auto& v : w)
      v = rng.uniform(-0.5, 0.5);
    logistic_loss(w, s.train.samples, g);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(w[k]));
      auto up = w, down = w;
      up[k] += h;
      down[k] -= h;
      const double fd =
          (logistic_loss(up, s.train.samples) - logistic_loss(down, s.train.samples)) / (2 * h);
      num += (fd - g[k]) * (fd - g[k]);
      den += g[k] * g[k];
    }
    worst = std::max(worst, std::sqrt(num / std::max(den, 1e-300)));
  }

  GbdtConfig cfg;
  cfg.n_trees = 60;
  cfg.max_depth = 5;
  cfg.min_samples_leaf = 5;
  std::vector<double> trace;
  train_gbdt(s.train, cfg, 0, &trace);
  std::size_t rises = 0;
  for (std::size_t k = 1; k < trace.size(); ++k)
    rises += trace[k] > trace[k - 1];
  return {worst < 1e-4 && rises == 0 && trace.size() == 61,
          fmt("gradient relative error %.2g (10 points); GBDT loss %.5f -> %.5f, %zu increases",
              worst, trace.front(), trace.back(), rises)};
}

Outcome determinism() {
  fmp::test::TempDir a, b;
  std::vector<std::string> differ;
  auto same = [&](const std::string& rel) {
    if (fmp::test::slurp(a / rel) != fmp::test::slurp(b / rel))
      differ.push_back(rel);
  };

  const auto cfg = scenario("small.json");
  write_simulation(generate(cfg), a / "sim");
  write_simulation(generate(cfg), b / "sim");
  same("sim/alerts.jsonl");
  same("sim/truth.csv");

  const auto& s = small();
  BuildOptions one, many;
  one.threads = 1;
  many.threads = 4;
  auto ds_a = build(s.w.store, s.w.sim.prediction_times, Category::scan, one);
  auto ds_b = build(s.w.store, s.w.sim.prediction_times, Category::scan, many);
  write_dataset(subsample_majority(ds_a, 1.0, 4), a / "ds");
  write_dataset(subsample_majority(ds_b, 1.0, 4), b / "ds");
  same("ds/features.csv");
  same("ds/dataset.json");

  GbdtConfig g1, g3;
  g1.n_trees = g3.n_trees = 30;
  g1.min_samples_leaf = g3.min_samples_leaf = 5;
  g3.threads = 3;
  const auto gb = train_gbdt(s.train, g1, 0);
  save_model(gb, a / "gbdt.fmpm");
  save_model(train_gbdt(s.train, g3, 0), b / "gbdt.fmpm");
  same("gbdt.fmpm");
  LogRegConfig lc;
  lc.epochs = 300;
  save_model(train_logreg(s.train, lc, 0), a / "lr.fmpm");
  save_model(train_logreg(s.train, lc, 0), b / "lr.fmpm");
  same("lr.fmpm");

  const Timestamp t0 = s.w.sim.prediction_times.back();
  auto list = [&](const TrainedModel& m) {
    std::vector<ScoredIp> sc;
    const std::vector<Timestamp> at{t0};
    for (const auto& smp : build(s.w.store, at, Category::scan).samples)
      sc.push_back({smp.ip, fmp_score(m, smp.x)});
    return fmp_topn(sc, 50, t0, Category::scan);
  };
  write_blacklist(list(gb), a / "bl.txt");
  write_blacklist(list(load_model(b / "gbdt.fmpm")), b / "bl.txt");
  same("bl.txt");
  same("bl.txt.json");

  // Round trips.
  s.w.store.save(a / "store.fmps");
  AlertStore::load(a / "store.fmps").save(b / "store.fmps");
  same("store.fmps");
  auto loaded = load_model(a / "gbdt.fmpm");
  save_model(loaded, b / "gbdt2.fmpm");
  if (fmp::test::slurp(b / "gbdt2.fmpm") != fmp::test::slurp(a / "gbdt.fmpm"))
    differ.push_back("model round trip");
  if (scores(loaded, s.test) != scores(gb, s.test))
    differ.push_back("model predictions");
  auto back = read_dataset(a / "ds");
  write_dataset(back, b / "ds2");
  if (fmp::test::slurp(b / "ds2/features.csv") != fmp::test::slurp(a / "ds/features.csv"))
    differ.push_back("dataset round trip");

  std::string detail = "simulation, dataset (1 vs 4 threads), models (1 vs 3 threads), "
                       "blacklist, store and model round trips";
  for (const auto& d : differ)
    detail += "; differs: " + d;
  return {differ.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "recalibration identity", recalibration_identity},
      {2, "recalibration end to end", recalibration_end_to_end},
      {3, "oracle Brier", oracle_brier},
      {4, "learned model quality", model_quality},
      {5, "blacklist optimality", blacklist_optimality},
      {6, "FMP beats GWOL", fmp_beats_gwol},
      {7, "feature schema and ablation", feature_schema},
      {8, "metric invariances", metric_invariances},
      {9, "numerical checks", numerical_checks},
      {10, "determinism and round trips", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i)
    wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id))
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
