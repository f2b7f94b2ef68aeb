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

// fmpscore: command-line driver for the FMP pipeline.
//
//   simulate -> ingest -> enrich -> dataset -> train -> score -> blacklist -> eval
//
// Exit codes:
//   0 success
//   1 unexpected failure
//   2 usage error (bad or missing flags)
//   3 I/O error
//   4 malformed input (records, snapshots, length mismatches)
//   5 invalid configuration or parameter value
//   6 unusable data (empty, single class, category mismatch)
//   7 model error (corrupt, wrong version or schema, non-finite training)

#include "fmp/alerts.hpp"
#include "fmp/binary_io.hpp"
#include "fmp/blacklist.hpp"
#include "fmp/dataset.hpp"
#include "fmp/error.hpp"
#include "fmp/eval.hpp"
#include "fmp/features.hpp"
#include "fmp/model.hpp"
#include "fmp/simgen.hpp"
#include "fmp/store.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace fmp {
namespace {

constexpr const char* kVersion = "0.1.0";

int exit_code_for(Errc code) {
  switch (code) {
  case Errc::IoError:
    return 3;
  case Errc::MalformedRecord:
  case Errc::InvalidField:
  case Errc::CorruptSnapshot:
  case Errc::LengthMismatch:
    return 4;
  case Errc::ConfigError:
  case Errc::InvalidRatio:
  case Errc::InvalidFraction:
  case Errc::DomainError:
  case Errc::OutOfRange:
    return 5;
  case Errc::EmptySeries:
  case Errc::EmptyDataset:
  case Errc::Empty:
  case Errc::DegenerateData:
  case Errc::SingleClass:
  case Errc::CategoryMismatch:
  case Errc::AlreadySubsampled:
    return 6;
  case Errc::NonFinite:
  case Errc::SchemaMismatch:
  case Errc::VersionMismatch:
  case Errc::CorruptModel:
    return 7;
  }
  return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << '\n';
  return code;
}

// ---------------------------------------------------------------------------
// Argument helpers

Timestamp parse_time_arg(const std::string& text) {
  auto t = parse_rfc3339(text);
  if (!t)
    fail(Errc::ConfigError, "not an RFC 3339 time: '" + text + "'");
  return *t;
}

Category parse_category_arg(const std::string& text) {
  auto c = parse_category(text);
  if (!c)
    fail(Errc::ConfigError, "unknown category '" + text + "'");
  return *c;
}

std::vector<Timestamp> read_t0_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    fail(Errc::IoError, "cannot open " + path.string());
  std::vector<Timestamp> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    auto last = line.find_last_not_of(" \t\r");
    auto t = parse_rfc3339(std::string_view(line).substr(first, last - first + 1));
    if (!t)
      fail(Errc::MalformedRecord, path.string() + ":" + std::to_string(n) + ": bad time");
    out.push_back(*t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifests
//
// Each run records the resolved option values of its subcommand and a CRC-32
// for every input file. No timestamps, so identical runs write identical
// manifests.

struct Manifest {
  std::string command;
  ordered_json config = ordered_json::object();
  ordered_json inputs = ordered_json::array();
  ordered_json outputs = ordered_json::array();

  void input(const fs::path& path) {
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file())
          files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files)
        input(f);
      return;
    }
    inputs.push_back({{"path", path.generic_string()}, {"crc32", file_checksum(path)}});
  }

  void output(const fs::path& path) { outputs.push_back(path.generic_string()); }

  void write(const fs::path& path) const {
    ordered_json j;
    j["tool"] = "fmpscore";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    write_text_file(path, j.dump(2) + "\n");
  }
};

fs::path manifest_beside(const fs::path& file) { return file.string() + ".manifest.json"; }

ordered_json resolved_options(const CLI::App& sub) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help")
      continue;
    if (opt->count() > 0) {
      auto results = opt->results();
      if (opt->get_expected_max() > 1)
        j[name] = results;
      else if (opt->get_type_size() == 0)
        j[name] = true;
      else
        j[name] = results.empty() ? std::string() : results.back();
    } else if (opt->get_type_size() == 0) {
      j[name] = false;
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Score files: "ip,t0,fmp", one row per scored (ip, t0)

struct ScoreRow {
  Ipv4 ip;
  Timestamp t0;
  double fmp = 0;
};

std::string render_scores(const std::vector<ScoreRow>& rows) {
  std::string out = "ip,t0,fmp\n";
  for (const auto& r : rows) {
    out += r.ip.to_string();
    out += ',';
    out += format_rfc3339(r.t0);
    out += ',';
    out += format_double(r.fmp);
    out += '\n';
  }
  return out;
}

std::vector<ScoreRow> read_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    fail(Errc::IoError, "cannot open " + path.string());
  std::vector<ScoreRow> rows;
  std::string line;
  std::size_t n = 0;
  auto bad = [&](const std::string& why) {
    fail(Errc::MalformedRecord, path.string() + ":" + std::to_string(n) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (n == 1) {
      if (line != "ip,t0,fmp")
        bad("expected header 'ip,t0,fmp'");
      continue;
    }
    if (line.empty())
      continue;
    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      bad("expected three fields");
    auto ip = Ipv4::parse(std::string_view(line).substr(0, c1));
    auto t0 = parse_rfc3339(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
    if (!ip || !t0)
      bad("bad ip or t0");
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(line.substr(c2 + 1), &used);
      if (used != line.size() - c2 - 1)
        bad("bad score");
    } catch (const std::logic_error&) {
      bad("bad score");
    }
    rows.push_back({*ip, *t0, v});
  }
  if (n == 0)
    fail(Errc::MalformedRecord, path.string() + ": empty file");
  return rows;
}

// A dataset directory written with a test split holds train/ and test/; the
// training side is the default when the directory itself holds no samples.
fs::path dataset_dir(const fs::path& dir, const char* side) {
  if (!fs::exists(dir / "features.csv") && fs::exists(dir / side / "features.csv"))
    return dir / side;
  return dir;
}

FeatureGroup parse_group(const std::string& name) {
  static const std::map<std::string, FeatureGroup> groups = {
      {"same_category", FeatureGroup::same_category},
      {"other_category", FeatureGroup::other_category},
      {"prefix", FeatureGroup::prefix},
      {"context_rates", FeatureGroup::context_rates},
      {"tags", FeatureGroup::tags},
  };
  auto it = groups.find(name);
  if (it == groups.end())
    fail(Errc::ConfigError, "unknown feature group '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void run_simulate(const SimulateArgs& a, Manifest& m) {
  auto cfg = ScenarioConfig::load(a.config);
  if (a.seed)
    cfg.seed = *a.seed;
  m.input(a.config);
  auto sim = generate(cfg);
  write_simulation(sim, a.out);
  m.output(a.out);
  m.write(fs::path(a.out) / "manifest.json");
  std::cout << "simulated " << sim.alerts.size() << " alerts, " << sim.actors.size()
            << " actors, " << sim.prediction_times.size() << " prediction times\n";
}

struct IngestArgs {
  std::vector<std::string> alerts;
  std::string snapshot;
  bool strict = false;
  bool fresh = false;
};

void run_ingest(const IngestArgs& a, Manifest& m) {
  AlertStore store;
  if (!a.fresh && fs::exists(a.snapshot)) {
    m.input(a.snapshot);
    store = AlertStore::load(a.snapshot);
  }
  std::size_t rejected = 0;
  std::size_t added = 0;
  std::size_t duplicates = 0;
  for (const auto& path : a.alerts) {
    m.input(path);
    std::ifstream in(path);
    if (!in)
      fail(Errc::IoError, "cannot open " + path);
    std::vector<Alert> batch;
    auto stats = read_alerts(in, [&](Alert&& al) { batch.push_back(std::move(al)); }, a.strict);
    rejected += stats.rejected;
    for (const auto& e : stats.first_errors)
      std::cerr << path << ": " << e << '\n';
    auto s = store.ingest(batch);
    added += s.scan() + s.access();
    duplicates += s.duplicates;
  }
  store.save(a.snapshot);
  m.output(a.snapshot);
  m.write(manifest_beside(a.snapshot));
  std::cout << "ingested " << added << " alerts (" << duplicates << " duplicates, " << rejected
            << " rejected lines); " << store.entity_count() << " entities\n";
}

struct EnrichArgs {
  std::string snapshot;
  std::string enrichment;
  std::string maps;
  std::string out;
  bool no_ptr_rule = true;
};

void run_enrich(const EnrichArgs& a, Manifest& m) {
  m.input(a.snapshot);
  auto store = AlertStore::load(a.snapshot);
  store.set_no_ptr_rule(a.no_ptr_rule);
  if (!a.maps.empty()) {
    m.input(a.maps);
    store.set_context_maps(ContextMaps::load_directory(a.maps));
  }
  EnrichSummary summary;
  if (!a.enrichment.empty()) {
    m.input(a.enrichment);
    std::ifstream in(a.enrichment);
    if (!in)
      fail(Errc::IoError, "cannot open " + a.enrichment);
    summary = store.attach_enrichment(in);
    for (const auto& e : summary.first_errors)
      std::cerr << a.enrichment << ": " << e << '\n';
  }
  const std::string out = a.out.empty() ? a.snapshot : a.out;
  store.save(out);
  m.output(out);
  m.write(manifest_beside(out));
  std::cout << "enriched " << summary.applied << " records (" << summary.created << " new, "
            << summary.rejected << " rejected)\n";
}

struct DatasetArgs {
  std::string snapshot;
  std::string category = "scan";
  std::string t0_list;
  std::vector<std::string> t0;
  std::string out;
  int history_days = 7;
  int prediction_days = 1;
  double alpha = 0.25;
  unsigned threads = 0;
  double test_fraction = 0;
  std::optional<double> subsample_ratio;
  std::uint64_t seed = 0;
  std::vector<std::string> zero;
};

void run_dataset(const DatasetArgs& a, Manifest& m) {
  m.input(a.snapshot);
  auto store = AlertStore::load(a.snapshot);
  std::vector<Timestamp> times;
  if (!a.t0_list.empty()) {
    m.input(a.t0_list);
    times = read_t0_list(a.t0_list);
  }
  for (const auto& t : a.t0)
    times.push_back(parse_time_arg(t));
  if (times.empty())
    fail(Errc::ConfigError, "no prediction times (use --t0-list or --t0)");
  const Category target = parse_category_arg(a.category);

  BuildOptions opts;
  opts.history_days = a.history_days;
  opts.prediction_days = a.prediction_days;
  opts.ewma = EwmaParams(a.alpha);
  opts.threads = a.threads;
  auto ds = build(store, times, target, opts);
  ds.seed = a.seed;
  for (const auto& g : a.zero) {
    auto idx = feature_indices(parse_group(g), target);
    zero_features(ds, idx);
  }

  const fs::path out(a.out);
  if (a.test_fraction > 0) {
    auto [train, test] = split(ds, a.test_fraction, a.seed);
    if (a.subsample_ratio)
      train = subsample_majority(train, *a.subsample_ratio, a.seed);
    write_dataset(train, out / "train");
    write_dataset(test, out / "test");
    m.output(out / "train");
    m.output(out / "test");
    std::cout << "train " << train.size() << " samples (" << train.n_pos << " positive), test "
              << test.size() << " samples (" << test.n_pos << " positive)\n";
  } else {
    if (a.subsample_ratio)
      ds = subsample_majority(ds, *a.subsample_ratio, a.seed);
    write_dataset(ds, out);
    m.output(out);
    std::cout << ds.size() << " samples (" << ds.n_pos << " positive)\n";
  }
  m.write(out / "manifest.json");
}

struct TrainArgs {
  std::string dataset;
  std::string model = "gbdt";
  std::string out;
  int trees = 200;
  int depth = 7;
  std::optional<double> learning_rate;
  double lambda = 1.0;
  int min_leaf = 20;
  int epochs = 1000;
  double l2 = 0;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  std::optional<double> subsample_ratio;
  std::string loss_trace;
};

void run_train(const TrainArgs& a, Manifest& m) {
  const fs::path dir = dataset_dir(a.dataset, "train");
  m.input(dir / "features.csv");
  m.input(dir / "dataset.json");
  auto ds = read_dataset(dir);
  if (a.subsample_ratio)
    ds = subsample_majority(ds, *a.subsample_ratio, a.seed);

  std::vector<double> trace;
  TrainedModel model;
  if (a.model == "gbdt") {
    GbdtConfig cfg;
    cfg.n_trees = a.trees;
    cfg.max_depth = a.depth;
    cfg.learning_rate = a.learning_rate.value_or(cfg.learning_rate);
    cfg.l2_lambda = a.lambda;
    cfg.min_samples_leaf = a.min_leaf;
    cfg.threads = a.threads;
    model = train_gbdt(ds, cfg, a.seed, &trace);
  } else if (a.model == "logreg") {
    LogRegConfig cfg;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.learning_rate.value_or(cfg.learning_rate);
    cfg.l2 = a.l2;
    model = train_logreg(ds, cfg, a.seed, &trace);
  } else {
    fail(Errc::ConfigError, "unknown model kind '" + a.model + "'");
  }
  save_model(model, a.out);
  m.output(a.out);
  if (!a.loss_trace.empty()) {
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
      csv += std::to_string(i) + "," + format_double(trace[i]) + "\n";
    write_text_file(a.loss_trace, csv);
    m.output(a.loss_trace);
  }
  m.write(manifest_beside(a.out));
  std::cout << "trained " << a.model << " on " << ds.size() << " samples; beta "
            << format_double(model.beta) << ", final loss "
            << (trace.empty() ? std::string("n/a") : format_double(trace.back())) << '\n';
}

struct ScoreArgs {
  std::string model;
  std::string snapshot;
  std::vector<std::string> t0;
  std::string dataset;
  std::string out;
  unsigned threads = 0;
};

void run_score(const ScoreArgs& a, Manifest& m) {
  m.input(a.model);
  auto model = load_model(a.model);
  Dataset ds;
  if (!a.dataset.empty()) {
    const fs::path dir = dataset_dir(a.dataset, "test");
    m.input(dir / "features.csv");
    m.input(dir / "dataset.json");
    ds = read_dataset(dir);
    if (ds.target != model.meta.target)
      fail(Errc::CategoryMismatch, "dataset and model target different categories");
  } else {
    if (a.snapshot.empty() || a.t0.empty())
      fail(Errc::ConfigError, "score needs --dataset, or --snapshot with --t0");
    m.input(a.snapshot);
    auto store = AlertStore::load(a.snapshot);
    std::vector<Timestamp> times;
    for (const auto& t : a.t0)
      times.push_back(parse_time_arg(t));
    BuildOptions opts;
    opts.history_days = model.meta.history_days;
    opts.prediction_days = model.meta.prediction_days;
    opts.ewma = EwmaParams(model.meta.alpha);
    opts.threads = a.threads;
    ds = build(store, times, model.meta.target, opts);
  }
  std::vector<ScoreRow> rows;
  rows.reserve(ds.size());
  for (const auto& s : ds.samples)
    rows.push_back({s.ip, s.t0, fmp_score(model, s.x)});
  write_text_file(a.out, render_scores(rows));
  m.output(a.out);
  m.write(manifest_beside(a.out));
  std::cout << "scored " << rows.size() << " (ip, t0) pairs\n";
}

std::vector<ScoredIp> scores_at(const std::vector<ScoreRow>& rows,
                                std::optional<Timestamp>& t0) {
  if (!t0) {
    for (const auto& r : rows) {
      if (t0 && *t0 != r.t0)
        fail(Errc::ConfigError, "scores span several prediction times; pick one with --t0");
      t0 = r.t0;
    }
  }
  if (!t0)
    fail(Errc::Empty, "no scores");
  std::vector<ScoredIp> out;
  for (const auto& r : rows)
    if (r.t0 == *t0)
      out.push_back({r.ip, r.fmp});
  return out;
}

struct BlacklistArgs {
  std::string scores;
  std::optional<std::size_t> topn;
  std::optional<double> threshold;
  std::string t0;
  std::string category = "scan";
  std::string out;
};

void run_blacklist(const BlacklistArgs& a, Manifest& m) {
  m.input(a.scores);
  auto rows = read_scores(a.scores);
  std::optional<Timestamp> t0;
  if (!a.t0.empty())
    t0 = parse_time_arg(a.t0);
  auto scored = scores_at(rows, t0);
  const Category cat = parse_category_arg(a.category);
  Blacklist bl = a.topn ? fmp_topn(scored, *a.topn, *t0, cat)
                        : fmp_threshold(scored, *a.threshold, *t0, cat);
  write_blacklist(bl, a.out);
  m.output(a.out);
  m.output(a.out + ".json");
  m.write(manifest_beside(a.out));
  std::cout << bl.name << ": " << bl.size() << " entries\n";
}

struct GwolArgs {
  std::string snapshot;
  std::string t0;
  int window = 1;
  std::size_t n = 100;
  std::string category = "scan";
  std::string out;
};

void run_gwol(const GwolArgs& a, Manifest& m) {
  m.input(a.snapshot);
  auto store = AlertStore::load(a.snapshot);
  auto bl = gwol(store, parse_time_arg(a.t0), a.window, a.n, parse_category_arg(a.category));
  write_blacklist(bl, a.out);
  m.output(a.out);
  m.output(a.out + ".json");
  m.write(manifest_beside(a.out));
  std::cout << bl.name << ": " << bl.size() << " entries\n";
}

struct EvalArgs {
  std::string pred;
  std::string labels;
  std::string report;
  std::size_t bins = 10;
  std::size_t min_count = 50;
};

void run_eval(const EvalArgs& a, Manifest& m) {
  m.input(a.pred);
  const fs::path dir = dataset_dir(a.labels, "test");
  m.input(dir / "features.csv");
  m.input(dir / "dataset.json");
  auto rows = read_scores(a.pred);
  auto ds = read_dataset(dir);

  std::map<std::pair<Timestamp, Ipv4>, std::uint8_t> labels;
  for (const auto& s : ds.samples)
    labels.emplace(std::make_pair(s.t0, s.ip), s.y);
  std::vector<double> pred;
  std::vector<std::uint8_t> y;
  for (const auto& r : rows) {
    auto it = labels.find({r.t0, r.ip});
    if (it == labels.end())
      fail(Errc::LengthMismatch,
           "no label for " + r.ip.to_string() + " at " + format_rfc3339(r.t0));
    pred.push_back(r.fmp);
    y.push_back(it->second);
  }
  if (pred.size() != labels.size())
    fail(Errc::LengthMismatch, "predictions cover " + std::to_string(pred.size()) + " of " +
                                   std::to_string(labels.size()) + " labelled samples");

  auto summary = evaluate(pred, y, a.bins, a.min_count);
  const std::string base = fs::path(a.report).replace_extension().string();
  write_text_file(a.report, to_json(summary) + "\n");
  write_text_file(base + ".calibration.csv", calibration_csv(summary.calibration));
  m.output(a.report);
  m.output(base + ".calibration.csv");
  if (summary.roc) {
    write_text_file(base + ".roc.csv", roc_csv(*summary.roc));
    m.output(base + ".roc.csv");
  }
  m.write(manifest_beside(a.report));
  std::cout << "brier " << format_double(summary.brier);
  if (summary.roc)
    std::cout << ", auc " << format_double(summary.roc->auc);
  std::cout << ", calibration max gap " << format_double(summary.calibration.max_gap) << '\n';
}

struct EvalBlacklistArgs {
  std::vector<std::string> lists;
  std::string snapshot;
  std::string t0;
  std::string category;
  std::string report;
};

void run_eval_blacklist(const EvalBlacklistArgs& a, Manifest& m) {
  m.input(a.snapshot);
  auto store = AlertStore::load(a.snapshot);
  std::vector<Blacklist> lists;
  for (const auto& path : a.lists) {
    m.input(path);
    if (fs::exists(path + ".json"))
      m.input(path + ".json");
    auto bl = read_blacklist(path);
    if (!a.t0.empty())
      bl.generated_at = parse_time_arg(a.t0);
    else if (bl.generated_at == Timestamp{})
      fail(Errc::ConfigError, path + " carries no prediction time; pass --t0");
    if (!a.category.empty())
      bl.category = parse_category_arg(a.category);
    lists.push_back(std::move(bl));
  }
  ordered_json j;
  j["lists"] = ordered_json::array();
  for (const auto& bl : lists) {
    auto r = ordered_json::parse(to_json(evaluate_blacklist(bl, store, bl.category)));
    j["lists"].push_back({{"name", bl.name}, {"t0", format_rfc3339(bl.generated_at)},
                          {"report", r}});
  }
  if (lists.size() > 1) {
    auto u = union_blacklists(lists);
    j["union"] = {{"name", u.name},
                  {"report", ordered_json::parse(to_json(evaluate_blacklist(u, store, u.category)))}};
  }
  const std::string text = j.dump(2) + "\n";
  if (a.report.empty()) {
    std::cout << text;
    return;
  }
  write_text_file(a.report, text);
  m.output(a.report);
  m.write(manifest_beside(a.report));
}

struct OracleArgs {
  std::string truth;
  std::vector<std::string> t0;
  std::string dataset;
  std::string category = "scan";
  std::string out;
};

void run_oracle(const OracleArgs& a, Manifest& m) {
  m.input(a.truth);
  auto truth = GroundTruth::load(a.truth);
  const Category cat = parse_category_arg(a.category);
  std::vector<ScoreRow> rows;
  if (!a.dataset.empty()) {
    const fs::path dir = dataset_dir(a.dataset, "test");
    m.input(dir / "features.csv");
    m.input(dir / "dataset.json");
    auto ds = read_dataset(dir);
    for (const auto& s : ds.samples)
      rows.push_back({s.ip, s.t0, truth.probability(s.ip, truth.day_of(s.t0), ds.target)});
  } else {
    if (a.t0.empty())
      fail(Errc::ConfigError, "oracle needs --dataset or --t0");
    for (const auto& text : a.t0) {
      const Timestamp t0 = parse_time_arg(text);
      for (const auto& s : truth.oracle_scores(t0, cat))
        rows.push_back({s.ip, t0, s.score});
    }
  }
  write_text_file(a.out, render_scores(rows));
  m.output(a.out);
  m.write(manifest_beside(a.out));
  std::cout << "oracle scores for " << rows.size() << " (ip, t0) pairs\n";
}

int run(int argc, char** argv) {
  CLI::App app{"fmpscore: Future Maliciousness Probability scoring and predictive blacklists"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML file of option overrides ([subcommand] sections); "
                                 "command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  SimulateArgs sim_a;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario with ground truth");
  sim->add_option("--config", sim_a.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_a.out, "Output directory")->required();
  sim->add_option("--seed", sim_a.seed, "Override the scenario seed");

  IngestArgs ing_a;
  auto* ing = app.add_subcommand("ingest", "Load alert streams into a store snapshot");
  ing->add_option("--alerts", ing_a.alerts, "Alert JSONL file(s)")->required()->check(CLI::ExistingFile);
  ing->add_option("--snapshot", ing_a.snapshot, "Snapshot to create or extend")->required();
  ing->add_flag("--strict", ing_a.strict, "Fail on the first malformed line");
  ing->add_flag("--fresh", ing_a.fresh, "Ignore an existing snapshot at the same path");

  EnrichArgs enr_a;
  auto* enr = app.add_subcommand("enrich", "Attach enrichment records and context maps");
  enr->add_option("--snapshot", enr_a.snapshot, "Input snapshot")->required()->check(CLI::ExistingFile);
  enr->add_option("--enrichment", enr_a.enrichment, "Enrichment JSONL file")->check(CLI::ExistingFile);
  enr->add_option("--maps", enr_a.maps, "Directory with asn_map/cc_map/asn_sizes/cc_sizes CSVs")
      ->check(CLI::ExistingDirectory);
  enr->add_option("--out", enr_a.out, "Output snapshot (default: overwrite input)");
  enr->add_option("--no-ptr-rule", enr_a.no_ptr_rule, "Tag hosts without a hostname as no-PTR")
      ->capture_default_str();

  DatasetArgs ds_a;
  auto* dsc = app.add_subcommand("dataset", "Build labelled feature vectors");
  dsc->add_option("--snapshot", ds_a.snapshot, "Store snapshot")->required()->check(CLI::ExistingFile);
  dsc->add_option("--category", ds_a.category, "Target category (scan|access)")->capture_default_str();
  dsc->add_option("--t0-list", ds_a.t0_list, "File with one RFC 3339 prediction time per line")
      ->check(CLI::ExistingFile);
  dsc->add_option("--t0", ds_a.t0, "Prediction time(s), RFC 3339");
  dsc->add_option("--out", ds_a.out, "Output directory")->required();
  dsc->add_option("--history-days", ds_a.history_days, "History window length")->capture_default_str();
  dsc->add_option("--prediction-days", ds_a.prediction_days, "Prediction window length")
      ->capture_default_str();
  dsc->add_option("--alpha", ds_a.alpha, "EWMA smoothing factor")->capture_default_str();
  dsc->add_option("--threads", ds_a.threads, "Worker threads (0 = all cores)")->capture_default_str();
  dsc->add_option("--test-fraction", ds_a.test_fraction,
                  "Hold out this fraction as out/test (train goes to out/train)")
      ->capture_default_str();
  dsc->add_option("--subsample-ratio", ds_a.subsample_ratio,
                  "Subsample negatives of the training side to ratio x positives");
  dsc->add_option("--seed", ds_a.seed, "Seed for split and subsampling")->capture_default_str();
  dsc->add_option("--zero", ds_a.zero,
                  "Zero a feature group (same_category|other_category|prefix|context_rates|tags)");

  TrainArgs tr_a;
  auto* tr = app.add_subcommand("train", "Fit a model on a dataset");
  tr->add_option("--dataset", tr_a.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--model", tr_a.model, "gbdt|logreg")->capture_default_str()
      ->check(CLI::IsMember({"gbdt", "logreg"}));
  tr->add_option("--out", tr_a.out, "Model file")->required();
  tr->add_option("--trees", tr_a.trees, "GBDT: number of trees")->capture_default_str();
  tr->add_option("--depth", tr_a.depth, "GBDT: maximum depth")->capture_default_str();
  tr->add_option("--learning-rate", tr_a.learning_rate,
                 "GBDT shrinkage (default 0.1) or logreg step multiplier (default 1)");
  tr->add_option("--lambda", tr_a.lambda, "GBDT: L2 penalty on leaf values")->capture_default_str();
  tr->add_option("--min-leaf", tr_a.min_leaf, "GBDT: minimum samples per leaf")->capture_default_str();
  tr->add_option("--epochs", tr_a.epochs, "logreg: optimisation epochs")->capture_default_str();
  tr->add_option("--l2", tr_a.l2, "logreg: L2 penalty")->capture_default_str();
  tr->add_option("--threads", tr_a.threads, "GBDT split-search threads")->capture_default_str();
  tr->add_option("--seed", tr_a.seed, "Seed recorded in the model and used for subsampling")
      ->capture_default_str();
  tr->add_option("--subsample-ratio", tr_a.subsample_ratio,
                 "Subsample negatives to ratio x positives before training");
  tr->add_option("--loss-trace", tr_a.loss_trace, "Write the per-step training loss as CSV");

  ScoreArgs sc_a;
  auto* sc = app.add_subcommand("score", "Compute FMP scores");
  sc->add_option("--model", sc_a.model, "Model file")->required()->check(CLI::ExistingFile);
  sc->add_option("--snapshot", sc_a.snapshot, "Store snapshot")->check(CLI::ExistingFile);
  sc->add_option("--t0", sc_a.t0, "Prediction time(s), RFC 3339");
  sc->add_option("--dataset", sc_a.dataset, "Score the samples of a dataset instead")
      ->check(CLI::ExistingDirectory);
  sc->add_option("--out", sc_a.out, "Score CSV (ip,t0,fmp)")->required();
  sc->add_option("--threads", sc_a.threads, "Feature threads (0 = all cores)")->capture_default_str();

  BlacklistArgs bl_a;
  auto* blc = app.add_subcommand("blacklist", "Build an FMP blacklist from scores");
  blc->add_option("--scores", bl_a.scores, "Score CSV")->required()->check(CLI::ExistingFile);
  auto* topn = blc->add_option("--topn", bl_a.topn, "Keep the N highest scores");
  auto* thr = blc->add_option("--threshold", bl_a.threshold, "Keep scores >= T");
  topn->excludes(thr);
  blc->add_option("--t0", bl_a.t0, "Prediction time to use when scores span several");
  blc->add_option("--category", bl_a.category, "Category the scores target")->capture_default_str();
  blc->add_option("--out", bl_a.out, "Blacklist file (a .json sidecar is written beside it)")
      ->required();

  GwolArgs gw_a;
  auto* gw = app.add_subcommand("gwol", "Build a global worst offender list");
  gw->add_option("--snapshot", gw_a.snapshot, "Store snapshot")->required()->check(CLI::ExistingFile);
  gw->add_option("--t0", gw_a.t0, "Prediction time, RFC 3339")->required();
  gw->add_option("--window", gw_a.window, "Look-back window in days")->capture_default_str();
  gw->add_option("--n", gw_a.n, "List length")->capture_default_str();
  gw->add_option("--category", gw_a.category, "Category to rank by")->capture_default_str();
  gw->add_option("--out", gw_a.out, "Blacklist file")->required();

  EvalArgs ev_a;
  auto* ev = app.add_subcommand("eval", "Brier score, calibration curve and ROC of predictions");
  ev->add_option("--pred", ev_a.pred, "Score CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--labels", ev_a.labels, "Dataset directory holding the labels")
      ->required()->check(CLI::ExistingDirectory);
  ev->add_option("--report", ev_a.report, "JSON report; CSVs for plotting are written beside it")
      ->required();
  ev->add_option("--bins", ev_a.bins, "Calibration bins")->capture_default_str();
  ev->add_option("--min-count", ev_a.min_count, "Minimum bin size for the calibration gap")
      ->capture_default_str();

  EvalBlacklistArgs eb_a;
  auto* eb = app.add_subcommand("eval-blacklist", "Hit counts of blacklists on the next day");
  eb->add_option("--list", eb_a.lists, "Blacklist file(s); several are also evaluated as a union")
      ->required()->check(CLI::ExistingFile);
  eb->add_option("--snapshot", eb_a.snapshot, "Store snapshot")->required()->check(CLI::ExistingFile);
  eb->add_option("--t0", eb_a.t0, "Override the lists' prediction time");
  eb->add_option("--category", eb_a.category, "Override the lists' category");
  eb->add_option("--report", eb_a.report, "JSON report (default: stdout)");

  OracleArgs or_a;
  auto* orc = app.add_subcommand("oracle", "Ground-truth scores from a simulation");
  orc->add_option("--truth", or_a.truth, "truth.csv from simulate")->required()->check(CLI::ExistingFile);
  orc->add_option("--t0", or_a.t0, "Prediction time(s), RFC 3339");
  orc->add_option("--dataset", or_a.dataset, "Score exactly the samples of a dataset")
      ->check(CLI::ExistingDirectory);
  orc->add_option("--category", or_a.category, "Category (ignored with --dataset)")
      ->capture_default_str();
  orc->add_option("--out", or_a.out, "Score CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    return report_error("UsageError", e.what(), 2);
  }
  if (*blc && !*topn && !*thr)
    return report_error("UsageError", "blacklist needs --topn or --threshold", 2);

  CLI::App* sub = app.get_subcommands().front();
  Manifest m;
  m.command = sub->get_name();
  m.config = resolved_options(*sub);
  if (const CLI::Option* cfg = app.get_config_ptr(); cfg != nullptr && cfg->count() > 0)
    m.input(cfg->as<std::string>());

  if (*sim)
    run_simulate(sim_a, m);
  else if (*ing)
    run_ingest(ing_a, m);
  else if (*enr)
    run_enrich(enr_a, m);
  else if (*dsc)
    run_dataset(ds_a, m);
  else if (*tr)
    run_train(tr_a, m);
  else if (*sc)
    run_score(sc_a, m);
  else if (*blc)
    run_blacklist(bl_a, m);
  else if (*gw)
    run_gwol(gw_a, m);
  else if (*ev)
    run_eval(ev_a, m);
  else if (*eb)
    run_eval_blacklist(eb_a, m);
  else if (*orc)
    run_oracle(or_a, m);
  return 0;
}

} // namespace
} // namespace fmp

int main(int argc, char** argv) {
  try {
    return fmp::run(argc, argv);
  } catch (const fmp::Error& e) {
    return fmp::report_error(fmp::to_string(e.code()), e.what(), fmp::exit_code_for(e.code()));
  } catch (const std::filesystem::filesystem_error& e) {
    return fmp::report_error("IoError", e.what(), 3);
  } catch (const std::exception& e) {
    return fmp::report_error("InternalError", e.what(), 1);
  }
}
