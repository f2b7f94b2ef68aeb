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

#include "fmp/binary_io.hpp"
#include "fmp/error.hpp"
#include "fmp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace fmp {

namespace {

std::vector<Sample> build_at(const AlertStore& store, const WindowConfig& window,
                             Category target, const EwmaParams& ewma, unsigned threads) {
  const auto candidates = store.active_ips({window.history_begin(), window.t0()}, target);
  std::vector<Sample> out(candidates.size());
  if (candidates.empty())
    return out;

  const FeatureExtractor extractor(store, window, ewma);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& s = out[i];
      s.ip = candidates[i];
      s.t0 = window.t0();
      s.x = extractor.assemble(s.ip);
      s.y = label(store, s.ip, window, target);
    }
  };

  const std::size_t n = candidates.size();
  const std::size_t n_threads = std::min<std::size_t>(threads, (n + 255) / 256);
  if (n_threads <= 1) {
    work(0, n);
    return out;
  }
  // Each worker fills a disjoint slice, so the result does not depend on
  // scheduling.
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    auto begin = t * chunk;
    auto end = std::min(n, begin + chunk);
    if (begin < end)
      pool.emplace_back(work, begin, end);
  }
  for (auto& th : pool)
    th.join();
  return out;
}

Dataset with_samples(const Dataset& like, std::vector<Sample> samples) {
  Dataset out = like;
  out.samples = std::move(samples);
  out.recount();
  return out;
}

std::vector<std::string_view> split_line(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(Errc::MalformedRecord, "bad number '" + std::string(s) + "'");
  return v;
}

} // namespace

void Dataset::recount() {
  n_pos = 0;
  for (const auto& s : samples)
    n_pos += s.y;
  n_neg = samples.size() - n_pos;
}

double class_ratio(std::size_t n_pos, std::size_t n_neg) {
  if (n_neg == 0)
    return std::numeric_limits<double>::infinity();
  return static_cast<double>(n_pos) / static_cast<double>(n_neg);
}

std::uint8_t label(const AlertStore& store, Ipv4 ip, const WindowConfig& window,
                   Category target) {
  // The prediction window is (t0, t0 + w_p]; as a half-open store interval
  // that is [t0 + 1s, t0 + w_p + 1s).
  Interval window_p{window.t0() + Seconds{1}, window.prediction_end() + Seconds{1}};
  return store.has_alert(ip, target, window_p) ? 1 : 0;
}

Dataset build(const AlertStore& store, std::span<const Timestamp> prediction_times,
              Category target, const BuildOptions& options) {
  std::vector<Timestamp> times(prediction_times.begin(), prediction_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  Dataset ds;
  ds.target = target;
  ds.alpha = options.ewma.alpha;
  ds.history_days = options.history_days;
  ds.prediction_days = options.prediction_days;
  for (auto t0 : times) {
    WindowConfig window(t0, options.history_days, options.prediction_days);
    auto part = build_at(store, window, target, options.ewma, std::max(1u, threads));
    ds.samples.insert(ds.samples.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
  }
  if (ds.samples.empty())
    fail(Errc::EmptyDataset, "no IP has a " + std::string(to_string(target)) +
                                 " alert in any history window");
  ds.recount();
  ds.beta = class_ratio(ds.n_pos, ds.n_neg);
  return ds;
}

Dataset subsample_majority(const Dataset& ds, double ratio, std::uint64_t seed) {
  if (ds.subsampled)
    fail(Errc::AlreadySubsampled, "dataset is already subsampled");
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    fail(Errc::InvalidRatio, "subsample ratio must be a positive finite number");

  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (ds.samples[i].y == 0)
      negatives.push_back(i);
  const auto wanted = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(ds.n_pos)));
  const auto keep_neg = std::min(wanted, negatives.size());

  Rng rng(seed);
  rng.shuffle(negatives);
  std::vector<char> keep(ds.samples.size(), 0);
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    keep[i] = ds.samples[i].y == 1;
  for (std::size_t k = 0; k < keep_neg; ++k)
    keep[negatives[k]] = 1;

  std::vector<Sample> kept;
  kept.reserve(ds.n_pos + keep_neg);
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (keep[i])
      kept.push_back(ds.samples[i]);
  Dataset out = with_samples(ds, std::move(kept));
  out.beta = ds.beta;
  out.subsampled = true;
  out.seed = seed;
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    fail(Errc::InvalidFraction, "test fraction must lie in (0, 1)");
  if (ds.subsampled)
    fail(Errc::AlreadySubsampled, "split before subsampling; the test side must keep the "
                                  "original class distribution");
  const std::size_t n = ds.samples.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<char> in_test(n, 0);
  for (std::size_t k = 0; k < n_test; ++k)
    in_test[order[k]] = 1;

  std::vector<Sample> train, test;
  train.reserve(n - n_test);
  test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i)
    (in_test[i] ? test : train).push_back(ds.samples[i]);
  Dataset tr = with_samples(ds, std::move(train));
  Dataset te = with_samples(ds, std::move(test));
  tr.beta = class_ratio(tr.n_pos, tr.n_neg);
  te.beta = class_ratio(te.n_pos, te.n_neg);
  tr.seed = te.seed = seed;
  return {std::move(tr), std::move(te)};
}

void zero_features(Dataset& ds, std::span<const std::size_t> indices) {
  for (auto& s : ds.samples)
    for (auto i : indices)
      s.x.at(i) = 0.0;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    fail(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::string csv;
  csv.reserve(ds.samples.size() * 400 + 2048);
  csv += "ip,t0";
  for (const auto& name : feature_names()) {
    csv += ',';
    csv += name;
  }
  csv += ",label\n";
  for (const auto& s : ds.samples) {
    csv += s.ip.to_string();
    csv += ',';
    csv += format_rfc3339(s.t0);
    for (double v : s.x) {
      csv += ',';
      csv += format_double(v);
    }
    csv += ',';
    csv += s.y ? '1' : '0';
    csv += '\n';
  }
  write_text_file(dir / "features.csv", csv);

  nlohmann::ordered_json side;
  side["target_category"] = to_string(ds.target);
  if (std::isfinite(ds.beta))
    side["beta"] = ds.beta;
  else
    side["beta"] = nullptr;
  side["n_pos"] = ds.n_pos;
  side["n_neg"] = ds.n_neg;
  side["subsampled"] = ds.subsampled;
  side["seed"] = ds.seed;
  side["alpha"] = ds.alpha;
  side["w_h"] = ds.history_days;
  side["w_p"] = ds.prediction_days;
  side["feature_schema"] = feature_schema_hash();
  write_text_file(dir / "dataset.json", side.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  {
    std::ifstream in(dir / "dataset.json");
    if (!in)
      fail(Errc::IoError, "cannot open " + (dir / "dataset.json").string());
    nlohmann::json side;
    try {
      side = nlohmann::json::parse(in);
      auto cat = parse_category(side.at("target_category").get<std::string>());
      if (!cat)
        fail(Errc::MalformedRecord, "unknown target_category in dataset.json");
      ds.target = *cat;
      ds.beta = side.at("beta").is_null() ? std::numeric_limits<double>::infinity()
                                          : side.at("beta").get<double>();
      ds.subsampled = side.at("subsampled").get<bool>();
      ds.seed = side.at("seed").get<std::uint64_t>();
      ds.alpha = side.at("alpha").get<double>();
      ds.history_days = side.at("w_h").get<int>();
      ds.prediction_days = side.at("w_p").get<int>();
      if (side.contains("feature_schema") &&
          side["feature_schema"].get<std::uint32_t>() != feature_schema_hash())
        fail(Errc::SchemaMismatch, "dataset was written with a different feature layout");
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::MalformedRecord, std::string("dataset.json: ") + e.what());
    }
  }

  std::ifstream in(dir / "features.csv");
  if (!in)
    fail(Errc::IoError, "cannot open " + (dir / "features.csv").string());
  std::string line;
  if (!std::getline(in, line))
    fail(Errc::MalformedRecord, "features.csv is empty");
  {
    auto header = split_line(line);
    if (header.size() != kFeatureCount + 3 || header.front() != "ip" || header[1] != "t0" ||
        header.back() != "label")
      fail(Errc::SchemaMismatch, "features.csv header does not match the feature layout");
    for (std::size_t i = 0; i < kFeatureCount; ++i)
      if (header[i + 2] != feature_names()[i])
        fail(Errc::SchemaMismatch, "unexpected column '" + std::string(header[i + 2]) + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    auto cells = split_line(line);
    if (cells.size() != kFeatureCount + 3)
      fail(Errc::MalformedRecord, "features.csv line " + std::to_string(line_no) +
                                      ": wrong column count");
    Sample s;
    auto ip = Ipv4::parse(cells[0]);
    auto t0 = parse_rfc3339(cells[1]);
    if (!ip || !t0)
      fail(Errc::MalformedRecord, "features.csv line " + std::to_string(line_no) +
                                      ": bad ip or t0");
    s.ip = *ip;
    s.t0 = *t0;
    for (std::size_t i = 0; i < kFeatureCount; ++i)
      s.x[i] = parse_double(cells[i + 2]);
    if (cells.back() != "0" && cells.back() != "1")
      fail(Errc::MalformedRecord, "features.csv line " + std::to_string(line_no) +
                                      ": label must be 0 or 1");
    s.y = cells.back() == "1" ? 1 : 0;
    ds.samples.push_back(s);
  }
  ds.recount();
  return ds;
}

} // namespace fmp
