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

#include "fmp/eval.hpp"

#include "fmp/dataset.hpp"
#include "fmp/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fmp {

namespace {

void check_inputs(std::span<const double> pred, std::span<const std::uint8_t> y) {
  if (pred.size() != y.size())
    fail(Errc::LengthMismatch, "predictions and labels differ in length");
  if (pred.empty())
    fail(Errc::Empty, "no predictions");
  for (double p : pred)
    if (!(p >= 0.0 && p <= 1.0))
      fail(Errc::DomainError, "prediction outside [0, 1]");
  for (auto v : y)
    if (v > 1)
      fail(Errc::DomainError, "label must be 0 or 1");
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

} // namespace

double brier(std::span<const double> pred, std::span<const std::uint8_t> y) {
  check_inputs(pred, y);
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - y[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

CalibrationReport calibration_curve(std::span<const double> pred, std::span<const std::uint8_t> y,
                                    std::size_t n_bins, std::size_t min_count) {
  if (n_bins < 2)
    fail(Errc::ConfigError, "calibration needs at least 2 bins");
  check_inputs(pred, y);

  std::vector<double> sum_pred(n_bins, 0.0);
  std::vector<std::size_t> pos(n_bins, 0), count(n_bins, 0);
  const double width = static_cast<double>(n_bins);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto b = std::min(static_cast<std::size_t>(pred[i] * width), n_bins - 1);
    sum_pred[b] += pred[i];
    pos[b] += y[i];
    ++count[b];
  }

  CalibrationReport report;
  report.n_bins = n_bins;
  report.min_count = min_count;
  report.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = report.bins[b];
    bin.lower = static_cast<double>(b) / width;
    bin.upper = static_cast<double>(b + 1) / width;
    bin.count = count[b];
    if (count[b] == 0)
      continue;
    const double n = static_cast<double>(count[b]);
    bin.mean_predicted = sum_pred[b] / n;
    bin.empirical_fraction = static_cast<double>(pos[b]) / n;
    if (count[b] >= min_count)
      report.max_gap =
          std::max(report.max_gap, std::abs(*bin.mean_predicted - *bin.empirical_fraction));
  }
  return report;
}

RocReport roc(std::span<const double> pred, std::span<const std::uint8_t> y) {
  check_inputs(pred, y);
  const std::size_t total_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const std::size_t total_neg = y.size() - total_pos;
  if (total_pos == 0 || total_neg == 0)
    fail(Errc::SingleClass, "ROC needs both classes");

  std::vector<std::size_t> idx(pred.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pred[a] > pred[b]; });

  RocReport report;
  report.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  const double P = static_cast<double>(total_pos), N = static_cast<double>(total_neg);
  std::size_t tp = 0, fp = 0;
  // Twice the area in units of one positive-negative pair, kept integral so
  // the result matches the pairwise definition exactly.
  unsigned long long doubled_area = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double threshold = pred[idx[i]];
    std::size_t dp = 0, dn = 0;
    for (; i < idx.size() && pred[idx[i]] == threshold; ++i)
      (y[idx[i]] ? dp : dn)++;
    doubled_area += static_cast<unsigned long long>(dn) * (2 * tp + dp);
    tp += dp;
    fp += dn;
    report.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, threshold});
  }
  report.auc = static_cast<double>(doubled_area) / (2.0 * P * N);
  return report;
}

EvalSummary evaluate(std::span<const double> pred, std::span<const std::uint8_t> y,
                     std::size_t n_bins, std::size_t min_count) {
  EvalSummary s;
  s.n = pred.size();
  s.brier = brier(pred, y);
  s.n_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  s.calibration = calibration_curve(pred, y, n_bins, min_count);
  if (s.n_pos > 0 && s.n_pos < s.n)
    s.roc = roc(pred, y);
  return s;
}

std::string to_json(const EvalSummary& summary, int indent) {
  nlohmann::ordered_json j;
  j["n"] = summary.n;
  j["n_pos"] = summary.n_pos;
  j["brier"] = summary.brier;
  auto& cal = j["calibration"];
  cal["n_bins"] = summary.calibration.n_bins;
  cal["min_count"] = summary.calibration.min_count;
  cal["max_gap"] = summary.calibration.max_gap;
  cal["bins"] = nlohmann::ordered_json::array();
  for (const auto& b : summary.calibration.bins)
    cal["bins"].push_back({{"lower", b.lower},
                           {"upper", b.upper},
                           {"count", b.count},
                           {"mean_predicted", optional_number(b.mean_predicted)},
                           {"empirical_fraction", optional_number(b.empirical_fraction)}});
  if (summary.roc) {
    j["auc"] = summary.roc->auc;
    j["roc_points"] = summary.roc->points.size();
  } else {
    j["auc"] = nullptr;
  }
  return j.dump(indent) + "\n";
}

std::string calibration_csv(const CalibrationReport& report) {
  std::string out = "lower,upper,count,mean_predicted,empirical_fraction\n";
  for (const auto& b : report.bins) {
    out += format_double(b.lower) + ',' + format_double(b.upper) + ',' + std::to_string(b.count) + ',';
    if (b.mean_predicted)
      out += format_double(*b.mean_predicted) + ',' + format_double(*b.empirical_fraction);
    else
      out += ',';
    out += '\n';
  }
  return out;
}

std::string roc_csv(const RocReport& report) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : report.points)
    out += (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + ',' +
           format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
  return out;
}

} // namespace fmp
