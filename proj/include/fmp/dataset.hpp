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

#pragma once

#include "fmp/alerts.hpp"
#include "fmp/features.hpp"
#include "fmp/store.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace fmp {

struct Sample {
  Ipv4 ip;
  Timestamp t0;
  FeatureVector x{};
  std::uint8_t y = 0;
};

struct Dataset {
  Category target = Category::scan;
  std::vector<Sample> samples;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  // Positive-to-negative ratio of the pool before any subsampling. Carried
  // through subsampling untouched; used to recalibrate model outputs.
  double beta = 0;
  bool subsampled = false;
  std::uint64_t seed = 0;
  double alpha = EwmaParams{}.alpha;
  int history_days = 7;
  int prediction_days = 1;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double positive_fraction() const {
    return samples.empty() ? 0.0 : static_cast<double>(n_pos) / static_cast<double>(size());
  }

  /// Recomputes n_pos/n_neg from the samples (beta untouched).
  void recount();
};

/// n_pos / n_neg; +infinity when there are no negatives.
double class_ratio(std::size_t n_pos, std::size_t n_neg);

/// 1 iff the IP has an alert of `target` within (t0, t0 + w_p days].
std::uint8_t label(const AlertStore& store, Ipv4 ip, const WindowConfig& window,
                   Category target);

struct BuildOptions {
  int history_days = 7;
  int prediction_days = 1;
  EwmaParams ewma{};
  unsigned threads = 0; // 0 = hardware concurrency
};

/// One sample per (ip, t0) where the IP has at least one `target` alert in the
/// history window. Samples are ordered by (t0, ip).
Dataset build(const AlertStore& store, std::span<const Timestamp> prediction_times,
              Category target, const BuildOptions& options = {});

/// Keeps every positive and a uniform random subset of round(ratio * n_pos)
/// negatives (capped at n_neg). Relative sample order is preserved.
Dataset subsample_majority(const Dataset& ds, double ratio = 1.0, std::uint64_t seed = 0);

/// Random partition into (train, test); each side's beta is its own class ratio.
/// Must run before subsampling so the test side keeps the original distribution.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed = 0);

/// Sets the given feature columns to zero in every sample (feature ablation).
void zero_features(Dataset& ds, std::span<const std::size_t> indices);

/// features.csv (ip, t0, 58 named columns, label) plus dataset.json sidecar.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

} // namespace fmp
