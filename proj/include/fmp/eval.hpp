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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fmp {

double brier(std::span<const double> pred, std::span<const std::uint8_t> y);

struct CalibrationBin {
  double lower = 0;
  double upper = 0;
  std::size_t count = 0;
  // Unset for empty bins.
  std::optional<double> mean_predicted;
  std::optional<double> empirical_fraction;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  std::size_t n_bins = 0;
  std::size_t min_count = 0;
  // Largest |mean_predicted - empirical_fraction| over bins holding at least
  // min_count samples; 0 when no bin qualifies.
  double max_gap = 0;
};

/// Equal-width bins over [0, 1]; a prediction of exactly 1 falls in the last bin.
CalibrationReport calibration_curve(std::span<const double> pred, std::span<const std::uint8_t> y,
                                    std::size_t n_bins = 10, std::size_t min_count = 50);

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  double threshold = 0; // +inf for the (0, 0) point
};

struct RocReport {
  std::vector<RocPoint> points; // from (0,0) to (1,1), thresholds descending
  double auc = 0;
};

/// One point per distinct prediction value; tied predictions move the curve
/// diagonally, which counts each positive-negative tie as one half.
RocReport roc(std::span<const double> pred, std::span<const std::uint8_t> y);

struct EvalSummary {
  std::size_t n = 0;
  std::size_t n_pos = 0;
  double brier = 0;
  CalibrationReport calibration;
  std::optional<RocReport> roc; // absent when only one class is present
};

EvalSummary evaluate(std::span<const double> pred, std::span<const std::uint8_t> y,
                     std::size_t n_bins = 10, std::size_t min_count = 50);

std::string to_json(const EvalSummary& summary, int indent = 2);
/// lower,upper,count,mean_predicted,empirical_fraction (empty fields for empty bins).
std::string calibration_csv(const CalibrationReport& report);
/// threshold,fpr,tpr
std::string roc_csv(const RocReport& report);

} // namespace fmp
