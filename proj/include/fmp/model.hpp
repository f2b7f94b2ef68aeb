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

#include "fmp/dataset.hpp"
#include "fmp/features.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace fmp {

enum class ModelKind : std::uint8_t { logreg = 0, gbdt = 1 };

std::string_view to_string(ModelKind kind);

double sigmoid(double z);

struct LogisticRegression {
  std::array<double, kFeatureCount> weights{};
  double bias = 0;

  double score(std::span<const double> x) const;
};

struct TreeNode {
  std::int32_t feature = -1; // -1 marks a leaf
  double threshold = 0;      // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0; // leaf output, learning rate already applied

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes; // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 7;
  double learning_rate = 0.1;
  double l2_lambda = 1.0;
  int min_samples_leaf = 20;
  unsigned threads = 1; // split search workers; results do not depend on it

  void validate() const;
};

struct GradientBoostedTrees {
  double base_score = 0;
  GbdtConfig config;
  std::vector<RegressionTree> trees;

  double score(std::span<const double> x) const;
};

struct LogRegConfig {
  int epochs = 1000;
  // Step size as a multiple of 1/L, where L bounds the curvature of the
  // standardized problem. Values up to ~2 converge; far larger ones diverge.
  double learning_rate = 1.0;
  double l2 = 0.0;
};

struct ModelMetadata {
  std::uint64_t seed = 0;
  double alpha = EwmaParams{}.alpha;
  int history_days = 7;
  int prediction_days = 1;
  Category target = Category::scan;
  std::uint32_t schema_hash = 0;
};

struct TrainedModel {
  std::variant<LogisticRegression, GradientBoostedTrees> estimator;
  double beta = 1.0;
  bool trained_on_subsample = false;
  ModelMetadata meta;

  ModelKind kind() const {
    return std::holds_alternative<LogisticRegression>(estimator) ? ModelKind::logreg
                                                                 : ModelKind::gbdt;
  }
};

/// Mean log-loss of a logistic model over samples, with params = 58 weights
/// followed by the bias. When `gradient` is non-empty (size 59) it receives
/// the analytic gradient.
double logistic_loss(std::span<const double> params, std::span<const Sample> samples,
                     std::span<double> gradient = {});

/// Mean log-loss of arbitrary probabilities (clamped away from 0 and 1).
double log_loss(std::span<const double> prob, std::span<const std::uint8_t> y);

/// Full-batch gradient descent on standardized features. `loss_trace`, when
/// given, receives the training loss before the first and after every epoch.
TrainedModel train_logreg(const Dataset& train, const LogRegConfig& config = {},
                          std::uint64_t seed = 0, std::vector<double>* loss_trace = nullptr);

/// Newton boosting on log-loss with exact greedy splits. `loss_trace` receives
/// the training loss before the first and after every tree.
TrainedModel train_gbdt(const Dataset& train, const GbdtConfig& config = {},
                        std::uint64_t seed = 0, std::vector<double>* loss_trace = nullptr);

/// Estimator output before recalibration.
double predict_raw(const TrainedModel& model, std::span<const double> x);

/// Undoes the class-prior shift of majority subsampling:
/// beta*y / (beta*y - y + 1).
double recalibrate(double y_s, double beta);

/// The FMP score: recalibrated output for models trained on subsampled data.
double fmp_score(const TrainedModel& model, std::span<const double> x);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace fmp
