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

#include "fmp/model.hpp"

#include "fmp/binary_io.hpp"
#include "fmp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace fmp {

namespace {

constexpr std::string_view kModelMagic = "FMPM";
constexpr std::uint8_t kModelVersion = 1;
constexpr double kMinSplitGain = 1e-12;

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void require_two_classes(const Dataset& train) {
  if (train.samples.empty())
    fail(Errc::DegenerateData, "training set is empty");
  if (train.n_pos == 0 || train.n_neg == 0)
    fail(Errc::DegenerateData, "training set contains a single class");
}

ModelMetadata metadata_for(const Dataset& train, std::uint64_t seed) {
  ModelMetadata meta;
  meta.seed = seed;
  meta.alpha = train.alpha;
  meta.history_days = train.history_days;
  meta.prediction_days = train.prediction_days;
  meta.target = train.target;
  meta.schema_hash = feature_schema_hash();
  return meta;
}

double mean_log_loss(std::span<const double> score, std::span<const std::uint8_t> y) {
  double total = 0;
  for (std::size_t i = 0; i < score.size(); ++i)
    total += softplus(score[i]) - (y[i] ? score[i] : 0.0);
  return total / static_cast<double>(score.size());
}

// ---------------------------------------------------------------------------
// Tree growing

struct SplitCandidate {
  double gain = 0;
  std::int32_t feature = -1;
  double threshold = 0;
};

struct NodeStats {
  double g = 0;
  double h = 0;
  std::size_t count = 0;
};

class TreeGrower {
public:
  TreeGrower(const std::vector<double>& columns, const std::vector<std::vector<std::uint32_t>>& order,
             std::size_t n, const GbdtConfig& config)
      : columns_(columns), order_(order), n_(n), config_(config), node_of_(n) {}

  // Grows one tree for the given gradients; afterwards leaf_of(i) names the
  // leaf each training sample landed in.
  RegressionTree grow(const std::vector<double>& grad, const std::vector<double>& hess) {
    RegressionTree tree;
    stats_.clear();
    std::fill(node_of_.begin(), node_of_.end(), 0);
    tree.nodes.emplace_back();
    NodeStats root;
    for (std::size_t i = 0; i < n_; ++i) {
      root.g += grad[i];
      root.h += hess[i];
    }
    root.count = n_;
    stats_.push_back(root);

    std::vector<std::int32_t> frontier{0};
    for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
      std::vector<std::int32_t> slot_of(tree.nodes.size(), -1);
      std::vector<std::int32_t> active;
      for (auto node : frontier)
        if (stats_[static_cast<std::size_t>(node)].count >=
            2 * static_cast<std::size_t>(config_.min_samples_leaf)) {
          slot_of[static_cast<std::size_t>(node)] = static_cast<std::int32_t>(active.size());
          active.push_back(node);
        }
      if (active.empty())
        break;

      auto best = find_splits(grad, hess, slot_of, active);

      std::vector<std::int32_t> next;
      std::vector<std::int32_t> split_slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < active.size(); ++s) {
        const auto& cand = best[s];
        if (cand.feature < 0 || !(cand.gain > kMinSplitGain))
          continue;
        auto node = static_cast<std::size_t>(active[s]);
        auto left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats_.emplace_back();
        stats_.emplace_back();
        tree.nodes[node].feature = cand.feature;
        tree.nodes[node].threshold = cand.threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = left + 1;
        split_slot_of[node] = 1;
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty())
        break;
      split_slot_of.resize(tree.nodes.size(), -1);
      for (std::size_t i = 0; i < n_; ++i) {
        auto node = static_cast<std::size_t>(node_of_[i]);
        if (split_slot_of[node] < 0)
          continue;
        const auto& nd = tree.nodes[node];
        double v = columns_[static_cast<std::size_t>(nd.feature) * n_ + i];
        auto child = v <= nd.threshold ? nd.left : nd.right;
        node_of_[i] = child;
        auto& st = stats_[static_cast<std::size_t>(child)];
        st.g += grad[i];
        st.h += hess[i];
        ++st.count;
      }
      frontier = std::move(next);
    }

    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      auto& nd = tree.nodes[k];
      if (nd.is_leaf())
        nd.value = -config_.learning_rate * stats_[k].g / (stats_[k].h + config_.l2_lambda);
    }
    return tree;
  }

  std::int32_t leaf_of(std::size_t i) const { return node_of_[i]; }

private:
  // Best split per active node. Each feature is scanned once in presorted
  // order, accumulating left-side sums for every active node at the same
  // time. Candidates are reduced in feature order with a strict comparison,
  // so the outcome does not depend on how features are spread over threads.
  std::vector<SplitCandidate> find_splits(const std::vector<double>& grad,
                                          const std::vector<double>& hess,
                                          const std::vector<std::int32_t>& slot_of,
                                          const std::vector<std::int32_t>& active) const {
    const std::size_t n_slots = active.size();
    std::vector<SplitCandidate> per_feature(kFeatureCount * n_slots);

    auto scan = [&](std::size_t f_begin, std::size_t f_end) {
      std::vector<double> gl(n_slots), hl(n_slots), last(n_slots);
      std::vector<std::size_t> nl(n_slots);
      for (std::size_t f = f_begin; f < f_end; ++f) {
        std::fill(gl.begin(), gl.end(), 0.0);
        std::fill(hl.begin(), hl.end(), 0.0);
        std::fill(nl.begin(), nl.end(), 0);
        const double* col = columns_.data() + f * n_;
        SplitCandidate* best = per_feature.data() + f * n_slots;
        for (auto idx : order_[f]) {
          auto slot = slot_of[static_cast<std::size_t>(node_of_[idx])];
          if (slot < 0)
            continue;
          auto s = static_cast<std::size_t>(slot);
          const double v = col[idx];
          if (nl[s] > 0 && v > last[s]) {
            const auto& st = stats_[static_cast<std::size_t>(active[s])];
            const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
            if (nl[s] >= min_leaf && st.count - nl[s] >= min_leaf) {
              const double lambda = config_.l2_lambda;
              const double gr = st.g - gl[s];
              const double hr = st.h - hl[s];
              const double gain = gl[s] * gl[s] / (hl[s] + lambda) + gr * gr / (hr + lambda) -
                                  st.g * st.g / (st.h + lambda);
              if (gain > best[s].gain) {
                double mid = last[s] + (v - last[s]) / 2;
                if (!(mid < v))
                  mid = last[s];
                best[s] = {gain, static_cast<std::int32_t>(f), mid};
              }
            }
          }
          gl[s] += grad[idx];
          hl[s] += hess[idx];
          ++nl[s];
          last[s] = v;
        }
      }
    };

    const std::size_t workers = std::clamp<std::size_t>(config_.threads, 1, kFeatureCount);
    if (workers == 1) {
      scan(0, kFeatureCount);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (kFeatureCount + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        auto b = w * chunk, e = std::min(kFeatureCount, b + chunk);
        if (b < e)
          pool.emplace_back(scan, b, e);
      }
      for (auto& t : pool)
        t.join();
    }

    std::vector<SplitCandidate> best(n_slots);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      for (std::size_t s = 0; s < n_slots; ++s)
        if (per_feature[f * n_slots + s].gain > best[s].gain)
          best[s] = per_feature[f * n_slots + s];
    return best;
  }

  const std::vector<double>& columns_;
  const std::vector<std::vector<std::uint32_t>>& order_;
  std::size_t n_;
  const GbdtConfig& config_;
  std::vector<std::int32_t> node_of_;
  std::vector<NodeStats> stats_;
};

// ---------------------------------------------------------------------------
// Serialization

void write_tree(BinaryWriter& w, const RegressionTree& tree) {
  w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
  for (const auto& nd : tree.nodes) {
    w.i32(nd.feature);
    w.f64(nd.threshold);
    w.i32(nd.left);
    w.i32(nd.right);
    w.f64(nd.value);
  }
}

RegressionTree read_tree(BinaryReader& r) {
  RegressionTree tree;
  auto n = r.u32();
  if (n == 0 || n > r.remaining())
    r.corrupt("bad tree node count");
  tree.nodes.resize(n);
  for (auto& nd : tree.nodes) {
    nd.feature = r.i32();
    nd.threshold = r.f64();
    nd.left = r.i32();
    nd.right = r.i32();
    nd.value = r.f64();
  }
  // Children must point forward so traversal always terminates.
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto& nd = tree.nodes[k];
    if (nd.is_leaf())
      continue;
    if (nd.feature >= static_cast<std::int32_t>(kFeatureCount) || nd.left <= static_cast<std::int32_t>(k) ||
        nd.right <= static_cast<std::int32_t>(k) || nd.left >= static_cast<std::int32_t>(n) ||
        nd.right >= static_cast<std::int32_t>(n))
      r.corrupt("malformed tree node");
  }
  return tree;
}

} // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::logreg ? "logreg" : "gbdt";
}

double sigmoid(double z) {
  if (z >= 0)
    return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LogisticRegression::score(std::span<const double> x) const {
  double z = bias;
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    z += weights[j] * x[j];
  return z;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& nd = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                                     ? nd.left
                                     : nd.right);
  }
  return nodes[k].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    deepest = std::max(deepest, d[k]);
    if (!nodes[k].is_leaf()) {
      d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
    }
  }
  return deepest;
}

void GbdtConfig::validate() const {
  if (n_trees < 1)
    fail(Errc::ConfigError, "n_trees must be >= 1");
  if (max_depth < 1)
    fail(Errc::ConfigError, "max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    fail(Errc::ConfigError, "learning_rate must lie in (0, 1]");
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda))
    fail(Errc::ConfigError, "l2_lambda must be >= 0");
  if (min_samples_leaf < 1)
    fail(Errc::ConfigError, "min_samples_leaf must be >= 1");
}

double GradientBoostedTrees::score(std::span<const double> x) const {
  double z = base_score;
  for (const auto& t : trees)
    z += t.predict(x);
  return z;
}

double logistic_loss(std::span<const double> params, std::span<const Sample> samples,
                     std::span<double> gradient) {
  if (params.size() != kFeatureCount + 1)
    fail(Errc::LengthMismatch, "expected 58 weights plus a bias");
  if (samples.empty())
    fail(Errc::Empty, "no samples");
  const bool want_grad = !gradient.empty();
  if (want_grad) {
    if (gradient.size() != kFeatureCount + 1)
      fail(Errc::LengthMismatch, "gradient buffer must hold 59 values");
    std::fill(gradient.begin(), gradient.end(), 0.0);
  }
  double total = 0;
  for (const auto& s : samples) {
    double z = params[kFeatureCount];
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      z += params[j] * s.x[j];
    total += softplus(z) - (s.y ? z : 0.0);
    if (want_grad) {
      const double r = sigmoid(z) - s.y;
      for (std::size_t j = 0; j < kFeatureCount; ++j)
        gradient[j] += r * s.x[j];
      gradient[kFeatureCount] += r;
    }
  }
  const double n = static_cast<double>(samples.size());
  if (want_grad)
    for (auto& g : gradient)
      g /= n;
  return total / n;
}

double log_loss(std::span<const double> prob, std::span<const std::uint8_t> y) {
  if (prob.size() != y.size())
    fail(Errc::LengthMismatch, "predictions and labels differ in length");
  if (prob.empty())
    fail(Errc::Empty, "no predictions");
  constexpr double eps = 1e-15;
  double total = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(prob[i], eps, 1.0 - eps);
    total -= y[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(prob.size());
}

TrainedModel train_logreg(const Dataset& train, const LogRegConfig& config, std::uint64_t seed,
                          std::vector<double>* loss_trace) {
  require_two_classes(train);
  if (config.epochs < 1 || !(config.learning_rate > 0.0) || !(config.l2 >= 0.0))
    fail(Errc::ConfigError, "logreg needs epochs >= 1, learning_rate > 0, l2 >= 0");

  constexpr std::size_t d = kFeatureCount;
  const std::size_t n = train.samples.size();
  const double nd = static_cast<double>(n);

  std::array<double, d> mean{}, scale{};
  for (const auto& s : train.samples)
    for (std::size_t j = 0; j < d; ++j)
      mean[j] += s.x[j];
  for (auto& m : mean)
    m /= nd;
  for (const auto& s : train.samples)
    for (std::size_t j = 0; j < d; ++j)
      scale[j] += (s.x[j] - mean[j]) * (s.x[j] - mean[j]);
  for (auto& v : scale) {
    v = std::sqrt(v / nd);
    if (v < 1e-12)
      v = 1.0;
  }

  std::vector<double> z(n * d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      z[i * d + j] = (train.samples[i].x[j] - mean[j]) / scale[j];
    y[i] = train.samples[i].y;
  }

  // Power iteration for the top eigenvalue of [Z 1]^T [Z 1] / n; the loss
  // Hessian is bounded by a quarter of it.
  std::vector<double> v(d + 1, 1.0 / std::sqrt(static_cast<double>(d + 1)));
  double lambda_max = 1.0;
  std::vector<double> av(n), mv(d + 1);
  for (int it = 0; it < 100; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = v[d];
      for (std::size_t j = 0; j < d; ++j)
        acc += z[i * d + j] * v[j];
      av[i] = acc;
    }
    std::fill(mv.begin(), mv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        mv[j] += z[i * d + j] * av[i];
      mv[d] += av[i];
    }
    double norm = 0;
    for (auto& x : mv) {
      x /= nd;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0)
      break;
    lambda_max = norm;
    for (std::size_t j = 0; j <= d; ++j)
      v[j] = mv[j] / norm;
  }
  const double lipschitz = 0.25 * lambda_max * 1.05 + config.l2;
  const double step = config.learning_rate / lipschitz;

  // theta holds the standardized weights followed by the bias.
  using Params = std::array<double, d + 1>;
  auto evaluate = [&](const Params& theta, Params* grad) {
    double loss = 0;
    if (grad)
      grad->fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = z.data() + i * d;
      double s = theta[d];
      for (std::size_t j = 0; j < d; ++j)
        s += theta[j] * row[j];
      loss += softplus(s) - y[i] * s;
      if (grad) {
        const double r = sigmoid(s) - y[i];
        for (std::size_t j = 0; j < d; ++j)
          (*grad)[j] += r * row[j];
        (*grad)[d] += r;
      }
    }
    double reg = 0;
    for (std::size_t j = 0; j < d; ++j)
      reg += theta[j] * theta[j];
    loss = loss / nd + 0.5 * config.l2 * reg;
    if (grad) {
      for (auto& g : *grad)
        g /= nd;
      for (std::size_t j = 0; j < d; ++j)
        (*grad)[j] += config.l2 * theta[j];
    }
    return loss;
  };
  auto diverged = [] {
    fail(Errc::NonFinite, "logistic regression diverged; lower the learning rate");
  };

  // Nesterov-accelerated gradient descent with function-value restart: when a
  // momentum step raises the loss, momentum is dropped and a plain gradient
  // step is taken instead, so the loss never increases between epochs.
  Params x{}, x_prev{}, probe{}, grad{}, next{};
  double fx = evaluate(x, nullptr);
  int since_restart = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (loss_trace)
      loss_trace->push_back(fx);
    const double mom = static_cast<double>(since_restart) / (since_restart + 3);
    for (std::size_t j = 0; j <= d; ++j)
      probe[j] = x[j] + mom * (x[j] - x_prev[j]);
    evaluate(probe, &grad);
    for (std::size_t j = 0; j <= d; ++j)
      next[j] = probe[j] - step * grad[j];
    double fnext = evaluate(next, nullptr);
    ++since_restart;
    if (!(fnext <= fx) && mom > 0) {
      since_restart = 0;
      evaluate(x, &grad);
      for (std::size_t j = 0; j <= d; ++j)
        next[j] = x[j] - step * grad[j];
      fnext = evaluate(next, nullptr);
    }
    if (!std::isfinite(fnext) || fnext > fx * (1 + 1e-12) + 1e-15)
      diverged();
    x_prev = x;
    x = next;
    fx = fnext;
  }
  if (loss_trace)
    loss_trace->push_back(fx);
  const double b = x[d];
  std::array<double, d> w{};
  std::copy(x.begin(), x.begin() + d, w.begin());

  LogisticRegression model;
  model.bias = b;
  for (std::size_t j = 0; j < d; ++j) {
    model.weights[j] = w[j] / scale[j];
    model.bias -= w[j] * mean[j] / scale[j];
    if (!std::isfinite(model.weights[j]))
      fail(Errc::NonFinite, "logistic regression diverged; lower the learning rate");
  }

  TrainedModel out;
  out.estimator = model;
  out.beta = train.beta;
  out.trained_on_subsample = train.subsampled;
  out.meta = metadata_for(train, seed);
  return out;
}

TrainedModel train_gbdt(const Dataset& train, const GbdtConfig& config, std::uint64_t seed,
                        std::vector<double>* loss_trace) {
  config.validate();
  require_two_classes(train);

  const std::size_t n = train.samples.size();
  std::vector<double> columns(kFeatureCount * n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      columns[f * n + i] = train.samples[i].x[f];
    y[i] = train.samples[i].y;
  }
  std::vector<std::vector<std::uint32_t>> order(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto& o = order[f];
    o.resize(n);
    std::iota(o.begin(), o.end(), 0u);
    const double* col = columns.data() + f * n;
    std::stable_sort(o.begin(), o.end(),
                     [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }

  GradientBoostedTrees model;
  model.config = config;
  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  if (loss_trace)
    loss_trace->push_back(mean_log_loss(score, y));

  TreeGrower grower(columns, order, n, config);
  for (int t = 0; t < config.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = p - y[i];
      hess[i] = p * (1.0 - p);
    }
    auto tree = grower.grow(grad, hess);
    for (std::size_t i = 0; i < n; ++i)
      score[i] += tree.nodes[static_cast<std::size_t>(grower.leaf_of(i))].value;
    model.trees.push_back(std::move(tree));
    if (loss_trace)
      loss_trace->push_back(mean_log_loss(score, y));
  }

  TrainedModel out;
  out.estimator = std::move(model);
  out.beta = train.beta;
  out.trained_on_subsample = train.subsampled;
  out.meta = metadata_for(train, seed);
  return out;
}

double predict_raw(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != kFeatureCount || model.meta.schema_hash != feature_schema_hash())
    fail(Errc::SchemaMismatch, "feature vector does not match the model's feature layout");
  return std::visit([&](const auto& est) { return sigmoid(est.score(x)); }, model.estimator);
}

double recalibrate(double y_s, double beta) {
  if (!(y_s >= 0.0 && y_s <= 1.0))
    fail(Errc::DomainError, "recalibrate expects a probability in [0, 1]");
  if (!(beta > 0.0) || !std::isfinite(beta))
    fail(Errc::DomainError, "recalibrate expects a finite beta > 0");
  // beta*y / (beta*y - y + 1), grouped so that y = 1 maps to exactly 1 and the
  // result never rounds above 1.
  const double num = beta * y_s;
  return num / (num + (1.0 - y_s));
}

double fmp_score(const TrainedModel& model, std::span<const double> x) {
  const double raw = predict_raw(model, x);
  return model.trained_on_subsample ? recalibrate(raw, model.beta) : raw;
}

// Model file layout (little-endian), framed by binary_io:
//   "FMPM" u8:version
//   u8:kind(0 logreg, 1 gbdt) u8:target_category u8:trained_on_subsample
//   f64:beta u64:seed f64:alpha u32:w_h u32:w_p u32:feature_schema_hash
//   logreg: u32:n_features f64[n]:weights f64:bias
//   gbdt:   f64:base_score f64:learning_rate u32:max_depth f64:l2_lambda
//           u32:min_samples_leaf u32:n_trees_configured u32:n_trees
//           { u32:n_nodes { i32:feature f64:threshold i32:left i32:right f64:value } }
//   u32:crc32
void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  BinaryWriter w;
  w.raw(kModelMagic);
  w.u8(kModelVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u8(static_cast<std::uint8_t>(model.meta.target));
  w.u8(model.trained_on_subsample ? 1 : 0);
  w.f64(model.beta);
  w.u64(model.meta.seed);
  w.f64(model.meta.alpha);
  w.u32(static_cast<std::uint32_t>(model.meta.history_days));
  w.u32(static_cast<std::uint32_t>(model.meta.prediction_days));
  w.u32(model.meta.schema_hash);
  if (const auto* lr = std::get_if<LogisticRegression>(&model.estimator)) {
    w.u32(static_cast<std::uint32_t>(kFeatureCount));
    for (double v : lr->weights)
      w.f64(v);
    w.f64(lr->bias);
  } else {
    const auto& gb = std::get<GradientBoostedTrees>(model.estimator);
    w.f64(gb.base_score);
    w.f64(gb.config.learning_rate);
    w.u32(static_cast<std::uint32_t>(gb.config.max_depth));
    w.f64(gb.config.l2_lambda);
    w.u32(static_cast<std::uint32_t>(gb.config.min_samples_leaf));
    w.u32(static_cast<std::uint32_t>(gb.config.n_trees));
    w.u32(static_cast<std::uint32_t>(gb.trees.size()));
    for (const auto& t : gb.trees)
      write_tree(w, t);
  }
  w.finish_to_file(path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  auto payload = open_container(path, kModelMagic, kModelVersion, Errc::CorruptModel);
  BinaryReader r(payload, Errc::CorruptModel);
  TrainedModel model;
  auto kind = r.u8();
  auto target = r.u8();
  if (kind > 1 || target >= kCategoryCount)
    r.corrupt("bad model kind or category");
  model.meta.target = static_cast<Category>(target);
  model.trained_on_subsample = r.u8() != 0;
  model.beta = r.f64();
  model.meta.seed = r.u64();
  model.meta.alpha = r.f64();
  model.meta.history_days = static_cast<int>(r.u32());
  model.meta.prediction_days = static_cast<int>(r.u32());
  model.meta.schema_hash = r.u32();
  if (kind == static_cast<std::uint8_t>(ModelKind::logreg)) {
    if (r.u32() != kFeatureCount)
      fail(Errc::SchemaMismatch, "model has a different number of features");
    LogisticRegression lr;
    for (auto& v : lr.weights)
      v = r.f64();
    lr.bias = r.f64();
    model.estimator = lr;
  } else {
    GradientBoostedTrees gb;
    gb.base_score = r.f64();
    gb.config.learning_rate = r.f64();
    gb.config.max_depth = static_cast<int>(r.u32());
    gb.config.l2_lambda = r.f64();
    gb.config.min_samples_leaf = static_cast<int>(r.u32());
    gb.config.n_trees = static_cast<int>(r.u32());
    auto n_trees = r.u32();
    if (n_trees > static_cast<std::uint32_t>(gb.config.n_trees))
      r.corrupt("more trees than configured");
    for (std::uint32_t t = 0; t < n_trees; ++t)
      gb.trees.push_back(read_tree(r));
    model.estimator = std::move(gb);
  }
  if (!r.at_end())
    r.corrupt("trailing bytes in model file");
  return model;
}

} // namespace fmp
