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

// Synthetic alert streams with known per-day attack probabilities.
//
// Day d covers [start + d days, start + (d+1) days). Alerts fall strictly
// inside a day, so the prediction window of t0 = start + d days is exactly
// day d. The ground truth for (ip, d) is the probability that the IP attacks
// on day d given every latent state up to the end of day d-1.

#include "fmp/alerts.hpp"
#include "fmp/blacklist.hpp"
#include "fmp/ipv4.hpp"
#include "fmp/store.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace fmp {

enum class ActorKind {
  persistent,          // attacks each day with probability p
  periodic,            // attacks with probability p on every k-th day
  oneshot,             // a single burst on one day, silent afterwards
  churning,            // probability p during a limited lifetime, then 0
  neighborhood_member, // shares an on/off state with the rest of its /24
  cross_category,      // scans; access is likelier the day after a scan
  noise,               // uniform background of unrelated reports
};

std::string_view to_string(ActorKind kind);

struct UniformRange {
  double lo = 0;
  double hi = 0;
};

struct IntRange {
  int lo = 1;
  int hi = 1;
};

struct VolumeDist {
  bool geometric = false;
  double param = 1; // constant volume, or the geometric success probability
};

struct ActorGroup {
  ActorKind kind = ActorKind::persistent;
  std::size_t count = 0;
  std::vector<Category> categories{Category::scan};
  UniformRange p{0.5, 0.5};
  IntRange alerts_per_day{1, 1};
  VolumeDist volume;
  int detectors = 1;
  IntRange period_days{2, 7};   // periodic
  IntRange lifetime_days{1, 7}; // churning
  double coupling = 0.8;        // cross_category: access probability after a scan day
  UniformRange base_access{0, 0};
  // Overrides EnrichmentSpec::blacklist_rate_actor for this group when >= 0.
  double blacklist_rate = -1;
};

struct NeighborhoodSpec {
  std::size_t count = 0;
  IntRange members{8, 16};
  std::vector<Category> categories{Category::scan};
  UniformRange p{0.5, 0.5}; // per-member attack probability while the /24 is active
  double p_stay = 0.8;      // active -> active
  double p_wake = 0.1;      // idle -> active
  IntRange alerts_per_day{1, 1};
  VolumeDist volume;
  int detectors = 1;
};

struct NoiseSpec {
  std::size_t pool = 0;
  double daily_prob = 0;
  std::vector<Category> categories{Category::scan, Category::access};
};

struct EnrichmentSpec {
  double blacklist_rate_actor = 0.3;
  double blacklist_rate_noise = 0.02;
  double dynamic_rate_actor = 0.1;
  double dynamic_rate_noise = 0.3;
  double no_ptr_rate = 0.3;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  Timestamp start{};
  int n_days = 30;
  int first_t0_day = 7;
  int detector_pool = 8;
  std::vector<ActorGroup> actors;
  std::vector<NeighborhoodSpec> neighborhoods;
  NoiseSpec noise;
  EnrichmentSpec enrichment;

  void validate() const;

  static ScenarioConfig from_json(std::string_view text);
  static ScenarioConfig load(const std::filesystem::path& path);
};

struct TruthRow {
  Ipv4 ip;
  int day = 0;
  std::array<double, kCategoryCount> p{};
};

struct ActorInfo {
  Ipv4 ip;
  ActorKind kind = ActorKind::persistent;
  std::size_t group = 0;
};

struct MapEntry {
  Cidr cidr;
  std::uint32_t asn = 0;
  std::string country;
};

struct Simulation {
  ScenarioConfig config;
  std::vector<Alert> alerts; // time-ordered
  std::vector<TruthRow> truth; // ordered by (day, ip)
  std::vector<ActorInfo> actors;
  std::vector<EnrichmentRecord> enrichment;
  std::vector<MapEntry> maps;
  std::vector<Timestamp> prediction_times;

  ContextMaps context_maps() const;
  /// Alerts, enrichment and maps loaded into a fresh store.
  AlertStore make_store() const;
};

Simulation generate(const ScenarioConfig& config);

/// alerts.jsonl, truth.csv, actors.csv, enrichment.jsonl, t0.txt, maps/*.csv.
void write_simulation(const Simulation& sim, const std::filesystem::path& dir);

std::string render_enrichment(const EnrichmentRecord& rec);

/// Per-(ip, day) attack probabilities; rows absent from the file are 0.
class GroundTruth {
public:
  GroundTruth() = default;
  GroundTruth(Timestamp start, int n_days, std::vector<TruthRow> rows);

  static GroundTruth from(const Simulation& sim);
  static GroundTruth load(const std::filesystem::path& truth_csv);

  Timestamp start() const { return start_; }
  int n_days() const { return n_days_; }

  /// Day index whose prediction window starts at t0; OutOfRange otherwise.
  int day_of(Timestamp t0) const;

  double probability(Ipv4 ip, int day, Category category) const;

  /// Every IP with a truth row for the day of t0, ascending by IP.
  std::vector<ScoredIp> oracle_scores(Timestamp t0, Category category) const;

  const std::vector<TruthRow>& rows() const { return rows_; }

private:
  Timestamp start_{};
  int n_days_ = 0;
  std::vector<TruthRow> rows_;
  std::vector<std::unordered_map<Ipv4, std::size_t>> by_day_;
};

std::string truth_csv(const Simulation& sim);

} // namespace fmp
