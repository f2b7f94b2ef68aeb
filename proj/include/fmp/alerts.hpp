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

#include "fmp/ipv4.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fmp {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr Seconds kDay{86400};

/// Parses RFC 3339 ("2017-09-01T00:00:00Z", optional fractional seconds and
/// numeric offset). Fractions are truncated to whole seconds.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Always renders UTC with a trailing 'Z' and no fraction.
std::string format_rfc3339(Timestamp t);

enum class Category : std::uint8_t { scan = 0, access = 1 };

inline constexpr std::size_t kCategoryCount = 2;
inline constexpr Category kCategories[kCategoryCount] = {Category::scan, Category::access};

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view text);

constexpr std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

struct Alert {
  Timestamp t;
  Ipv4 source;
  Category category = Category::scan;
  std::uint64_t volume = 0;
  std::string detector;

  auto operator<=>(const Alert&) const = default;
};

/// One line of the interchange format before multi-source expansion.
struct AlertRecord {
  Timestamp t;
  std::vector<Ipv4> sources;
  Category category = Category::scan;
  std::uint64_t volume = 0;
  std::string detector;
};

/// Prediction time plus history/prediction window lengths in whole days.
/// History covers [t0 - w_h days, t0); prediction covers (t0, t0 + w_p days].
class WindowConfig {
public:
  WindowConfig() = default;
  WindowConfig(Timestamp t0, int history_days = 7, int prediction_days = 1);

  Timestamp t0() const { return t0_; }
  int history_days() const { return history_days_; }
  int prediction_days() const { return prediction_days_; }

  Timestamp history_begin() const { return t0_ - history_days_ * kDay; }
  Timestamp prediction_end() const { return t0_ + prediction_days_ * kDay; }

  bool in_history(Timestamp t) const { return t >= history_begin() && t < t0_; }
  bool in_prediction(Timestamp t) const { return t > t0_ && t <= prediction_end(); }

  WindowConfig at(Timestamp t0) const { return {t0, history_days_, prediction_days_}; }

private:
  Timestamp t0_{};
  int history_days_ = 7;
  int prediction_days_ = 1;
};

/// Returns std::nullopt for blank lines and '#' comments.
std::optional<AlertRecord> parse_record(std::string_view line);

/// Parses a single-source record. A `srcs` array with more than one address is
/// rejected here; use parse_record + expand_multisource for those.
Alert parse_alert(std::string_view line);

/// Splits one multi-source record into one alert per source. Each gets
/// floor(v/k) volume and the first (v mod k) sources one extra unit.
std::vector<Alert> expand_multisource(const AlertRecord& record);

std::string render_alert(const Alert& alert);

struct StreamReadStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t alerts = 0;
  std::size_t rejected = 0;
  std::vector<std::string> first_errors; // capped at a handful
};

/// Reads an alert stream, expanding multi-source records. In strict mode the
/// first bad line throws; otherwise bad lines are counted and skipped.
StreamReadStats read_alerts(std::istream& in, const std::function<void(Alert&&)>& sink,
                            bool strict = false);

} // namespace fmp
