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

#include <stdexcept>
#include <string>
#include <string_view>

namespace fmp {

enum class Errc {
  MalformedRecord,
  InvalidField,
  DomainError,
  EmptySeries,
  EmptyDataset,
  InvalidRatio,
  AlreadySubsampled,
  InvalidFraction,
  DegenerateData,
  NonFinite,
  ConfigError,
  SchemaMismatch,
  IoError,
  VersionMismatch,
  CorruptModel,
  CorruptSnapshot,
  LengthMismatch,
  Empty,
  SingleClass,
  CategoryMismatch,
  OutOfRange,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

} // namespace fmp
