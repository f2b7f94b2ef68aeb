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

#include "fmp/error.hpp"

namespace fmp {

std::string_view to_string(Errc code) {
  switch (code) {
  case Errc::MalformedRecord: return "MalformedRecord";
  case Errc::InvalidField: return "InvalidField";
  case Errc::DomainError: return "DomainError";
  case Errc::EmptySeries: return "EmptySeries";
  case Errc::EmptyDataset: return "EmptyDataset";
  case Errc::InvalidRatio: return "InvalidRatio";
  case Errc::AlreadySubsampled: return "AlreadySubsampled";
  case Errc::InvalidFraction: return "InvalidFraction";
  case Errc::DegenerateData: return "DegenerateData";
  case Errc::NonFinite: return "NonFinite";
  case Errc::ConfigError: return "ConfigError";
  case Errc::SchemaMismatch: return "SchemaMismatch";
  case Errc::IoError: return "IoError";
  case Errc::VersionMismatch: return "VersionMismatch";
  case Errc::CorruptModel: return "CorruptModel";
  case Errc::CorruptSnapshot: return "CorruptSnapshot";
  case Errc::LengthMismatch: return "LengthMismatch";
  case Errc::Empty: return "Empty";
  case Errc::SingleClass: return "SingleClass";
  case Errc::CategoryMismatch: return "CategoryMismatch";
  case Errc::OutOfRange: return "OutOfRange";
  }
  return "Unknown";
}

} // namespace fmp
