/*
 * Copyright (c) 2026, The corrfilt Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corrfilt {

enum class ErrorKind {
  // input
  ZeroVarianceColumn,
  DimensionTooSmall,
  DimensionMismatch,
  ParseError,
  RaggedRows,
  NonNumericCell,
  IndexOutOfRange,
  InvalidArgument,
  // numeric
  ConvergenceFailure,
  NotPositiveDefinite,
  DegenerateReplica,
  UnsupportedNegativeStructure,
  QuadratureFailure,
  NoConvergence,
  MleFailure,
  InsufficientSamples,
  InsufficientReplicas,
  // configuration
  InvalidMu,
  AlphaOutOfRange,
  QBelowOne,
  ConfigError,
};

enum class ErrorCategory { Input, Numeric, Config };

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DegenerateReplica: return "DegenerateReplica";
    case ErrorKind::UnsupportedNegativeStructure: return "UnsupportedNegativeStructure";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::MleFailure: return "MleFailure";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::InsufficientReplicas: return "InsufficientReplicas";
    case ErrorKind::InvalidMu: return "InvalidMu";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::QBelowOne: return "QBelowOne";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVarianceColumn:
    case ErrorKind::DimensionTooSmall:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::ParseError:
    case ErrorKind::RaggedRows:
    case ErrorKind::NonNumericCell:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::InvalidArgument:
      return ErrorCategory::Input;
    case ErrorKind::InvalidMu:
    case ErrorKind::AlphaOutOfRange:
    case ErrorKind::QBelowOne:
    case ErrorKind::ConfigError:
      return ErrorCategory::Config;
    default:
      return ErrorCategory::Numeric;
  }
}

/// Every failure raised by the library. `kind()` identifies the condition;
/// the message carries the location (row, column, replica, filter) when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace corrfilt
