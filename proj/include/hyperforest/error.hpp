#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperforest {

enum class ErrorCode {
  // record curation
  MissingField,
  BadCategoricalCode,
  NegativeSpending,
  BadWeek,
  BadDate,
  // file handling
  FileNotFound,
  UnreadableHeader,
  ParseError,
  RejectRateExceeded,
  // conversion / features
  MissingYearFactor,
  DegenerateBuyer,
  MissingAggregate,
  // learning
  ClassAbsent,
  ImbalanceInverted,
  EmptyNode,
  SchemaMismatch,
  NoOobRows,
  ThresholdUnset,
  // evaluation
  LengthMismatch,
  // persistence
  ChecksumFailure,
  VersionMismatch,
  ModelFormat,
  // driver
  ConfigError,
  InvariantViolation,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::BadCategoricalCode: return "BadCategoricalCode";
    case ErrorCode::NegativeSpending: return "NegativeSpending";
    case ErrorCode::BadWeek: return "BadWeek";
    case ErrorCode::BadDate: return "BadDate";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnreadableHeader: return "UnreadableHeader";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RejectRateExceeded: return "RejectRateExceeded";
    case ErrorCode::MissingYearFactor: return "MissingYearFactor";
    case ErrorCode::DegenerateBuyer: return "DegenerateBuyer";
    case ErrorCode::MissingAggregate: return "MissingAggregate";
    case ErrorCode::ClassAbsent: return "ClassAbsent";
    case ErrorCode::ImbalanceInverted: return "ImbalanceInverted";
    case ErrorCode::EmptyNode: return "EmptyNode";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NoOobRows: return "NoOobRows";
    case ErrorCode::ThresholdUnset: return "ThresholdUnset";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ChecksumFailure: return "ChecksumFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Process exit status for an error: 1 usage/config, 2 data, 3 internal.
inline int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return 1;
    case ErrorCode::MissingAggregate:
    case ErrorCode::InvariantViolation:
      return 3;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hyperforest
