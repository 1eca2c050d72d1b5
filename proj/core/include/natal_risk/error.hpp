#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace natal_risk {

/// Machine-readable failure categories. The string form (see `to_string`) is
/// what the CLI prints on stderr and what the HTTP service puts in
/// `{"error": {"code": ...}}`.
enum class ErrorCode {
  // domain
  UnknownColumn,
  MissingColumn,
  DuplicateColumn,
  BadValue,
  EmptyInput,
  InvalidSpec,
  UnknownName,
  EmptyPredictorSet,
  TargetInPredictors,
  EmptyViewAfterExclusion,
  // smote
  InvalidParams,
  NotMinorityRecord,
  InsufficientMinority,
  SchemaMismatch,
  DegenerateTarget,
  MinorityTooSmall,
  // dtree
  AllZeroCounts,
  UnknownFeature,
  EmptyView,
  // bayesnet
  VariableMismatch,
  UnknownVariable,
  QueryInEvidence,
  CyclicGraph,
  // eval
  TooFewRecords,
  LengthMismatch,
  // persistence / service
  BadModelFile,
  UnknownModel,
  BadEvidence,
  BadRequest,
  PortUnavailable,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. `detail` is a short
/// human-readable message; `code` is stable and meant for programs.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace natal_risk
