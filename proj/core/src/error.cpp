#include "natal_risk/error.hpp"

namespace natal_risk {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateColumn: return "DuplicateColumn";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::EmptyPredictorSet: return "EmptyPredictorSet";
    case ErrorCode::TargetInPredictors: return "TargetInPredictors";
    case ErrorCode::EmptyViewAfterExclusion: return "EmptyViewAfterExclusion";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NotMinorityRecord: return "NotMinorityRecord";
    case ErrorCode::InsufficientMinority: return "InsufficientMinority";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::MinorityTooSmall: return "MinorityTooSmall";
    case ErrorCode::AllZeroCounts: return "AllZeroCounts";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::EmptyView: return "EmptyView";
    case ErrorCode::VariableMismatch: return "VariableMismatch";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::QueryInEvidence: return "QueryInEvidence";
    case ErrorCode::CyclicGraph: return "CyclicGraph";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadModelFile: return "BadModelFile";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::BadEvidence: return "BadEvidence";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::PortUnavailable: return "PortUnavailable";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace natal_risk
