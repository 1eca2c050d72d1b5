#include "natal_risk/dataset.hpp"

#include <string>

#include "natal_risk/error.hpp"

namespace natal_risk {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Real: return "real";
    case Provenance::SyntheticGenerator: return "synthetic_generator";
    case Provenance::Smote: return "smote";
  }
  return "";
}

std::optional<Provenance> parse_provenance(std::string_view text) noexcept {
  for (auto p : {Provenance::Real, Provenance::SyntheticGenerator, Provenance::Smote}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

void validate_record(const RiskFactorSchema& schema, const PatientRecord& record, std::size_t row) {
  if (record.values.size() != schema.variable_count()) {
    throw Error(ErrorCode::BadValue, "row " + std::to_string(row) + ": expected " +
                                         std::to_string(schema.variable_count()) + " values, got " +
                                         std::to_string(record.values.size()));
  }
  for (std::size_t v = 0; v < record.values.size(); ++v) {
    const Level level = record.values[v];
    if (level == kMissing) continue;
    if (level < 0 || static_cast<std::size_t>(level) >= schema.variable(v).cardinality()) {
      throw Error(ErrorCode::BadValue, "row " + std::to_string(row) + ", column " + schema.variable(v).name +
                                           ": level " + std::to_string(level) + " out of range");
    }
  }
}

Dataset::Dataset(RiskFactorSchema schema, std::vector<PatientRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) validate_record(schema_, records_[i], i);
}

}  // namespace natal_risk
