#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "natal_risk/schema.hpp"

namespace natal_risk {

enum class Provenance { Real, SyntheticGenerator, Smote };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view text) noexcept;

/// One newborn. `values` is indexed by schema variable index (factors, then
/// outcomes) and holds a level or `kMissing`.
struct PatientRecord {
  std::vector<Level> values;
  Provenance provenance = Provenance::Real;

  Level operator[](std::size_t variable) const { return values[variable]; }

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

/// An ordered, immutable collection of records that all validate against one
/// schema.
class Dataset {
 public:
  /// Throws Error{BadValue} when a record has the wrong width or a level out
  /// of range for its variable.
  Dataset(RiskFactorSchema schema, std::vector<PatientRecord> records);

  const RiskFactorSchema& schema() const noexcept { return schema_; }
  const std::vector<PatientRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  const PatientRecord& operator[](std::size_t i) const { return records_[i]; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  RiskFactorSchema schema_;
  std::vector<PatientRecord> records_;
};

/// Validates one record against `schema`; throws Error{BadValue}.
void validate_record(const RiskFactorSchema& schema, const PatientRecord& record, std::size_t row);

}  // namespace natal_risk
