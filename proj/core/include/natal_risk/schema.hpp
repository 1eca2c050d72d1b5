#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace natal_risk {

/// Encoded value of one variable in one record: the level index into the
/// variable's label list, or `kMissing`.
using Level = std::int16_t;
inline constexpr Level kMissing = -1;

/// Binary levels. Every binary variable is encoded absent=0, present=1.
inline constexpr Level kAbsent = 0;
inline constexpr Level kPresent = 1;

enum class FactorGroup { MaternalAntepartum, FetalAntepartum, Intrapartum, Outcome };
enum class FactorKind { Binary, OrdinalBinned };

std::string_view to_string(FactorGroup group) noexcept;
std::string_view to_string(FactorKind kind) noexcept;
std::optional<FactorGroup> parse_factor_group(std::string_view text) noexcept;
std::optional<FactorKind> parse_factor_kind(std::string_view text) noexcept;

struct FactorDef {
  std::string name;
  FactorGroup group = FactorGroup::MaternalAntepartum;
  FactorKind kind = FactorKind::Binary;
  /// Ordered bin labels; empty for binary factors.
  std::vector<std::string> bins;
  std::string display_label;

  /// Number of non-missing levels (2 for binary).
  std::size_t cardinality() const noexcept { return kind == FactorKind::Binary ? 2 : bins.size(); }
  /// Label of a level: "absent"/"present" for binary, the bin label otherwise.
  std::string level_label(Level level) const;
  /// All level labels in level order.
  std::vector<std::string> level_labels() const;

  friend bool operator==(const FactorDef&, const FactorDef&) = default;
};

/// Parses an evidence/console value for `def`: "absent"/"present"/"0"/"1" for
/// binary factors, a bin label or its rank for ordinal ones. Returns nullopt
/// when the text names no level.
std::optional<Level> parse_level(const FactorDef& def, std::string_view text);

/// The catalogue of risk factors followed by the outcome fields. Variables are
/// addressed by a single index space: factors first, then outcomes.
class RiskFactorSchema {
 public:
  RiskFactorSchema() = default;
  RiskFactorSchema(std::vector<FactorDef> factors, std::vector<FactorDef> outcomes);

  const std::vector<FactorDef>& factors() const noexcept { return factors_; }
  const std::vector<FactorDef>& outcomes() const noexcept { return outcomes_; }

  std::size_t variable_count() const noexcept { return factors_.size() + outcomes_.size(); }
  const FactorDef& variable(std::size_t index) const;
  bool is_outcome(std::size_t index) const noexcept { return index >= factors_.size(); }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  /// Throws Error{UnknownName} when `name` is not in the schema.
  std::size_t index_of(std::string_view name) const;

  friend bool operator==(const RiskFactorSchema& a, const RiskFactorSchema& b) {
    return a.factors_ == b.factors_ && a.outcomes_ == b.outcomes_;
  }

 private:
  std::vector<FactorDef> factors_;
  std::vector<FactorDef> outcomes_;
};

/// The fixed 33-factor, 8-outcome schema (maternal antepartum, fetal
/// antepartum and intrapartum factors in table order, then outcomes).
const RiskFactorSchema& builtin_schema();

inline constexpr int kSchemaFormatVersion = 1;

nlohmann::json schema_to_json(const RiskFactorSchema& schema);
/// Throws Error{InvalidSpec} on structural problems or a wrong format_version.
RiskFactorSchema schema_from_json(const nlohmann::json& doc);

}  // namespace natal_risk
