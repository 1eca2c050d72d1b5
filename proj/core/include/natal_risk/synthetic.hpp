#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "natal_risk/dataset.hpp"

namespace natal_risk {

struct Condition {
  std::string variable;
  Level level = kPresent;
};

/// "If every condition holds, `target` is present with `probability`."
/// An empty `target` means `class_target`. Rules for the same
/// target are tried in order; the first match wins.
struct PlantedRule {
  std::vector<Condition> when;
  double probability = 0.0;
  std::string target;
};

/// Recipe for a schema-compatible cohort with planted dependencies.
///
/// Variables that are not the target of any rule are drawn independently:
/// binary ones are present with `marginals[name]` (or `default_prevalence`),
/// ordinal ones from `ordinal_marginals[name]` (or a fixed default). A rule
/// target other than the class target uses its marginal as the base rate when
/// no rule fires; the class target uses `base_rate`. The class target is
/// never missing; every other value is blanked with `missing_rate`.
struct CorrelationSpec {
  std::string class_target;
  std::vector<PlantedRule> planted_rules;
  double base_rate = 0.0;
  std::map<std::string, double> marginals;
  std::map<std::string, std::vector<double>> ordinal_marginals;
  double default_prevalence = 0.05;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic in (spec, n, schema). Records carry provenance
/// `synthetic_generator`. Throws Error{InvalidSpec} for out-of-range
/// probabilities, unknown names, non-binary rule targets or cyclic rules, and
/// Error{InvalidParams} for n == 0.
Dataset generate_synthetic(const CorrelationSpec& spec, std::size_t n,
                           const RiskFactorSchema& schema = builtin_schema());

/// The reference planted cohort: ventilated_at_birth deterministically implies
/// apgar1_leq7, maternal hypertension raises its rate, and twin pregnancy
/// drives eg_lt37.
CorrelationSpec planted_cohort_spec(std::uint64_t seed);

nlohmann::json correlation_spec_to_json(const CorrelationSpec& spec);
CorrelationSpec correlation_spec_from_json(const nlohmann::json& doc);

}  // namespace natal_risk
