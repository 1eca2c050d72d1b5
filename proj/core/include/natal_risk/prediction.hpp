#pragma once

#include <map>
#include <string>
#include <vector>

#include "natal_risk/schema.hpp"

namespace natal_risk {

/// A named categorical variable as seen by a trained model.
struct VariableInfo {
  std::string name;
  std::vector<std::string> levels;

  std::size_t cardinality() const noexcept { return levels.size(); }
  friend bool operator==(const VariableInfo&, const VariableInfo&) = default;
};

VariableInfo variable_info(const FactorDef& def);

/// Partial evidence: variable name -> observed level. Unset variables are
/// simply absent from the map.
using Evidence = std::map<std::string, Level>;

struct PathStep {
  std::string feature;
  std::string value;
  /// True when the feature was not in the evidence (or its value was never
  /// seen in training) and the heavier branch was taken.
  bool imputed = false;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct PredictionResult {
  Level predicted = 0;
  std::string predicted_label;
  std::vector<std::string> class_labels;
  std::vector<double> distribution;
  /// Decision-tree explanation.
  std::vector<PathStep> path;
  /// Bayesian-network explanation: evidence variables in the class's Markov
  /// blanket, sorted by name.
  std::vector<std::string> influence;

  friend bool operator==(const PredictionResult&, const PredictionResult&) = default;
};

}  // namespace natal_risk
