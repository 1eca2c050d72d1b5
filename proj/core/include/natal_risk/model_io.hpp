#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "natal_risk/bayesnet.hpp"
#include "natal_risk/dtree.hpp"

namespace natal_risk {

inline constexpr int kModelFormatVersion = 1;

using ModelArtifact = std::variant<DecisionTreeModel, BayesNetModel>;

/// Accuracy plus per-class F-measure from the training-time evaluation.
struct MetricsSummary {
  double accuracy = 0.0;
  std::map<std::string, double> f_measure;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

/// What a model file holds: the artifact, plus evaluation results when the
/// model was trained through the CLI.
struct PersistedModel {
  ModelArtifact artifact;
  std::optional<MetricsSummary> metrics;
  /// Full evaluation report (see report_to_json), or null.
  nlohmann::json evaluation;
};

std::string_view model_kind(const ModelArtifact& artifact) noexcept;
const std::string& model_target(const ModelArtifact& artifact) noexcept;

nlohmann::json tree_to_json(const DecisionTreeModel& model);
nlohmann::json bn_to_json(const BayesNetModel& model);
nlohmann::json model_to_json(const PersistedModel& model);

/// Throw Error{BadModelFile} on any structural problem.
DecisionTreeModel tree_from_json(const nlohmann::json& doc);
BayesNetModel bn_from_json(const nlohmann::json& doc);
PersistedModel model_from_json(const nlohmann::json& doc);

/// Dispatches to predict_tree / predict_bn.
PredictionResult predict(const ModelArtifact& artifact, const Evidence& evidence);
/// Dispatches to export_tree_dot / export_bn_dot.
std::string export_dot(const ModelArtifact& artifact);

}  // namespace natal_risk
