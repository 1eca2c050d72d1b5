#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "natal_risk/bayesnet.hpp"
#include "natal_risk/dtree.hpp"
#include "natal_risk/smote.hpp"
#include "natal_risk/view.hpp"

namespace natal_risk {

// ---------------------------------------------------------------------------
// Protocol

/// Fold id (0..k-1) per view position. Each class is shuffled with `seed` and
/// dealt round-robin, the dealing position carrying over from one class to
/// the next, so per-class and total fold sizes differ by at most one.
/// Throws Error{TooFewRecords} when the view has fewer than k rows and
/// Error{InvalidParams} when k < 2.
std::vector<std::size_t> stratified_folds(const DatasetView& view, std::size_t k, std::uint64_t seed);

/// Always predicts the training majority class (ties -> lower level) with the
/// add-one smoothed training class frequencies.
struct MajorityBaseline {};

using LearnerConfig = std::variant<TreeParams, StructureParams, MajorityBaseline>;

std::string learner_name(const LearnerConfig& config);

enum class SmotePlacement { None, BeforeFolds, InFolds };
std::string_view to_string(SmotePlacement placement) noexcept;

struct CrossValidationOutput {
  /// Pooled over folds, in view-position order.
  std::vector<Level> truths;
  std::vector<Level> predictions;
  std::vector<std::vector<double>> distributions;
  std::vector<std::size_t> folds;
  std::vector<std::string> class_labels;

  /// Probability of `positive` for every record.
  std::vector<double> scores(Level positive) const;
};

/// Trains on the complement of each fold and predicts the fold. With
/// `in_fold_smote`, every training split is oversampled before fitting (test
/// folds never are).
CrossValidationOutput cross_validate(const DatasetView& view, const LearnerConfig& config, std::size_t k,
                                     std::uint64_t seed, const std::optional<SmoteParams>& in_fold_smote = {});

// ---------------------------------------------------------------------------
// Metrics

struct ConfusionMatrix {
  std::vector<std::string> classes;
  /// counts[truth][predicted]
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const noexcept;
  std::size_t correct() const noexcept;
  std::size_t support(std::size_t cls) const;
};

struct MetricsRow {
  /// Class label, or empty for the weighted-average row.
  std::string label;
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double mcc = 0.0;
  /// Unset when no scores were supplied or the class is absent/universal.
  std::optional<double> roc_area;
  std::optional<double> prc_area;
  std::size_t support = 0;
};

struct EvaluationProtocol {
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  SmotePlacement smote = SmotePlacement::None;
};

struct EvaluationReport {
  ConfusionMatrix matrix;
  std::vector<MetricsRow> per_class;
  MetricsRow weighted;
  double accuracy = 0.0;
  EvaluationProtocol protocol;
};

/// One-vs-rest rows, support-weighted averages and accuracy from the matrix
/// alone (ROC/PRC stay unset).
EvaluationReport metrics_from_matrix(const ConfusionMatrix& matrix);

/// Full report: matrix from truths/predictions, ROC/PRC from the per-record
/// class distributions (one entry per class).
/// Errors: EmptyInput, LengthMismatch.
EvaluationReport confusion_and_metrics(std::span<const Level> truths, std::span<const Level> predictions,
                                       std::span<const std::vector<double>> distributions,
                                       const std::vector<std::string>& classes);

/// Binary convenience: `scores` are probabilities of class `positive`; the
/// other class scores 1 - score.
EvaluationReport confusion_and_metrics(std::span<const Level> truths, std::span<const Level> predictions,
                                       std::span<const double> scores, const std::vector<std::string>& classes,
                                       Level positive = 1);

/// (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)); 0 if any factor is 0.
double matthews(double tp, double fp, double fn, double tn);

/// Area under the ROC curve by trapezoids over score-tied groups.
std::optional<double> roc_area_trapezoid(std::span<const double> scores, std::span<const bool> positive);
/// Normalised Mann-Whitney U (ties count one half).
std::optional<double> roc_area_mann_whitney(std::span<const double> scores, std::span<const bool> positive);
/// Area under the precision/recall curve: recall steps over score-tied
/// groups, each weighted by the interpolated precision (best precision at
/// that recall or beyond).
std::optional<double> prc_area(std::span<const double> scores, std::span<const bool> positive);

/// Half-up rounding to `digits` decimals.
double round_half_up(double value, int digits = 3);

/// Detailed accuracy by class plus the confusion matrix with its
/// "classified as" legend; three decimals, half-up.
std::string render_report(const EvaluationReport& report);

nlohmann::json report_to_json(const EvaluationReport& report);

}  // namespace natal_risk
