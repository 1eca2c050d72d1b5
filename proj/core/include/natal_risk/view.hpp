#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "natal_risk/dataset.hpp"

namespace natal_risk {

/// A read-only projection of a dataset onto one target and a set of
/// predictor columns. Rows whose target is missing are left out. Positions
/// (0..size()-1) index the included rows in dataset order.
class DatasetView {
 public:
  DatasetView(std::shared_ptr<const Dataset> data, std::size_t target, std::vector<std::size_t> predictors,
              std::vector<std::size_t> rows, std::size_t excluded);

  const Dataset& dataset() const noexcept { return *data_; }
  const std::shared_ptr<const Dataset>& shared_dataset() const noexcept { return data_; }
  const RiskFactorSchema& schema() const noexcept { return data_->schema(); }

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  std::size_t target() const noexcept { return target_; }
  const std::string& target_name() const { return schema().variable(target_).name; }
  std::size_t target_cardinality() const { return schema().variable(target_).cardinality(); }
  /// Predictor variable indices in ascending schema order.
  std::span<const std::size_t> predictors() const noexcept { return predictors_; }
  /// Predictors plus the target, ascending.
  std::vector<std::size_t> columns() const;
  std::vector<std::string> predictor_names() const;

  /// Index into dataset().records() of the row at `position`.
  std::size_t record_index(std::size_t position) const { return rows_[position]; }
  std::span<const std::size_t> record_indices() const noexcept { return rows_; }
  const PatientRecord& record(std::size_t position) const { return (*data_)[rows_[position]]; }
  Level value(std::size_t position, std::size_t variable) const { return record(position)[variable]; }
  Level label(std::size_t position) const { return record(position)[target_]; }

  /// Rows dropped because their target was missing.
  std::size_t excluded() const noexcept { return excluded_; }

  /// Per-level counts of the target.
  std::vector<std::size_t> class_counts() const;

  /// A view over a subset of this view's positions (kept in the given order).
  DatasetView subset(std::span<const std::size_t> positions) const;

 private:
  std::shared_ptr<const Dataset> data_;
  std::size_t target_;
  std::vector<std::size_t> predictors_;
  std::vector<std::size_t> rows_;
  std::size_t excluded_;
};

/// Builds a view. Outcome variables may be used as predictors.
///
/// Errors: UnknownName (target or predictor not in the schema),
/// EmptyPredictorSet, TargetInPredictors, EmptyViewAfterExclusion.
DatasetView feature_view(std::shared_ptr<const Dataset> dataset, const std::string& target,
                         const std::vector<std::string>& predictors);

/// Names of every risk factor (not outcomes), in schema order.
std::vector<std::string> factor_names(const RiskFactorSchema& schema);

}  // namespace natal_risk
