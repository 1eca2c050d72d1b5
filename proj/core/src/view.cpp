#include "natal_risk/view.hpp"

#include <algorithm>

#include "natal_risk/error.hpp"

namespace natal_risk {

DatasetView::DatasetView(std::shared_ptr<const Dataset> data, std::size_t target,
                         std::vector<std::size_t> predictors, std::vector<std::size_t> rows, std::size_t excluded)
    : data_(std::move(data)),
      target_(target),
      predictors_(std::move(predictors)),
      rows_(std::move(rows)),
      excluded_(excluded) {}

std::vector<std::size_t> DatasetView::columns() const {
  std::vector<std::size_t> cols(predictors_.begin(), predictors_.end());
  cols.push_back(target_);
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::vector<std::string> DatasetView::predictor_names() const {
  std::vector<std::string> names;
  for (auto p : predictors_) names.push_back(schema().variable(p).name);
  return names;
}

std::vector<std::size_t> DatasetView::class_counts() const {
  std::vector<std::size_t> counts(target_cardinality(), 0);
  for (std::size_t i = 0; i < size(); ++i) ++counts[static_cast<std::size_t>(label(i))];
  return counts;
}

DatasetView DatasetView::subset(std::span<const std::size_t> positions) const {
  std::vector<std::size_t> rows;
  rows.reserve(positions.size());
  for (auto p : positions) rows.push_back(rows_.at(p));
  return DatasetView(data_, target_, predictors_, std::move(rows), 0);
}

DatasetView feature_view(std::shared_ptr<const Dataset> dataset, const std::string& target,
                         const std::vector<std::string>& predictors) {
  const auto& schema = dataset->schema();
  const std::size_t target_idx = schema.index_of(target);
  if (predictors.empty()) throw Error(ErrorCode::EmptyPredictorSet, "no predictors given for target " + target);
  std::vector<std::size_t> pred;
  for (const auto& name : predictors) {
    const std::size_t idx = schema.index_of(name);
    if (idx == target_idx) throw Error(ErrorCode::TargetInPredictors, name);
    pred.push_back(idx);
  }
  std::sort(pred.begin(), pred.end());
  pred.erase(std::unique(pred.begin(), pred.end()), pred.end());

  std::vector<std::size_t> rows;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < dataset->size(); ++i) {
    if ((*dataset)[i][target_idx] == kMissing) {
      ++excluded;
    } else {
      rows.push_back(i);
    }
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyViewAfterExclusion, "every record misses target " + target);
  return DatasetView(std::move(dataset), target_idx, std::move(pred), std::move(rows), excluded);
}

std::vector<std::string> factor_names(const RiskFactorSchema& schema) {
  std::vector<std::string> names;
  for (const auto& f : schema.factors()) names.push_back(f.name);
  return names;
}

}  // namespace natal_risk
