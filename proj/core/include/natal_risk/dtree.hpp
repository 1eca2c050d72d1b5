#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "natal_risk/prediction.hpp"
#include "natal_risk/view.hpp"

namespace natal_risk {

struct TreeParams {
  std::size_t min_leaf = 2;
  bool prune = true;
  /// Confidence for the pessimistic error bound used in pruning.
  double confidence = 0.25;
  std::uint64_t seed = 0;

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

/// Throws Error{InvalidParams} unless min_leaf >= 1 and 0 < confidence < 1.
void validate(const TreeParams& params);

struct TreeNode {
  static constexpr int kLeaf = -1;
  static constexpr std::int32_t kNoChild = -1;

  /// Index into DecisionTreeModel::features, or kLeaf.
  int feature = kLeaf;
  /// Child node per feature level; kNoChild when no training record had the level.
  std::vector<std::int32_t> children;
  /// Training class counts that reached this node.
  std::vector<std::size_t> counts;
  Level predicted = 0;

  bool is_leaf() const noexcept { return feature == kLeaf; }
  std::size_t total() const noexcept;
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTreeModel {
  VariableInfo target;
  /// Predictors of the training view in schema order.
  std::vector<VariableInfo> features;
  /// Node 0 is the root; children always follow their parent.
  std::vector<TreeNode> nodes;
  std::size_t training_records = 0;
  TreeParams params;

  const TreeNode& root() const { return nodes.front(); }
  std::size_t leaf_count() const;
  std::size_t edge_count() const;
  /// Maximum number of tests on a root-to-leaf path.
  std::size_t depth() const;

  friend bool operator==(const DecisionTreeModel&, const DecisionTreeModel&) = default;
};

/// Shannon entropy in bits over the nonzero counts. Throws Error{AllZeroCounts}.
double entropy(std::span<const std::size_t> class_counts);

/// Information gain in bits over the rows where `feature` is known, scaled by
/// the known fraction.
double information_gain(const DatasetView& view, std::size_t feature);
/// Scaled information gain divided by the split information of the known
/// rows; 0 when the split information is 0.
/// Throws Error{UnknownFeature} when `feature` is not a predictor of the view.
double gain_ratio(const DatasetView& view, const std::string& feature);

/// C4.5-style induction: gain-ratio splits restricted to candidates whose
/// gain reaches the candidates' mean gain, multiway on every feature level,
/// then pessimistic pruning when params.prune is set. Throws Error{EmptyView}.
DecisionTreeModel induce(const DatasetView& view, const TreeParams& params);

/// Upper confidence bound on the number of errors among `n` records when
/// `errors` are observed (normal approximation), times n.
double pessimistic_error_bound(double n, double errors, double confidence);
/// Pessimistic error estimate of the subtree rooted at `node` (sum over leaves).
double subtree_error_bound(const DecisionTreeModel& model, std::size_t node, double confidence);

/// Bottom-up replacement of subtrees by leaves whenever the leaf's
/// pessimistic bound does not exceed the subtree's. Uses
/// model.params.confidence. Throws Error{SchemaMismatch} when the view's
/// target or predictors do not match the model.
DecisionTreeModel prune(const DecisionTreeModel& model, const DatasetView& view);
DecisionTreeModel prune(const DecisionTreeModel& model, const DatasetView& view, double confidence);

/// Walks the tree with `evidence`. A tested feature that is unset (or set to
/// a level unseen in training) follows the heaviest child and is marked
/// imputed. The distribution is the add-one smoothed leaf counts. Evidence on
/// schema variables the tree does not use is ignored.
/// Throws Error{UnknownFeature} for names outside the builtin schema and the
/// model, and Error{BadEvidence} for out-of-range levels.
PredictionResult predict_tree(const DecisionTreeModel& model, const Evidence& evidence);

/// Graphviz digraph; internal nodes show the feature, edges the level and
/// leaves the predicted class with class counts.
std::string export_tree_dot(const DecisionTreeModel& model);

}  // namespace natal_risk
