#include "natal_risk/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "natal_risk/error.hpp"

namespace natal_risk {
namespace {

constexpr double kEps = 1e-12;

double entropy_of(std::span<const std::size_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

struct SplitStats {
  double gain = 0.0;
  double split_info = 0.0;
  double gain_ratio = 0.0;
  std::vector<std::size_t> branch_sizes;
};

SplitStats evaluate_split(const DatasetView& view, std::span<const std::size_t> rows, std::size_t feature) {
  const std::size_t classes = view.target_cardinality();
  const std::size_t levels = view.schema().variable(feature).cardinality();
  std::vector<std::size_t> table(levels * classes, 0);
  std::vector<std::size_t> known_class(classes, 0);
  SplitStats s;
  s.branch_sizes.assign(levels, 0);
  std::size_t known = 0;
  for (auto r : rows) {
    const Level v = view.value(r, feature);
    if (v == kMissing) continue;
    const auto c = static_cast<std::size_t>(view.label(r));
    ++table[static_cast<std::size_t>(v) * classes + c];
    ++known_class[c];
    ++s.branch_sizes[static_cast<std::size_t>(v)];
    ++known;
  }
  if (known == 0) return s;
  const double k = static_cast<double>(known);
  double conditional = 0.0;
  for (std::size_t v = 0; v < levels; ++v) {
    if (s.branch_sizes[v] == 0) continue;
    const double w = static_cast<double>(s.branch_sizes[v]) / k;
    conditional += w * entropy_of(std::span<const std::size_t>(table).subspan(v * classes, classes));
    s.split_info -= w * std::log2(w);
  }
  const double raw_gain = std::max(0.0, entropy_of(known_class) - conditional);
  s.gain = raw_gain * k / static_cast<double>(rows.size());
  s.gain_ratio = s.split_info > kEps ? s.gain / s.split_info : 0.0;
  return s;
}

Level argmax_level(std::span<const std::size_t> counts) {
  return static_cast<Level>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<std::size_t> class_counts_of(const DatasetView& view, std::span<const std::size_t> rows) {
  std::vector<std::size_t> counts(view.target_cardinality(), 0);
  for (auto r : rows) ++counts[static_cast<std::size_t>(view.label(r))];
  return counts;
}

class Inducer {
 public:
  Inducer(const DatasetView& view, const TreeParams& params, DecisionTreeModel& model)
      : view_(view), params_(params), model_(model) {}

  void build(std::vector<std::size_t> rows, std::vector<std::size_t> available) {
    const std::size_t node_index = model_.nodes.size();
    model_.nodes.emplace_back();
    {
      auto& node = model_.nodes[node_index];
      node.counts = class_counts_of(view_, rows);
      node.predicted = argmax_level(node.counts);
    }
    const auto& counts = model_.nodes[node_index].counts;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || rows.size() < 2 * params_.min_leaf || available.empty()) return;

    // Candidates: at least two branches holding min_leaf known records.
    std::vector<std::pair<std::size_t, SplitStats>> candidates;
    for (std::size_t slot = 0; slot < available.size(); ++slot) {
      SplitStats s = evaluate_split(view_, rows, feature_var(available[slot]));
      const auto big = std::count_if(s.branch_sizes.begin(), s.branch_sizes.end(),
                                     [&](std::size_t b) { return b >= params_.min_leaf; });
      if (big >= 2) candidates.emplace_back(slot, std::move(s));
    }
    if (candidates.empty()) return;
    double mean_gain = 0.0;
    for (const auto& c : candidates) mean_gain += c.second.gain;
    mean_gain /= static_cast<double>(candidates.size());

    const std::pair<std::size_t, SplitStats>* best = nullptr;
    for (const auto& c : candidates) {
      if (c.second.gain + kEps < mean_gain) continue;
      if (best == nullptr || c.second.gain_ratio > best->second.gain_ratio + kEps) best = &c;
    }
    if (best == nullptr || best->second.gain <= kEps) return;

    const std::size_t feature_slot = available[best->first];
    const std::size_t var = feature_var(feature_slot);
    const auto& sizes = best->second.branch_sizes;
    const std::size_t heaviest =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

    std::vector<std::vector<std::size_t>> branches(sizes.size());
    for (auto r : rows) {
      const Level v = view_.value(r, var);
      branches[v == kMissing ? heaviest : static_cast<std::size_t>(v)].push_back(r);
    }
    std::vector<std::size_t> remaining;
    for (auto a : available) {
      if (a != feature_slot) remaining.push_back(a);
    }

    model_.nodes[node_index].feature = static_cast<int>(feature_slot);
    model_.nodes[node_index].children.assign(sizes.size(), TreeNode::kNoChild);
    for (std::size_t level = 0; level < branches.size(); ++level) {
      if (branches[level].empty()) continue;
      model_.nodes[node_index].children[level] = static_cast<std::int32_t>(model_.nodes.size());
      build(std::move(branches[level]), remaining);
    }
  }

 private:
  std::size_t feature_var(std::size_t slot) const { return view_.predictors()[slot]; }

  const DatasetView& view_;
  const TreeParams& params_;
  DecisionTreeModel& model_;
};

/// Copies the reachable part of `src` below `node` into `dst`, turning nodes
/// flagged in `collapse` into leaves.
std::int32_t copy_compact(const DecisionTreeModel& src, std::size_t node, const std::vector<bool>& collapse,
                          std::vector<TreeNode>& dst) {
  const auto index = static_cast<std::int32_t>(dst.size());
  dst.push_back(src.nodes[node]);
  if (collapse[node] || src.nodes[node].is_leaf()) {
    dst[static_cast<std::size_t>(index)].feature = TreeNode::kLeaf;
    dst[static_cast<std::size_t>(index)].children.clear();
    return index;
  }
  const auto children = src.nodes[node].children;
  for (std::size_t level = 0; level < children.size(); ++level) {
    if (children[level] == TreeNode::kNoChild) continue;
    const auto child = copy_compact(src, static_cast<std::size_t>(children[level]), collapse, dst);
    dst[static_cast<std::size_t>(index)].children[level] = child;
  }
  return index;
}

std::size_t heaviest_child(const DecisionTreeModel& model, const TreeNode& node) {
  std::size_t best = 0;
  std::size_t best_total = 0;
  bool found = false;
  for (std::size_t level = 0; level < node.children.size(); ++level) {
    if (node.children[level] == TreeNode::kNoChild) continue;
    const std::size_t t = model.nodes[static_cast<std::size_t>(node.children[level])].total();
    if (!found || t > best_total) {
      best = level;
      best_total = t;
      found = true;
    }
  }
  return best;
}

std::string escape_dot(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

void validate(const TreeParams& params) {
  if (params.min_leaf < 1) throw Error(ErrorCode::InvalidParams, "min_leaf must be at least 1");
  if (!(params.confidence > 0.0 && params.confidence < 1.0))
    throw Error(ErrorCode::InvalidParams, "confidence must lie in (0, 1)");
}

std::size_t TreeNode::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t DecisionTreeModel::leaf_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.is_leaf() ? 1 : 0;
  return n;
}

std::size_t DecisionTreeModel::edge_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) {
    for (auto c : node.children) n += c != TreeNode::kNoChild ? 1 : 0;
  }
  return n;
}

std::size_t DecisionTreeModel::depth() const {
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
    const auto& node = nodes[i];
    if (node.is_leaf()) return 0;
    std::size_t d = 0;
    for (auto c : node.children) {
      if (c != TreeNode::kNoChild) d = std::max(d, walk(static_cast<std::size_t>(c)));
    }
    return d + 1;
  };
  return nodes.empty() ? 0 : walk(0);
}

double entropy(std::span<const std::size_t> class_counts) {
  const bool any = std::any_of(class_counts.begin(), class_counts.end(), [](auto c) { return c > 0; });
  if (!any) throw Error(ErrorCode::AllZeroCounts, "entropy of an empty distribution");
  return entropy_of(class_counts);
}

namespace {
std::size_t predictor_var(const DatasetView& view, const std::string& feature) {
  auto idx = view.schema().find(feature);
  const auto preds = view.predictors();
  if (!idx || std::find(preds.begin(), preds.end(), *idx) == preds.end())
    throw Error(ErrorCode::UnknownFeature, feature);
  return *idx;
}

std::vector<std::size_t> all_positions(const DatasetView& view) {
  std::vector<std::size_t> rows(view.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}
}  // namespace

double information_gain(const DatasetView& view, std::size_t feature) {
  return evaluate_split(view, all_positions(view), feature).gain;
}

double gain_ratio(const DatasetView& view, const std::string& feature) {
  const std::size_t var = predictor_var(view, feature);
  if (view.empty()) throw Error(ErrorCode::EmptyView, "gain ratio on an empty view");
  return evaluate_split(view, all_positions(view), var).gain_ratio;
}

DecisionTreeModel induce(const DatasetView& view, const TreeParams& params) {
  validate(params);
  if (view.empty()) throw Error(ErrorCode::EmptyView, "cannot induce a tree from an empty view");
  DecisionTreeModel model;
  model.target = variable_info(view.schema().variable(view.target()));
  for (auto p : view.predictors()) model.features.push_back(variable_info(view.schema().variable(p)));
  model.training_records = view.size();
  model.params = params;

  std::vector<std::size_t> slots(view.predictors().size());
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  Inducer(view, params, model).build(all_positions(view), std::move(slots));

  if (params.prune) return prune(model, view, params.confidence);
  return model;
}

double pessimistic_error_bound(double n, double errors, double confidence) {
  if (n <= 0.0) return 0.0;
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 1.0 - confidence);
  const double f = errors / n;
  const double z2 = z * z;
  const double upper =
      (f + z2 / (2.0 * n) + z * std::sqrt(std::max(0.0, f / n - f * f / n + z2 / (4.0 * n * n)))) / (1.0 + z2 / n);
  return n * upper;
}

namespace {
double leaf_error_bound(const TreeNode& node, double confidence) {
  const double n = static_cast<double>(node.total());
  const double correct = static_cast<double>(*std::max_element(node.counts.begin(), node.counts.end()));
  return pessimistic_error_bound(n, n - correct, confidence);
}
}  // namespace

double subtree_error_bound(const DecisionTreeModel& model, std::size_t node, double confidence) {
  const auto& n = model.nodes.at(node);
  if (n.is_leaf()) return leaf_error_bound(n, confidence);
  double sum = 0.0;
  for (auto c : n.children) {
    if (c != TreeNode::kNoChild) sum += subtree_error_bound(model, static_cast<std::size_t>(c), confidence);
  }
  return sum;
}

DecisionTreeModel prune(const DecisionTreeModel& model, const DatasetView& view) {
  return prune(model, view, model.params.confidence);
}

DecisionTreeModel prune(const DecisionTreeModel& model, const DatasetView& view, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw Error(ErrorCode::InvalidParams, "confidence must lie in (0, 1)");
  if (view.target_name() != model.target.name || view.target_cardinality() != model.target.cardinality())
    throw Error(ErrorCode::SchemaMismatch, "view target " + view.target_name() + " does not match model target " +
                                               model.target.name);
  const auto names = view.predictor_names();
  for (const auto& f : model.features) {
    if (std::find(names.begin(), names.end(), f.name) == names.end())
      throw Error(ErrorCode::SchemaMismatch, "model feature " + f.name + " is not a predictor of the view");
  }
  if (model.nodes.empty()) return model;

  std::vector<bool> collapse(model.nodes.size(), false);
  // Returns the pessimistic bound of the (already pruned) subtree.
  std::function<double(std::size_t)> visit = [&](std::size_t i) -> double {
    const auto& node = model.nodes[i];
    const double as_leaf = leaf_error_bound(node, confidence);
    if (node.is_leaf()) return as_leaf;
    double as_subtree = 0.0;
    for (auto c : node.children) {
      if (c != TreeNode::kNoChild) as_subtree += visit(static_cast<std::size_t>(c));
    }
    if (as_leaf <= as_subtree + kEps) {
      collapse[i] = true;
      return as_leaf;
    }
    return as_subtree;
  };
  visit(0);

  DecisionTreeModel out = model;
  out.nodes.clear();
  copy_compact(model, 0, collapse, out.nodes);
  return out;
}

PredictionResult predict_tree(const DecisionTreeModel& model, const Evidence& evidence) {
  std::vector<Level> observed(model.features.size(), kMissing);
  for (const auto& [name, level] : evidence) {
    auto it = std::find_if(model.features.begin(), model.features.end(),
                           [&](const VariableInfo& f) { return f.name == name; });
    if (it == model.features.end()) {
      if (name == model.target.name || builtin_schema().find(name)) continue;
      throw Error(ErrorCode::UnknownFeature, name);
    }
    if (level == kMissing) continue;
    if (level < 0 || static_cast<std::size_t>(level) >= it->cardinality())
      throw Error(ErrorCode::BadEvidence, name);
    observed[static_cast<std::size_t>(it - model.features.begin())] = level;
  }

  PredictionResult result;
  result.class_labels = model.target.levels;
  std::size_t at = 0;
  while (!model.nodes[at].is_leaf()) {
    const auto& node = model.nodes[at];
    const auto slot = static_cast<std::size_t>(node.feature);
    const Level seen = observed[slot];
    std::size_t level;
    bool imputed = false;
    if (seen != kMissing && node.children[static_cast<std::size_t>(seen)] != TreeNode::kNoChild) {
      level = static_cast<std::size_t>(seen);
    } else {
      level = heaviest_child(model, node);
      imputed = true;
    }
    result.path.push_back({model.features[slot].name, model.features[slot].levels[level], imputed});
    at = static_cast<std::size_t>(node.children[level]);
  }
  const auto& leaf = model.nodes[at];
  const double denom = static_cast<double>(leaf.total() + leaf.counts.size());
  for (auto c : leaf.counts) result.distribution.push_back(static_cast<double>(c + 1) / denom);
  result.predicted = leaf.predicted;
  result.predicted_label = model.target.levels[static_cast<std::size_t>(leaf.predicted)];
  return result;
}

std::string export_tree_dot(const DecisionTreeModel& model) {
  std::ostringstream out;
  out << "digraph decision_tree {\n";
  out << "  node [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const auto& node = model.nodes[i];
    out << "  n" << i << " [";
    if (node.is_leaf()) {
      out << "shape=box, label=\"" << escape_dot(model.target.name) << " = "
          << escape_dot(model.target.levels[static_cast<std::size_t>(node.predicted)]) << "\\n(";
      for (std::size_t c = 0; c < node.counts.size(); ++c) {
        if (c > 0) out << '/';
        out << node.counts[c];
      }
      out << ")\"";
    } else {
      out << "shape=ellipse, label=\"" << escape_dot(model.features[static_cast<std::size_t>(node.feature)].name)
          << "\"";
    }
    out << "];\n";
  }
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const auto& node = model.nodes[i];
    for (std::size_t level = 0; level < node.children.size(); ++level) {
      if (node.children[level] == TreeNode::kNoChild) continue;
      out << "  n" << i << " -> n" << node.children[level] << " [label=\""
          << escape_dot(model.features[static_cast<std::size_t>(node.feature)].levels[level]) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace natal_risk
