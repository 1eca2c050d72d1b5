#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "natal_risk/prediction.hpp"
#include "natal_risk/view.hpp"

namespace natal_risk {

/// Directed acyclic graph over nodes 0..size()-1. Parent lists are kept
/// sorted ascending.
class Dag {
 public:
  Dag() = default;
  explicit Dag(std::size_t nodes);

  std::size_t size() const noexcept { return parents_.size(); }
  const std::vector<std::size_t>& parents(std::size_t node) const { return parents_.at(node); }
  const std::vector<std::size_t>& children(std::size_t node) const { return children_.at(node); }
  bool has_edge(std::size_t parent, std::size_t child) const;
  /// True when a directed path from `from` to `to` exists (from == to counts).
  bool has_path(std::size_t from, std::size_t to) const;
  /// True when adding parent -> child would close a cycle.
  bool creates_cycle(std::size_t parent, std::size_t child) const { return has_path(child, parent); }

  /// Throws Error{CyclicGraph} when the edge would close a cycle.
  void add_edge(std::size_t parent, std::size_t child);
  void remove_edge(std::size_t parent, std::size_t child);
  /// Replaces parent -> child by child -> parent; throws Error{CyclicGraph}.
  void reverse_edge(std::size_t parent, std::size_t child);

  /// (parent, child) pairs in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::size_t edge_count() const noexcept;
  std::size_t max_in_degree() const noexcept;
  std::vector<std::size_t> topological_order() const;

  friend bool operator==(const Dag& a, const Dag& b) { return a.parents_ == b.parents_; }

 private:
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

enum class ScoreKind { Bic, Bdeu };

std::string_view to_string(ScoreKind kind) noexcept;
std::optional<ScoreKind> parse_score_kind(std::string_view text) noexcept;

struct StructureParams {
  std::size_t max_parents = 3;
  ScoreKind score = ScoreKind::Bic;
  /// Equivalent sample size for BDeu.
  double equivalent_sample_size = 1.0;
  unsigned restarts = 0;
  std::uint64_t seed = 0;
  double smoothing_alpha = 1.0;

  friend bool operator==(const StructureParams&, const StructureParams&) = default;
};

/// Throws Error{InvalidParams} unless max_parents >= 1, smoothing_alpha > 0
/// and equivalent_sample_size > 0.
void validate(const StructureParams& params);

/// Local (per-family) scores over the view's columns (predictors and target,
/// ascending schema order; node i of a Dag is column i). Only rows where the
/// child and all parents are observed are counted. Results are cached by
/// (child, parent set).
class FamilyScorer {
 public:
  FamilyScorer(const DatasetView& view, const StructureParams& params);

  std::size_t variable_count() const noexcept { return cards_.size(); }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  std::size_t cardinality(std::size_t node) const { return cards_.at(node); }

  /// BIC: log-likelihood - free parameters * ln(N) / 2 (natural log).
  /// BDeu: log marginal likelihood with uniform equivalent sample size.
  double local(std::size_t child, std::span<const std::size_t> parents);
  /// Sum of local scores over all families of `dag`.
  double total(const Dag& dag);

  std::size_t cache_size() const noexcept { return cache_.size(); }

 private:
  double compute(std::size_t child, std::span<const std::size_t> parents) const;

  std::vector<std::size_t> columns_;
  std::vector<std::size_t> cards_;
  std::vector<std::vector<Level>> data_;  // column-major, per node
  StructureParams params_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

/// Decomposable network score; dag.size() must equal the number of view
/// columns or Error{VariableMismatch} is thrown.
double score_network(const Dag& dag, const DatasetView& view, const StructureParams& params);

/// Greedy hill climbing from the empty graph over add/delete/reverse moves,
/// taking the best strictly improving move (ties: lowest (child, parent),
/// then add < delete < reverse) until none improves. With restarts > 0 the
/// best graph is randomly perturbed and re-climbed; the best-scoring graph
/// wins (ties: fewer edges, then lexicographically smaller edge list).
/// Throws Error{EmptyView}.
Dag learn_structure(const DatasetView& view, const StructureParams& params);

/// P(node | parents): one row of `cardinality` entries per parent
/// configuration. The configuration index is mixed-radix over `parents` with
/// the last parent varying fastest.
struct Cpt {
  std::vector<std::size_t> parents;
  std::size_t cardinality = 0;
  std::vector<double> table;

  std::size_t rows() const noexcept { return cardinality == 0 ? 0 : table.size() / cardinality; }
  std::span<const double> row(std::size_t config) const {
    return std::span<const double>(table).subspan(config * cardinality, cardinality);
  }
  friend bool operator==(const Cpt&, const Cpt&) = default;
};

struct BayesNetModel {
  std::vector<VariableInfo> variables;
  Dag dag;
  std::vector<Cpt> cpts;
  std::size_t class_var = 0;
  std::size_t training_records = 0;
  StructureParams params;

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  const VariableInfo& class_variable() const { return variables.at(class_var); }
  /// Index of the configuration of `node`'s parents in `assignment`.
  std::size_t parent_config(std::size_t node, std::span<const Level> assignment) const;

  friend bool operator==(const BayesNetModel&, const BayesNetModel&) = default;
};

/// Structural checks on a hand-built or loaded model: acyclic, CPT shapes
/// match parent cardinalities, rows sum to 1 within 1e-9, entries in (0, 1].
/// Throws Error{BadModelFile}.
void validate(const BayesNetModel& model);

/// (count + alpha) / (row total + alpha * cardinality) per parent
/// configuration, counting rows where the family is fully observed. The view
/// target becomes the class variable. Throws Error{VariableMismatch}.
BayesNetModel fit_cpts(const Dag& dag, const DatasetView& view, double smoothing_alpha);

/// Exact P(query | evidence) by variable elimination (min-degree order, ties
/// by name). Variables that are neither ancestors of the query nor of the
/// evidence are dropped first.
///
/// Errors: UnknownVariable, QueryInEvidence, BadEvidence.
std::vector<double> eliminate(const BayesNetModel& model, const std::string& query, const Evidence& evidence);

/// Argmax of the class posterior (ties -> lower level). Evidence names from
/// the builtin schema that are not in the model are ignored. `influence` lists
/// the evidence variables inside the class's Markov blanket.
PredictionResult predict_bn(const BayesNetModel& model, const Evidence& evidence);

/// Parents, children and the children's other parents of `var`, sorted by
/// name. Throws Error{UnknownVariable}.
std::vector<std::string> markov_blanket(const BayesNetModel& model, const std::string& var);

/// Graphviz digraph of the DAG; the class node is drawn as a filled double
/// circle.
std::string export_bn_dot(const BayesNetModel& model);

}  // namespace natal_risk
