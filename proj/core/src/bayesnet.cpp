#include "natal_risk/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "natal_risk/error.hpp"
#include "natal_risk/random.hpp"

namespace natal_risk {

// ---------------------------------------------------------------------------
// Dag

Dag::Dag(std::size_t nodes) : parents_(nodes), children_(nodes) {}

bool Dag::has_edge(std::size_t parent, std::size_t child) const {
  const auto& p = parents_.at(child);
  return std::binary_search(p.begin(), p.end(), parent);
}

bool Dag::has_path(std::size_t from, std::size_t to) const {
  if (from == to) return true;
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (auto c : children_[v]) {
      if (c == to) return true;
      if (!seen[c]) {
        seen[c] = true;
        stack.push_back(c);
      }
    }
  }
  return false;
}

void Dag::add_edge(std::size_t parent, std::size_t child) {
  if (parent >= size() || child >= size()) throw Error(ErrorCode::VariableMismatch, "edge endpoint out of range");
  if (has_edge(parent, child)) return;
  if (creates_cycle(parent, child))
    throw Error(ErrorCode::CyclicGraph, std::to_string(parent) + " -> " + std::to_string(child));
  auto& p = parents_[child];
  p.insert(std::upper_bound(p.begin(), p.end(), parent), parent);
  auto& c = children_[parent];
  c.insert(std::upper_bound(c.begin(), c.end(), child), child);
}

void Dag::remove_edge(std::size_t parent, std::size_t child) {
  auto& p = parents_.at(child);
  p.erase(std::remove(p.begin(), p.end(), parent), p.end());
  auto& c = children_.at(parent);
  c.erase(std::remove(c.begin(), c.end(), child), c.end());
}

void Dag::reverse_edge(std::size_t parent, std::size_t child) {
  remove_edge(parent, child);
  try {
    add_edge(child, parent);
  } catch (...) {
    add_edge(parent, child);
    throw;
  }
}

std::vector<std::pair<std::size_t, std::size_t>> Dag::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < size(); ++p) {
    for (auto c : children_[p]) out.emplace_back(p, c);
  }
  return out;
}

std::size_t Dag::edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : parents_) n += p.size();
  return n;
}

std::size_t Dag::max_in_degree() const noexcept {
  std::size_t m = 0;
  for (const auto& p : parents_) m = std::max(m, p.size());
  return m;
}

std::vector<std::size_t> Dag::topological_order() const {
  std::vector<std::size_t> indegree(size());
  for (std::size_t v = 0; v < size(); ++v) indegree[v] = parents_[v].size();
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t v = size(); v-- > 0;) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (auto c : children_[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (order.size() != size()) throw Error(ErrorCode::CyclicGraph, "graph has a cycle");
  return order;
}

std::string_view to_string(ScoreKind kind) noexcept { return kind == ScoreKind::Bic ? "bic" : "bdeu"; }

std::optional<ScoreKind> parse_score_kind(std::string_view text) noexcept {
  if (text == "bic") return ScoreKind::Bic;
  if (text == "bdeu") return ScoreKind::Bdeu;
  return std::nullopt;
}

void validate(const StructureParams& params) {
  if (params.max_parents < 1) throw Error(ErrorCode::InvalidParams, "max_parents must be at least 1");
  if (!(params.smoothing_alpha > 0.0)) throw Error(ErrorCode::InvalidParams, "smoothing_alpha must be positive");
  if (!(params.equivalent_sample_size > 0.0))
    throw Error(ErrorCode::InvalidParams, "equivalent_sample_size must be positive");
}

// ---------------------------------------------------------------------------
// Scoring

FamilyScorer::FamilyScorer(const DatasetView& view, const StructureParams& params)
    : columns_(view.columns()), params_(params) {
  for (auto col : columns_) {
    cards_.push_back(view.schema().variable(col).cardinality());
    std::vector<Level> column(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) column[i] = view.value(i, col);
    data_.push_back(std::move(column));
  }
}

double FamilyScorer::local(std::size_t child, std::span<const std::size_t> parents) {
  std::vector<std::size_t> key(parents.begin(), parents.end());
  std::sort(key.begin(), key.end());
  auto cache_key = std::make_pair(child, std::move(key));
  if (auto it = cache_.find(cache_key); it != cache_.end()) return it->second;
  const double s = compute(child, cache_key.second);
  cache_.emplace(std::move(cache_key), s);
  return s;
}

double FamilyScorer::compute(std::size_t child, std::span<const std::size_t> parents) const {
  const std::size_t r = cards_.at(child);
  std::size_t q = 1;
  for (auto p : parents) q *= cards_.at(p);
  std::vector<double> counts(q * r, 0.0);
  const std::size_t rows = data_.empty() ? 0 : data_.front().size();
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const Level x = data_[child][i];
    if (x == kMissing) continue;
    std::size_t config = 0;
    bool complete = true;
    for (auto p : parents) {
      const Level v = data_[p][i];
      if (v == kMissing) {
        complete = false;
        break;
      }
      config = config * cards_[p] + static_cast<std::size_t>(v);
    }
    if (!complete) continue;
    counts[config * r + static_cast<std::size_t>(x)] += 1.0;
    ++n;
  }

  double score = 0.0;
  if (params_.score == ScoreKind::Bic) {
    for (std::size_t j = 0; j < q; ++j) {
      double nij = 0.0;
      for (std::size_t k = 0; k < r; ++k) nij += counts[j * r + k];
      if (nij == 0.0) continue;
      for (std::size_t k = 0; k < r; ++k) {
        const double nijk = counts[j * r + k];
        if (nijk > 0.0) score += nijk * std::log(nijk / nij);
      }
    }
    if (n > 0) score -= 0.5 * std::log(static_cast<double>(n)) * static_cast<double>(q * (r - 1));
  } else {
    const double a_j = params_.equivalent_sample_size / static_cast<double>(q);
    const double a_jk = a_j / static_cast<double>(r);
    for (std::size_t j = 0; j < q; ++j) {
      double nij = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        const double nijk = counts[j * r + k];
        nij += nijk;
        score += std::lgamma(a_jk + nijk) - std::lgamma(a_jk);
      }
      score += std::lgamma(a_j) - std::lgamma(a_j + nij);
    }
  }
  return score;
}

double FamilyScorer::total(const Dag& dag) {
  double s = 0.0;
  for (std::size_t v = 0; v < dag.size(); ++v) s += local(v, dag.parents(v));
  return s;
}

double score_network(const Dag& dag, const DatasetView& view, const StructureParams& params) {
  validate(params);
  FamilyScorer scorer(view, params);
  if (dag.size() != scorer.variable_count())
    throw Error(ErrorCode::VariableMismatch, "dag has " + std::to_string(dag.size()) + " nodes, view has " +
                                                 std::to_string(scorer.variable_count()) + " columns");
  return scorer.total(dag);
}

// ---------------------------------------------------------------------------
// Structure search

namespace {

constexpr double kImprovement = 1e-9;

enum class MoveKind { Add = 0, Delete = 1, Reverse = 2 };

struct Move {
  MoveKind kind;
  std::size_t parent;
  std::size_t child;
  double delta;
};

std::vector<std::size_t> with(const std::vector<std::size_t>& s, std::size_t v) {
  std::vector<std::size_t> out = s;
  out.insert(std::upper_bound(out.begin(), out.end(), v), v);
  return out;
}

std::vector<std::size_t> without(const std::vector<std::size_t>& s, std::size_t v) {
  std::vector<std::size_t> out;
  for (auto x : s) {
    if (x != v) out.push_back(x);
  }
  return out;
}

/// Reversing parent -> child is acyclic iff no other path parent ~> child.
bool reverse_is_acyclic(const Dag& dag, std::size_t parent, std::size_t child) {
  Dag probe = dag;
  probe.remove_edge(parent, child);
  return !probe.has_path(parent, child);
}

std::optional<Move> best_move(const Dag& dag, FamilyScorer& scorer, std::size_t max_parents) {
  const std::size_t n = dag.size();
  std::vector<double> current(n);
  for (std::size_t v = 0; v < n; ++v) current[v] = scorer.local(v, dag.parents(v));

  std::optional<Move> best;
  auto consider = [&](MoveKind kind, std::size_t parent, std::size_t child, double delta) {
    if (delta <= kImprovement) return;
    if (!best || delta > best->delta + kImprovement) best = Move{kind, parent, child, delta};
  };
  for (std::size_t child = 0; child < n; ++child) {
    const auto& pa = dag.parents(child);
    for (std::size_t parent = 0; parent < n; ++parent) {
      if (parent == child) continue;
      if (dag.has_edge(parent, child)) {
        const double drop = scorer.local(child, without(pa, parent)) - current[child];
        consider(MoveKind::Delete, parent, child, drop);
        if (dag.parents(parent).size() < max_parents && reverse_is_acyclic(dag, parent, child)) {
          const double gain = scorer.local(parent, with(dag.parents(parent), child)) - current[parent];
          consider(MoveKind::Reverse, parent, child, drop + gain);
        }
      } else if (!dag.has_edge(child, parent)) {
        if (pa.size() < max_parents && !dag.creates_cycle(parent, child)) {
          consider(MoveKind::Add, parent, child, scorer.local(child, with(pa, parent)) - current[child]);
        }
      }
    }
  }
  return best;
}

void apply(Dag& dag, const Move& m) {
  switch (m.kind) {
    case MoveKind::Add: dag.add_edge(m.parent, m.child); break;
    case MoveKind::Delete: dag.remove_edge(m.parent, m.child); break;
    case MoveKind::Reverse: dag.reverse_edge(m.parent, m.child); break;
  }
}

void climb(Dag& dag, FamilyScorer& scorer, std::size_t max_parents) {
  while (auto m = best_move(dag, scorer, max_parents)) apply(dag, *m);
}

void perturb(Dag& dag, std::size_t max_parents, std::size_t steps, Rng& rng) {
  const std::size_t n = dag.size();
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t a = uniform_index(rng, n);
    const std::size_t b = uniform_index(rng, n);
    if (a == b) continue;
    if (dag.has_edge(a, b)) {
      if (uniform_index(rng, 2) == 0) {
        dag.remove_edge(a, b);
      } else if (dag.parents(a).size() < max_parents && reverse_is_acyclic(dag, a, b)) {
        dag.reverse_edge(a, b);
      }
    } else if (!dag.has_edge(b, a) && dag.parents(b).size() < max_parents && !dag.creates_cycle(a, b)) {
      dag.add_edge(a, b);
    }
  }
}

bool better(double score, const Dag& dag, double best_score, const Dag& best) {
  if (score > best_score + kImprovement) return true;
  if (score < best_score - kImprovement) return false;
  if (dag.edge_count() != best.edge_count()) return dag.edge_count() < best.edge_count();
  return dag.edges() < best.edges();
}

}  // namespace

Dag learn_structure(const DatasetView& view, const StructureParams& params) {
  validate(params);
  if (view.empty()) throw Error(ErrorCode::EmptyView, "cannot learn a structure from an empty view");
  FamilyScorer scorer(view, params);
  Dag best(scorer.variable_count());
  climb(best, scorer, params.max_parents);
  double best_score = scorer.total(best);

  Rng rng(params.seed);
  for (unsigned r = 0; r < params.restarts; ++r) {
    Dag candidate = best;
    perturb(candidate, params.max_parents, 2 * candidate.size(), rng);
    climb(candidate, scorer, params.max_parents);
    const double s = scorer.total(candidate);
    if (better(s, candidate, best_score, best)) {
      best = std::move(candidate);
      best_score = s;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Parameters and model helpers

std::optional<std::size_t> BayesNetModel::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t BayesNetModel::parent_config(std::size_t node, std::span<const Level> assignment) const {
  std::size_t config = 0;
  for (auto p : cpts[node].parents) config = config * variables[p].cardinality() + static_cast<std::size_t>(assignment[p]);
  return config;
}

void validate(const BayesNetModel& model) {
  const std::size_t n = model.variables.size();
  if (model.dag.size() != n || model.cpts.size() != n)
    throw Error(ErrorCode::BadModelFile, "dag/cpt count does not match the variable count");
  if (model.class_var >= n) throw Error(ErrorCode::BadModelFile, "class variable out of range");
  try {
    (void)model.dag.topological_order();
  } catch (const Error&) {
    throw Error(ErrorCode::BadModelFile, "network graph is cyclic");
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto& cpt = model.cpts[v];
    if (cpt.parents != model.dag.parents(v))
      throw Error(ErrorCode::BadModelFile, "cpt parents of " + model.variables[v].name + " differ from the graph");
    if (model.variables[v].cardinality() < 1 || cpt.cardinality != model.variables[v].cardinality())
      throw Error(ErrorCode::BadModelFile, "cpt width of " + model.variables[v].name + " is wrong");
    std::size_t q = 1;
    for (auto p : cpt.parents) q *= model.variables[p].cardinality();
    if (cpt.table.size() != q * cpt.cardinality)
      throw Error(ErrorCode::BadModelFile, "cpt of " + model.variables[v].name + " has the wrong row count");
    for (std::size_t j = 0; j < q; ++j) {
      double sum = 0.0;
      for (double p : cpt.row(j)) {
        if (!(p > 0.0 && p <= 1.0))
          throw Error(ErrorCode::BadModelFile, "cpt of " + model.variables[v].name + " has an entry outside (0,1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorCode::BadModelFile, "cpt row of " + model.variables[v].name + " does not sum to 1");
    }
  }
}

BayesNetModel fit_cpts(const Dag& dag, const DatasetView& view, double smoothing_alpha) {
  if (!(smoothing_alpha > 0.0)) throw Error(ErrorCode::InvalidParams, "smoothing_alpha must be positive");
  const auto columns = view.columns();
  if (dag.size() != columns.size())
    throw Error(ErrorCode::VariableMismatch, "dag has " + std::to_string(dag.size()) + " nodes, view has " +
                                                 std::to_string(columns.size()) + " columns");
  BayesNetModel model;
  for (auto col : columns) model.variables.push_back(variable_info(view.schema().variable(col)));
  model.dag = dag;
  model.class_var =
      static_cast<std::size_t>(std::find(columns.begin(), columns.end(), view.target()) - columns.begin());
  model.training_records = view.size();
  model.params.smoothing_alpha = smoothing_alpha;

  for (std::size_t v = 0; v < columns.size(); ++v) {
    Cpt cpt;
    cpt.parents = dag.parents(v);
    cpt.cardinality = model.variables[v].cardinality();
    std::size_t q = 1;
    for (auto p : cpt.parents) q *= model.variables[p].cardinality();
    std::vector<double> counts(q * cpt.cardinality, 0.0);
    for (std::size_t i = 0; i < view.size(); ++i) {
      const Level x = view.value(i, columns[v]);
      if (x == kMissing) continue;
      std::size_t config = 0;
      bool complete = true;
      for (auto p : cpt.parents) {
        const Level pv = view.value(i, columns[p]);
        if (pv == kMissing) {
          complete = false;
          break;
        }
        config = config * model.variables[p].cardinality() + static_cast<std::size_t>(pv);
      }
      if (complete) counts[config * cpt.cardinality + static_cast<std::size_t>(x)] += 1.0;
    }
    cpt.table.resize(counts.size());
    for (std::size_t j = 0; j < q; ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < cpt.cardinality; ++k) total += counts[j * cpt.cardinality + k];
      const double denom = total + smoothing_alpha * static_cast<double>(cpt.cardinality);
      for (std::size_t k = 0; k < cpt.cardinality; ++k)
        cpt.table[j * cpt.cardinality + k] = (counts[j * cpt.cardinality + k] + smoothing_alpha) / denom;
    }
    model.cpts.push_back(std::move(cpt));
  }
  return model;
}

std::vector<std::string> markov_blanket(const BayesNetModel& model, const std::string& var) {
  auto idx = model.find(var);
  if (!idx) throw Error(ErrorCode::UnknownVariable, var);
  std::vector<std::size_t> members;
  for (auto p : model.dag.parents(*idx)) members.push_back(p);
  for (auto c : model.dag.children(*idx)) {
    members.push_back(c);
    for (auto co : model.dag.parents(c)) {
      if (co != *idx) members.push_back(co);
    }
  }
  std::vector<std::string> names;
  for (auto m : members) names.push_back(model.variables[m].name);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

namespace {
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}
}  // namespace

std::string export_bn_dot(const BayesNetModel& model) {
  std::ostringstream out;
  out << "digraph bayes_net {\n";
  out << "  node [fontname=\"Helvetica\"];\n";
  for (std::size_t v = 0; v < model.variables.size(); ++v) {
    out << "  " << quoted(model.variables[v].name);
    if (v == model.class_var) {
      out << " [shape=doublecircle, style=filled, fillcolor=lightgrey];\n";
    } else {
      out << " [shape=ellipse];\n";
    }
  }
  for (const auto& [p, c] : model.dag.edges()) {
    out << "  " << quoted(model.variables[p].name) << " -> " << quoted(model.variables[c].name) << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace natal_risk
