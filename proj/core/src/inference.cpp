#include <algorithm>
#include <numeric>
#include <set>

#include "natal_risk/bayesnet.hpp"
#include "natal_risk/error.hpp"

namespace natal_risk {
namespace {

/// A table over `vars` (ascending), last variable varying fastest.
struct Factor {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  std::size_t position_of(std::size_t var) const {
    return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), var) - vars.begin());
  }
  bool contains(std::size_t var) const { return std::binary_search(vars.begin(), vars.end(), var); }
};

/// Odometer over an assignment of `cards`, last digit fastest.
bool advance(std::vector<std::size_t>& digits, const std::vector<std::size_t>& cards) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < cards[i]) return true;
    digits[i] = 0;
  }
  return false;
}

std::size_t table_size(const std::vector<std::size_t>& cards) {
  return std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
}

Factor cpt_factor(const BayesNetModel& model, std::size_t node) {
  const auto& cpt = model.cpts[node];
  Factor f;
  f.vars = cpt.parents;
  f.vars.push_back(node);
  std::sort(f.vars.begin(), f.vars.end());
  for (auto v : f.vars) f.cards.push_back(model.variables[v].cardinality());
  f.values.resize(table_size(f.cards));
  std::vector<std::size_t> digits(f.vars.size(), 0);
  std::size_t idx = 0;
  do {
    std::size_t config = 0;
    for (auto p : cpt.parents) config = config * model.variables[p].cardinality() + digits[f.position_of(p)];
    f.values[idx++] = cpt.table[config * cpt.cardinality + digits[f.position_of(node)]];
  } while (advance(digits, f.cards));
  return f;
}

Factor restrict_factor(const Factor& f, std::size_t var, std::size_t level) {
  const std::size_t pos = f.position_of(var);
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == pos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.values.reserve(table_size(out.cards));
  std::vector<std::size_t> digits(f.vars.size(), 0);
  std::size_t idx = 0;
  do {
    if (digits[pos] == level) out.values.push_back(f.values[idx]);
    ++idx;
  } while (advance(digits, f.cards));
  return out;
}

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
  std::vector<std::size_t> a_pos;
  std::vector<std::size_t> b_pos;
  for (auto v : out.vars) {
    out.cards.push_back(a.contains(v) ? a.cards[a.position_of(v)] : b.cards[b.position_of(v)]);
  }
  for (auto v : a.vars) a_pos.push_back(static_cast<std::size_t>(std::find(out.vars.begin(), out.vars.end(), v) - out.vars.begin()));
  for (auto v : b.vars) b_pos.push_back(static_cast<std::size_t>(std::find(out.vars.begin(), out.vars.end(), v) - out.vars.begin()));
  out.values.resize(table_size(out.cards));
  std::vector<std::size_t> digits(out.vars.size(), 0);
  std::size_t idx = 0;
  do {
    std::size_t ia = 0;
    for (std::size_t i = 0; i < a_pos.size(); ++i) ia = ia * a.cards[i] + digits[a_pos[i]];
    std::size_t ib = 0;
    for (std::size_t i = 0; i < b_pos.size(); ++i) ib = ib * b.cards[i] + digits[b_pos[i]];
    out.values[idx++] = a.values[ia] * b.values[ib];
  } while (advance(digits, out.cards));
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  const std::size_t pos = f.position_of(var);
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == pos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.values.assign(table_size(out.cards), 0.0);
  std::vector<std::size_t> digits(f.vars.size(), 0);
  std::size_t idx = 0;
  do {
    std::size_t target = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (i != pos) target = target * f.cards[i] + digits[i];
    }
    out.values[target] += f.values[idx++];
  } while (advance(digits, f.cards));
  return out;
}

}  // namespace

std::vector<double> eliminate(const BayesNetModel& model, const std::string& query, const Evidence& evidence) {
  const auto q = model.find(query);
  if (!q) throw Error(ErrorCode::UnknownVariable, query);
  const std::size_t n = model.variables.size();
  std::vector<Level> observed(n, kMissing);
  for (const auto& [name, level] : evidence) {
    const auto v = model.find(name);
    if (!v) throw Error(ErrorCode::UnknownVariable, name);
    if (level == kMissing) continue;
    if (*v == *q) throw Error(ErrorCode::QueryInEvidence, name);
    if (level < 0 || static_cast<std::size_t>(level) >= model.variables[*v].cardinality())
      throw Error(ErrorCode::BadEvidence, name);
    observed[*v] = level;
  }

  // Only ancestors of the query and the evidence matter.
  std::vector<bool> relevant(n, false);
  std::vector<std::size_t> stack{*q};
  for (std::size_t v = 0; v < n; ++v) {
    if (observed[v] != kMissing) stack.push_back(v);
  }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (auto p : model.dag.parents(v)) stack.push_back(p);
  }

  std::vector<Factor> factors;
  for (std::size_t v = 0; v < n; ++v) {
    if (!relevant[v]) continue;
    Factor f = cpt_factor(model, v);
    for (std::size_t u : std::vector<std::size_t>(f.vars)) {
      if (observed[u] != kMissing) f = restrict_factor(f, u, static_cast<std::size_t>(observed[u]));
    }
    factors.push_back(std::move(f));
  }

  std::set<std::size_t> hidden;
  for (std::size_t v = 0; v < n; ++v) {
    if (relevant[v] && v != *q && observed[v] == kMissing) hidden.insert(v);
  }
  while (!hidden.empty()) {
    // Min-degree: fewest distinct neighbours in the current factor set.
    std::size_t pick = *hidden.begin();
    std::size_t pick_degree = static_cast<std::size_t>(-1);
    for (auto h : hidden) {
      std::set<std::size_t> neighbours;
      for (const auto& f : factors) {
        if (!f.contains(h)) continue;
        for (auto u : f.vars) {
          if (u != h) neighbours.insert(u);
        }
      }
      if (neighbours.size() < pick_degree ||
          (neighbours.size() == pick_degree && model.variables[h].name < model.variables[pick].name)) {
        pick = h;
        pick_degree = neighbours.size();
      }
    }
    hidden.erase(pick);

    std::vector<Factor> rest;
    std::optional<Factor> product;
    for (auto& f : factors) {
      if (f.contains(pick)) {
        product = product ? multiply(*product, f) : std::move(f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (product) rest.push_back(sum_out(*product, pick));
    factors = std::move(rest);
  }

  Factor result{{}, {}, {1.0}};
  for (const auto& f : factors) result = multiply(result, f);
  // result is over {query} now (or empty if the query factor was constant).
  std::vector<double> dist(model.variables[*q].cardinality(), 0.0);
  if (result.vars.size() == 1 && result.vars.front() == *q) {
    dist = result.values;
  } else {
    std::fill(dist.begin(), dist.end(), 1.0);
  }
  const double z = std::accumulate(dist.begin(), dist.end(), 0.0);
  for (auto& p : dist) p /= z;
  return dist;
}

PredictionResult predict_bn(const BayesNetModel& model, const Evidence& evidence) {
  Evidence usable;
  for (const auto& [name, level] : evidence) {
    if (model.find(name)) {
      usable.emplace(name, level);
    } else if (!builtin_schema().find(name)) {
      throw Error(ErrorCode::UnknownVariable, name);
    }
  }
  const auto& cls = model.class_variable();
  PredictionResult result;
  result.class_labels = cls.levels;
  result.distribution = eliminate(model, cls.name, usable);
  result.predicted = static_cast<Level>(std::max_element(result.distribution.begin(), result.distribution.end()) -
                                        result.distribution.begin());
  result.predicted_label = cls.levels[static_cast<std::size_t>(result.predicted)];
  const auto blanket = markov_blanket(model, cls.name);
  for (const auto& [name, level] : usable) {
    if (level != kMissing && std::binary_search(blanket.begin(), blanket.end(), name))
      result.influence.push_back(name);
  }
  return result;
}

}  // namespace natal_risk
