#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <memory>
#include <string>
#include <vector>

#include "natal_risk/bayesnet.hpp"
#include "natal_risk/dataset.hpp"
#include "natal_risk/view.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace natal_risk;

inline const RiskFactorSchema& schema() { return builtin_schema(); }

/// Every variable absent.
inline PatientRecord blank() {
  return PatientRecord{std::vector<Level>(schema().variable_count(), kAbsent), Provenance::Real};
}

inline PatientRecord record(const std::map<std::string, Level>& values) {
  auto r = blank();
  for (const auto& [name, level] : values) r.values[schema().index_of(name)] = level;
  return r;
}

inline std::shared_ptr<const Dataset> dataset(std::vector<PatientRecord> records) {
  return std::make_shared<const Dataset>(schema(), std::move(records));
}

/// The first `n` risk factor names (all binary for n <= 17).
inline std::vector<std::string> first_factors(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(schema().factors()[i].name);
  return out;
}

inline constexpr const char* kTarget = "apgar1_leq7";

/// Oracle rows -> records over the first `features` factors, class in apgar1_leq7.
inline DatasetView view_from_rows(const std::vector<oracle::Row>& rows, std::size_t features) {
  std::vector<PatientRecord> records;
  const auto names = first_factors(features);
  const auto target = schema().index_of(kTarget);
  for (const auto& row : rows) {
    auto r = blank();
    for (std::size_t f = 0; f < features; ++f)
      r.values[schema().index_of(names[f])] = row.x[f] < 0 ? kMissing : static_cast<Level>(row.x[f]);
    r.values[target] = static_cast<Level>(row.y);
    records.push_back(std::move(r));
  }
  return feature_view(dataset(std::move(records)), kTarget, names);
}

/// A random network over `n` binary variables named x0..x{n-1}, each with up
/// to `max_parents` parents drawn from lower-numbered nodes. Returned both as
/// a library model and as an oracle network.
inline std::pair<BayesNetModel, oracle::Net> random_network(std::mt19937_64& rng, std::size_t n,
                                                             std::size_t max_parents) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  BayesNetModel m;
  oracle::Net net;
  m.dag = Dag(n);
  for (std::size_t v = 0; v < n; ++v) m.variables.push_back({"x" + std::to_string(v), {"0", "1"}});
  net.card.assign(n, 2);
  net.parents.resize(n);
  for (std::size_t v = 1; v < n; ++v) {
    std::vector<std::size_t> pool(v);
    for (std::size_t i = 0; i < v; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t k = rng() % (std::min(max_parents, v) + 1);
    for (std::size_t i = 0; i < k; ++i) m.dag.add_edge(pool[i], v);
  }
  for (std::size_t v = 0; v < n; ++v) {
    net.parents[v] = m.dag.parents(v);
    Cpt cpt;
    cpt.parents = m.dag.parents(v);
    cpt.cardinality = 2;
    for (std::size_t row = 0; row < (std::size_t{1} << cpt.parents.size()); ++row) {
      const double a = u(rng);
      const double b = u(rng);
      cpt.table.push_back(a / (a + b));
      cpt.table.push_back(b / (a + b));
    }
    net.cpt.push_back(cpt.table);
    m.cpts.push_back(std::move(cpt));
  }
  m.class_var = n - 1;
  return {std::move(m), std::move(net)};
}

}  // namespace fixture
