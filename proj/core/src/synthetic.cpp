#include "natal_risk/synthetic.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include "natal_risk/error.hpp"
#include "natal_risk/random.hpp"

namespace natal_risk {
namespace {

const std::vector<double> kDefaultBirthWeightMix = {0.08, 0.84, 0.08};

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void require_probability(double p, const std::string& what) {
  if (!is_probability(p)) throw Error(ErrorCode::InvalidSpec, what + " is not a probability in [0,1]");
}

struct CompiledCondition {
  std::size_t variable;
  Level level;
};

struct CompiledRule {
  std::vector<CompiledCondition> when;
  double probability;
};

struct CompiledSpec {
  std::size_t class_var = 0;
  // variable -> rules targeting it (empty for independent variables)
  std::vector<std::vector<CompiledRule>> rules;
  std::vector<bool> derived;
  // Derived non-class variables in sampling order.
  std::vector<std::size_t> derived_order;
  // Per variable: P(present) for binary, the cumulative mix for ordinal.
  std::vector<std::vector<double>> distribution;
};

CompiledSpec compile(const CorrelationSpec& spec, const RiskFactorSchema& schema) {
  CompiledSpec c;
  auto lookup = [&](const std::string& name) {
    auto idx = schema.find(name);
    if (!idx) throw Error(ErrorCode::InvalidSpec, "unknown variable '" + name + "'");
    return *idx;
  };
  c.class_var = lookup(spec.class_target);
  if (schema.variable(c.class_var).kind != FactorKind::Binary)
    throw Error(ErrorCode::InvalidSpec, "class target must be binary");
  require_probability(spec.base_rate, "base_rate");
  require_probability(spec.default_prevalence, "default_prevalence");
  require_probability(spec.missing_rate, "missing_rate");

  const std::size_t nvars = schema.variable_count();
  c.rules.resize(nvars);
  c.derived.assign(nvars, false);
  c.derived[c.class_var] = true;
  for (const auto& rule : spec.planted_rules) {
    const std::size_t target = rule.target.empty() ? c.class_var : lookup(rule.target);
    if (schema.variable(target).kind != FactorKind::Binary)
      throw Error(ErrorCode::InvalidSpec, "rule target '" + schema.variable(target).name + "' is not binary");
    require_probability(rule.probability, "rule probability for '" + schema.variable(target).name + "'");
    CompiledRule compiled{{}, rule.probability};
    for (const auto& cond : rule.when) {
      const std::size_t v = lookup(cond.variable);
      if (cond.level < 0 || static_cast<std::size_t>(cond.level) >= schema.variable(v).cardinality())
        throw Error(ErrorCode::InvalidSpec, "condition level out of range for '" + cond.variable + "'");
      if (v == target) throw Error(ErrorCode::InvalidSpec, "rule for '" + cond.variable + "' conditions on itself");
      compiled.when.push_back({v, cond.level});
    }
    c.rules[target].push_back(std::move(compiled));
    c.derived[target] = true;
  }

  c.distribution.resize(nvars);
  for (const auto& [name, p] : spec.marginals) {
    const std::size_t v = lookup(name);
    if (schema.variable(v).kind != FactorKind::Binary)
      throw Error(ErrorCode::InvalidSpec, "'" + name + "' is ordinal; use ordinal_marginals");
    require_probability(p, "marginal of '" + name + "'");
  }
  for (const auto& [name, mix] : spec.ordinal_marginals) {
    const std::size_t v = lookup(name);
    if (schema.variable(v).kind != FactorKind::OrdinalBinned || mix.size() != schema.variable(v).cardinality())
      throw Error(ErrorCode::InvalidSpec, "ordinal mix for '" + name + "' does not match its bins");
    for (double p : mix) require_probability(p, "ordinal mix entry of '" + name + "'");
    if (std::abs(std::accumulate(mix.begin(), mix.end(), 0.0) - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidSpec, "ordinal mix for '" + name + "' does not sum to 1");
  }
  for (std::size_t v = 0; v < nvars; ++v) {
    const auto& def = schema.variable(v);
    if (def.kind == FactorKind::Binary) {
      auto it = spec.marginals.find(def.name);
      c.distribution[v] = {it != spec.marginals.end() ? it->second : spec.default_prevalence};
    } else {
      auto it = spec.ordinal_marginals.find(def.name);
      std::vector<double> mix;
      if (it != spec.ordinal_marginals.end()) {
        mix = it->second;
      } else if (def.cardinality() == kDefaultBirthWeightMix.size()) {
        mix = kDefaultBirthWeightMix;
      } else {
        mix.assign(def.cardinality(), 1.0 / static_cast<double>(def.cardinality()));
      }
      std::partial_sum(mix.begin(), mix.end(), mix.begin());
      c.distribution[v] = std::move(mix);
    }
  }

  // Derived variables are sampled once everything their rules read is known.
  std::vector<bool> resolved(nvars, false);
  for (std::size_t v = 0; v < nvars; ++v) resolved[v] = !c.derived[v];
  std::size_t pending = 0;
  for (std::size_t v = 0; v < nvars; ++v) pending += (c.derived[v] && v != c.class_var) ? 1 : 0;
  while (pending > 0) {
    bool progressed = false;
    for (std::size_t v = 0; v < nvars; ++v) {
      if (resolved[v] || v == c.class_var) continue;
      bool ready = true;
      for (const auto& rule : c.rules[v]) {
        for (const auto& cond : rule.when) ready = ready && resolved[cond.variable];
      }
      if (ready) {
        resolved[v] = true;
        c.derived_order.push_back(v);
        --pending;
        progressed = true;
      }
    }
    if (!progressed) throw Error(ErrorCode::InvalidSpec, "planted rules are cyclic or read the class target");
  }
  return c;
}

bool matches(const CompiledRule& rule, const std::vector<Level>& values) {
  for (const auto& cond : rule.when) {
    if (values[cond.variable] != cond.level) return false;
  }
  return true;
}

Level draw_from(const std::vector<double>& dist, double u) {
  if (dist.size() == 1) return u < dist[0] ? kPresent : kAbsent;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (u < dist[i]) return static_cast<Level>(i);
  }
  return static_cast<Level>(dist.size() - 1);
}

}  // namespace

Dataset generate_synthetic(const CorrelationSpec& spec, std::size_t n, const RiskFactorSchema& schema) {
  if (n == 0) throw Error(ErrorCode::InvalidParams, "n must be at least 1");
  const CompiledSpec c = compile(spec, schema);
  const std::size_t nvars = schema.variable_count();
  Rng rng(spec.seed);

  std::vector<PatientRecord> records;
  records.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<Level> values(nvars, kMissing);
    for (std::size_t v = 0; v < nvars; ++v) {
      if (!c.derived[v]) values[v] = draw_from(c.distribution[v], unit_real(rng));
    }
    for (std::size_t v : c.derived_order) {
      double p = c.distribution[v][0];
      for (const auto& rule : c.rules[v]) {
        if (matches(rule, values)) {
          p = rule.probability;
          break;
        }
      }
      values[v] = unit_real(rng) < p ? kPresent : kAbsent;
    }
    double p = spec.base_rate;
    for (const auto& rule : c.rules[c.class_var]) {
      if (matches(rule, values)) {
        p = rule.probability;
        break;
      }
    }
    values[c.class_var] = unit_real(rng) < p ? kPresent : kAbsent;
    if (spec.missing_rate > 0.0) {
      for (std::size_t v = 0; v < nvars; ++v) {
        if (v != c.class_var && unit_real(rng) < spec.missing_rate) values[v] = kMissing;
      }
    }
    records.push_back({std::move(values), Provenance::SyntheticGenerator});
  }
  return Dataset(schema, std::move(records));
}

CorrelationSpec planted_cohort_spec(std::uint64_t seed) {
  CorrelationSpec spec;
  spec.class_target = "apgar1_leq7";
  spec.base_rate = 0.02;
  spec.planted_rules = {
      {{{"ventilated_at_birth", kPresent}}, 1.0, ""},
      {{{"hypertension", kPresent}}, 0.2, ""},
      {{{"twins", kPresent}}, 0.9, "eg_lt37"},
  };
  spec.marginals = {
      {"ventilated_at_birth", 0.2},
      {"hypertension", 0.1},
      {"twins", 0.08},
      {"eg_lt37", 0.1},
  };
  spec.default_prevalence = 0.05;
  spec.seed = seed;
  return spec;
}

nlohmann::json correlation_spec_to_json(const CorrelationSpec& spec) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& rule : spec.planted_rules) {
    nlohmann::json when = nlohmann::json::array();
    for (const auto& cond : rule.when) when.push_back({{"variable", cond.variable}, {"level", cond.level}});
    nlohmann::json j = {{"when", when}, {"probability", rule.probability}};
    if (!rule.target.empty()) j["target"] = rule.target;
    rules.push_back(std::move(j));
  }
  return {
      {"class_target", spec.class_target},
      {"planted_rules", rules},
      {"base_rate", spec.base_rate},
      {"marginals", spec.marginals},
      {"ordinal_marginals", spec.ordinal_marginals},
      {"default_prevalence", spec.default_prevalence},
      {"missing_rate", spec.missing_rate},
      {"seed", spec.seed},
  };
}

CorrelationSpec correlation_spec_from_json(const nlohmann::json& doc) {
  CorrelationSpec spec;
  try {
    spec.class_target = doc.at("class_target").get<std::string>();
    if (doc.contains("planted_rules")) {
      for (const auto& j : doc.at("planted_rules")) {
        PlantedRule rule;
        rule.probability = j.at("probability").get<double>();
        rule.target = j.value("target", std::string{});
        for (const auto& c : j.at("when")) {
          rule.when.push_back({c.at("variable").get<std::string>(), c.value("level", kPresent)});
        }
        spec.planted_rules.push_back(std::move(rule));
      }
    }
    spec.base_rate = doc.value("base_rate", 0.0);
    if (doc.contains("marginals")) spec.marginals = doc.at("marginals").get<std::map<std::string, double>>();
    if (doc.contains("ordinal_marginals"))
      spec.ordinal_marginals = doc.at("ordinal_marginals").get<std::map<std::string, std::vector<double>>>();
    spec.default_prevalence = doc.value("default_prevalence", 0.05);
    spec.missing_rate = doc.value("missing_rate", 0.0);
    spec.seed = doc.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  return spec;
}

}  // namespace natal_risk
