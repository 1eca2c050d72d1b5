#include "natal_risk/model_io.hpp"

#include <algorithm>

#include "natal_risk/error.hpp"

namespace natal_risk {
namespace {

using nlohmann::json;

json variable_to_json(const VariableInfo& v) { return {{"name", v.name}, {"levels", v.levels}}; }

VariableInfo variable_from_json(const json& j) {
  VariableInfo v{j.at("name").get<std::string>(), j.at("levels").get<std::vector<std::string>>()};
  if (v.levels.empty()) throw Error(ErrorCode::BadModelFile, "variable " + v.name + " has no levels");
  return v;
}

void check_header(const json& doc, std::string_view kind) {
  if (!doc.is_object()) throw Error(ErrorCode::BadModelFile, "model document is not an object");
  if (doc.value("format_version", 0) != kModelFormatVersion)
    throw Error(ErrorCode::BadModelFile, "unsupported format_version");
  if (doc.value("kind", std::string{}) != kind)
    throw Error(ErrorCode::BadModelFile, "expected kind " + std::string(kind));
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadModelFile, e.what());
  } catch (const std::out_of_range& e) {
    throw Error(ErrorCode::BadModelFile, e.what());
  }
}

void validate_tree(const DecisionTreeModel& m) {
  if (m.nodes.empty()) throw Error(ErrorCode::BadModelFile, "tree has no nodes");
  const std::size_t classes = m.target.cardinality();
  std::vector<int> parent_count(m.nodes.size(), 0);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const auto& n = m.nodes[i];
    if (n.counts.size() != classes) throw Error(ErrorCode::BadModelFile, "node count width != class count");
    if (n.predicted < 0 || static_cast<std::size_t>(n.predicted) >= classes)
      throw Error(ErrorCode::BadModelFile, "node prediction out of range");
    if (n.is_leaf()) {
      if (!n.children.empty()) throw Error(ErrorCode::BadModelFile, "leaf with children");
      continue;
    }
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.features.size())
      throw Error(ErrorCode::BadModelFile, "node feature out of range");
    if (n.children.size() != m.features[static_cast<std::size_t>(n.feature)].cardinality())
      throw Error(ErrorCode::BadModelFile, "child list does not match feature levels");
    bool any = false;
    for (auto c : n.children) {
      if (c == TreeNode::kNoChild) continue;
      if (c <= static_cast<std::int32_t>(i) || static_cast<std::size_t>(c) >= m.nodes.size())
        throw Error(ErrorCode::BadModelFile, "child index out of order");
      ++parent_count[static_cast<std::size_t>(c)];
      any = true;
    }
    if (!any) throw Error(ErrorCode::BadModelFile, "internal node without children");
  }
  for (std::size_t i = 1; i < m.nodes.size(); ++i) {
    if (parent_count[i] != 1) throw Error(ErrorCode::BadModelFile, "node reachable from zero or several parents");
  }
}

}  // namespace

std::string_view model_kind(const ModelArtifact& artifact) noexcept {
  return std::holds_alternative<DecisionTreeModel>(artifact) ? "decision_tree" : "bayes_net";
}

const std::string& model_target(const ModelArtifact& artifact) noexcept {
  if (const auto* t = std::get_if<DecisionTreeModel>(&artifact)) return t->target.name;
  const auto& bn = std::get<BayesNetModel>(artifact);
  return bn.variables[bn.class_var].name;
}

json tree_to_json(const DecisionTreeModel& model) {
  json features = json::array();
  for (const auto& f : model.features) features.push_back(variable_to_json(f));
  json nodes = json::array();
  for (const auto& n : model.nodes) {
    json node = {{"counts", n.counts}, {"predicted", n.predicted}};
    if (n.is_leaf()) {
      node["feature"] = nullptr;
    } else {
      node["feature"] = model.features[static_cast<std::size_t>(n.feature)].name;
      json children = json::array();
      for (auto c : n.children) children.push_back(c == TreeNode::kNoChild ? json(nullptr) : json(c));
      node["children"] = children;
    }
    nodes.push_back(std::move(node));
  }
  return {
      {"format_version", kModelFormatVersion},
      {"kind", "decision_tree"},
      {"target", variable_to_json(model.target)},
      {"features", features},
      {"nodes", nodes},
      {"training_meta",
       {{"records", model.training_records},
        {"params",
         {{"min_leaf", model.params.min_leaf},
          {"prune", model.params.prune},
          {"confidence", model.params.confidence},
          {"seed", model.params.seed}}}}},
  };
}

DecisionTreeModel tree_from_json(const json& doc) {
  check_header(doc, "decision_tree");
  return guarded([&] {
    DecisionTreeModel m;
    m.target = variable_from_json(doc.at("target"));
    for (const auto& f : doc.at("features")) m.features.push_back(variable_from_json(f));
    for (const auto& j : doc.at("nodes")) {
      TreeNode n;
      n.counts = j.at("counts").get<std::vector<std::size_t>>();
      n.predicted = j.at("predicted").get<Level>();
      if (!j.at("feature").is_null()) {
        const auto name = j.at("feature").get<std::string>();
        auto it = std::find_if(m.features.begin(), m.features.end(),
                               [&](const VariableInfo& v) { return v.name == name; });
        if (it == m.features.end()) throw Error(ErrorCode::BadModelFile, "node tests unknown feature " + name);
        n.feature = static_cast<int>(it - m.features.begin());
        for (const auto& c : j.at("children"))
          n.children.push_back(c.is_null() ? TreeNode::kNoChild : c.get<std::int32_t>());
      }
      m.nodes.push_back(std::move(n));
    }
    const auto& meta = doc.at("training_meta");
    m.training_records = meta.at("records").get<std::size_t>();
    const auto& p = meta.at("params");
    m.params.min_leaf = p.at("min_leaf").get<std::size_t>();
    m.params.prune = p.at("prune").get<bool>();
    m.params.confidence = p.at("confidence").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    validate_tree(m);
    return m;
  });
}

json bn_to_json(const BayesNetModel& model) {
  json variables = json::array();
  for (const auto& v : model.variables) variables.push_back(variable_to_json(v));
  json edges = json::array();
  for (const auto& [p, c] : model.dag.edges()) edges.push_back({model.variables[p].name, model.variables[c].name});
  json cpts = json::array();
  for (std::size_t v = 0; v < model.variables.size(); ++v) {
    const auto& cpt = model.cpts[v];
    json parents = json::array();
    for (auto p : cpt.parents) parents.push_back(model.variables[p].name);
    json rows = json::array();
    for (std::size_t r = 0; r < cpt.rows(); ++r) {
      const auto row = cpt.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    cpts.push_back({{"variable", model.variables[v].name}, {"parents", parents}, {"table", rows}});
  }
  return {
      {"format_version", kModelFormatVersion},
      {"kind", "bayes_net"},
      {"class", model.variables[model.class_var].name},
      {"variables", variables},
      {"dag", {{"edges", edges}}},
      {"cpts", cpts},
      {"training_meta",
       {{"records", model.training_records},
        {"params",
         {{"max_parents", model.params.max_parents},
          {"score", to_string(model.params.score)},
          {"equivalent_sample_size", model.params.equivalent_sample_size},
          {"restarts", model.params.restarts},
          {"seed", model.params.seed},
          {"smoothing_alpha", model.params.smoothing_alpha}}}}},
  };
}

BayesNetModel bn_from_json(const json& doc) {
  check_header(doc, "bayes_net");
  return guarded([&] {
    BayesNetModel m;
    for (const auto& v : doc.at("variables")) m.variables.push_back(variable_from_json(v));
    auto index = [&](const std::string& name) {
      auto i = m.find(name);
      if (!i) throw Error(ErrorCode::BadModelFile, "unknown variable " + name);
      return *i;
    };
    m.class_var = index(doc.at("class").get<std::string>());
    m.dag = Dag(m.variables.size());
    for (const auto& e : doc.at("dag").at("edges")) {
      try {
        m.dag.add_edge(index(e.at(0).get<std::string>()), index(e.at(1).get<std::string>()));
      } catch (const Error& err) {
        if (err.code() == ErrorCode::BadModelFile) throw;
        throw Error(ErrorCode::BadModelFile, err.detail());
      }
    }
    m.cpts.resize(m.variables.size());
    std::vector<bool> seen(m.variables.size(), false);
    for (const auto& j : doc.at("cpts")) {
      const std::size_t v = index(j.at("variable").get<std::string>());
      if (seen[v]) throw Error(ErrorCode::BadModelFile, "duplicate cpt for " + m.variables[v].name);
      seen[v] = true;
      Cpt cpt;
      for (const auto& p : j.at("parents")) cpt.parents.push_back(index(p.get<std::string>()));
      cpt.cardinality = m.variables[v].cardinality();
      for (const auto& row : j.at("table")) {
        const auto values = row.get<std::vector<double>>();
        if (values.size() != cpt.cardinality) throw Error(ErrorCode::BadModelFile, "cpt row width mismatch");
        cpt.table.insert(cpt.table.end(), values.begin(), values.end());
      }
      m.cpts[v] = std::move(cpt);
    }
    const auto& meta = doc.at("training_meta");
    m.training_records = meta.at("records").get<std::size_t>();
    const auto& p = meta.at("params");
    m.params.max_parents = p.at("max_parents").get<std::size_t>();
    auto score = parse_score_kind(p.at("score").get<std::string>());
    if (!score) throw Error(ErrorCode::BadModelFile, "unknown score kind");
    m.params.score = *score;
    m.params.equivalent_sample_size = p.at("equivalent_sample_size").get<double>();
    m.params.restarts = p.at("restarts").get<unsigned>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.params.smoothing_alpha = p.at("smoothing_alpha").get<double>();
    validate(m);
    return m;
  });
}

json model_to_json(const PersistedModel& model) {
  json doc = std::holds_alternative<DecisionTreeModel>(model.artifact)
                 ? tree_to_json(std::get<DecisionTreeModel>(model.artifact))
                 : bn_to_json(std::get<BayesNetModel>(model.artifact));
  if (model.metrics) doc["metrics"] = {{"accuracy", model.metrics->accuracy}, {"f_measure", model.metrics->f_measure}};
  if (!model.evaluation.is_null()) doc["evaluation"] = model.evaluation;
  return doc;
}

PersistedModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::BadModelFile, "model document is not an object");
  const auto kind = doc.value("kind", std::string{});
  PersistedModel out;
  if (kind == "decision_tree") {
    out.artifact = tree_from_json(doc);
  } else if (kind == "bayes_net") {
    out.artifact = bn_from_json(doc);
  } else {
    throw Error(ErrorCode::BadModelFile, "unknown model kind '" + kind + "'");
  }
  guarded([&] {
    if (doc.contains("metrics")) {
      MetricsSummary m;
      m.accuracy = doc.at("metrics").at("accuracy").get<double>();
      m.f_measure = doc.at("metrics").at("f_measure").get<std::map<std::string, double>>();
      out.metrics = m;
    }
    if (doc.contains("evaluation")) out.evaluation = doc.at("evaluation");
    return 0;
  });
  return out;
}

PredictionResult predict(const ModelArtifact& artifact, const Evidence& evidence) {
  if (const auto* t = std::get_if<DecisionTreeModel>(&artifact)) return predict_tree(*t, evidence);
  return predict_bn(std::get<BayesNetModel>(artifact), evidence);
}

std::string export_dot(const ModelArtifact& artifact) {
  if (const auto* t = std::get_if<DecisionTreeModel>(&artifact)) return export_tree_dot(*t);
  return export_bn_dot(std::get<BayesNetModel>(artifact));
}

}  // namespace natal_risk
