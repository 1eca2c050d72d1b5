#include "natal_risk/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "natal_risk/error.hpp"
#include "natal_risk/schema.hpp"

namespace natal_risk {
namespace {

using nlohmann::json;

std::string iso_time(std::filesystem::file_time_type t) {
  const auto sys = std::chrono::time_point_cast<std::chrono::seconds>(
      t - std::filesystem::file_time_type::clock::now() + std::chrono::system_clock::now());
  const std::time_t tt = std::chrono::system_clock::to_time_t(sys);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metrics_json(const PersistedModel& model) {
  if (!model.metrics) return nullptr;
  return {{"accuracy", model.metrics->accuracy}, {"f_measure", model.metrics->f_measure}};
}

json summary_json(const ModelRegistryEntry& e) {
  return {{"id", e.id},
          {"kind", e.kind()},
          {"target", e.target()},
          {"created_at", e.created_at},
          {"metrics", metrics_json(e.model)}};
}

HttpResponse json_response(const json& body, int status = 200) {
  return HttpResponse{status, "application/json", body.dump()};
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

}  // namespace

void ModelRegistry::add(ModelRegistryEntry entry) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), entry.id,
                             [](const ModelRegistryEntry& e, const std::string& id) { return e.id < id; });
  if (it != entries_.end() && it->id == entry.id) throw Error(ErrorCode::BadRequest, "duplicate model id " + entry.id);
  entries_.insert(it, std::move(entry));
}

const ModelRegistryEntry* ModelRegistry::find(std::string_view id) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const ModelRegistryEntry& e, std::string_view key) { return e.id < key; });
  if (it == entries_.end() || it->id != id) return nullptr;
  return &*it;
}

ModelRegistry ModelRegistry::load_directory(const std::filesystem::path& dir, std::vector<std::string>& warnings) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot read model directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  ModelRegistry registry;
  for (const auto& file : files) {
    try {
      std::ifstream in(file);
      if (!in) throw Error(ErrorCode::Io, "unreadable");
      const json doc = json::parse(in);
      ModelRegistryEntry entry{file.stem().string(), model_from_json(doc), iso_time(std::filesystem::last_write_time(file))};
      registry.add(std::move(entry));
    } catch (const Error& e) {
      warnings.push_back("skipping " + file.filename().string() + ": " + e.what());
    } catch (const json::exception& e) {
      warnings.push_back("skipping " + file.filename().string() + ": " + e.what());
    }
  }
  return registry;
}

HttpResponse error_response(int status, std::string_view code, const std::string& detail) {
  return json_response({{"error", {{"code", code}, {"detail", detail}}}}, status);
}

Evidence parse_evidence(const json& evidence) {
  if (!evidence.is_object()) throw Error(ErrorCode::BadEvidence, "evidence must be a JSON object");
  const auto& schema = builtin_schema();
  Evidence out;
  for (const auto& [name, value] : evidence.items()) {
    const auto idx = schema.find(name);
    if (!idx) throw Error(ErrorCode::BadEvidence, name);
    if (value.is_null()) continue;
    const auto& def = schema.variable(*idx);
    std::optional<Level> level;
    if (value.is_string()) {
      level = parse_level(def, value.get<std::string>());
    } else if (value.is_number_integer()) {
      const auto rank = value.get<long long>();
      if (rank >= 0 && static_cast<std::size_t>(rank) < def.cardinality()) level = static_cast<Level>(rank);
    } else if (value.is_boolean()) {
      if (def.kind == FactorKind::Binary) level = value.get<bool>() ? kPresent : kAbsent;
    }
    if (!level) throw Error(ErrorCode::BadEvidence, name);
    out.emplace(name, *level);
  }
  return out;
}

PredictionService::PredictionService(ModelRegistry registry) : registry_(std::move(registry)) {}

std::string PredictionService::schema_document() { return schema_to_json(builtin_schema()).dump(); }

HttpResponse PredictionService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  const auto parts = split_path(path);
  if (parts.size() < 2 || parts[0] != "api") return error_response(404, "NotFound", std::string(path));
  const bool is_get = method == "GET";
  const bool is_post = method == "POST";

  if (parts.size() == 2 && parts[1] == "schema") {
    if (!is_get) return error_response(405, "MethodNotAllowed", std::string(method));
    return HttpResponse{200, "application/json", schema_document()};
  }
  if (parts[1] != "models") return error_response(404, "NotFound", std::string(path));
  if (parts.size() == 2) {
    if (!is_get) return error_response(405, "MethodNotAllowed", std::string(method));
    return list_models();
  }
  if (parts.size() > 4) return error_response(404, "NotFound", std::string(path));
  const auto* entry = registry_.find(parts[2]);
  if (entry == nullptr) return error_response(404, to_string(ErrorCode::UnknownModel), std::string(parts[2]));
  if (parts.size() == 3) {
    if (!is_get) return error_response(405, "MethodNotAllowed", std::string(method));
    return model_metadata(*entry);
  }
  if (parts[3] == "graph") {
    if (!is_get) return error_response(405, "MethodNotAllowed", std::string(method));
    return model_graph(*entry);
  }
  if (parts[3] == "predict") {
    if (!is_post) return error_response(405, "MethodNotAllowed", std::string(method));
    return predict(*entry, body);
  }
  return error_response(404, "NotFound", std::string(path));
}

HttpResponse PredictionService::list_models() const {
  json list = json::array();
  for (const auto& e : registry_.entries()) list.push_back(summary_json(e));
  return json_response(list);
}

HttpResponse PredictionService::model_metadata(const ModelRegistryEntry& entry) const {
  json doc = summary_json(entry);
  doc["evaluation"] = entry.model.evaluation;
  json variables = json::array();
  if (const auto* t = std::get_if<DecisionTreeModel>(&entry.model.artifact)) {
    for (const auto& f : t->features) variables.push_back(f.name);
    doc["training_records"] = t->training_records;
    doc["node_count"] = t->nodes.size();
    doc["leaf_count"] = t->leaf_count();
  } else {
    const auto& bn = std::get<BayesNetModel>(entry.model.artifact);
    for (std::size_t v = 0; v < bn.variables.size(); ++v) {
      if (v != bn.class_var) variables.push_back(bn.variables[v].name);
    }
    doc["training_records"] = bn.training_records;
    doc["edge_count"] = bn.dag.edge_count();
  }
  doc["variables"] = variables;
  doc["schema_version"] = kSchemaFormatVersion;
  return json_response(doc);
}

HttpResponse PredictionService::model_graph(const ModelRegistryEntry& entry) const {
  return HttpResponse{200, "text/vnd.graphviz", export_dot(entry.model.artifact)};
}

HttpResponse PredictionService::predict(const ModelRegistryEntry& entry, std::string_view body) const {
  json request;
  try {
    request = json::parse(body.empty() ? std::string_view("{}") : body);
  } catch (const json::exception&) {
    return error_response(400, to_string(ErrorCode::BadRequest), "request body is not valid JSON");
  }
  if (!request.is_object()) return error_response(400, to_string(ErrorCode::BadRequest), "request body must be an object");
  Evidence evidence;
  try {
    evidence = parse_evidence(request.contains("evidence") ? request["evidence"] : json::object());
  } catch (const Error& e) {
    return error_response(400, to_string(e.code()), e.detail());
  }
  if (evidence.count(entry.target()) > 0)
    return error_response(400, to_string(ErrorCode::BadEvidence), entry.target());

  PredictionResult result;
  try {
    result = natal_risk::predict(entry.model.artifact, evidence);
  } catch (const Error& e) {
    return error_response(400, to_string(ErrorCode::BadEvidence), e.detail());
  }

  json distribution = json::array();
  for (std::size_t c = 0; c < result.class_labels.size(); ++c)
    distribution.push_back({{"class", result.class_labels[c]}, {"probability", result.distribution[c]}});
  json explanation;
  if (std::holds_alternative<DecisionTreeModel>(entry.model.artifact)) {
    json steps = json::array();
    for (const auto& s : result.path) steps.push_back({{"feature", s.feature}, {"value", s.value}, {"imputed", s.imputed}});
    explanation = {{"kind", "path"}, {"steps", steps}};
  } else {
    explanation = {{"kind", "influence"}, {"factors", result.influence}};
  }
  json used = json::object();
  const auto& schema = builtin_schema();
  for (const auto& [name, level] : evidence) used[name] = schema.variable(schema.index_of(name)).level_label(level);
  return json_response({
      {"model", {{"id", entry.id}, {"kind", entry.kind()}, {"target", entry.target()}}},
      {"schema_version", kSchemaFormatVersion},
      {"predicted_class", result.predicted_label},
      {"distribution", distribution},
      {"explanation", explanation},
      {"evidence", used},
  });
}

}  // namespace natal_risk
