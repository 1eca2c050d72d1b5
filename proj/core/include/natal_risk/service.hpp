#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "natal_risk/model_io.hpp"

namespace natal_risk {

struct ModelRegistryEntry {
  std::string id;
  PersistedModel model;
  /// ISO-8601 UTC time of the model file's last modification.
  std::string created_at;

  std::string_view kind() const noexcept { return model_kind(model.artifact); }
  const std::string& target() const noexcept { return model_target(model.artifact); }
};

/// Read-only set of models keyed by id.
class ModelRegistry {
 public:
  /// Throws Error{BadRequest} on a duplicate id.
  void add(ModelRegistryEntry entry);
  const ModelRegistryEntry* find(std::string_view id) const noexcept;
  /// Sorted by id.
  const std::vector<ModelRegistryEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Loads every `*.json` file of `dir`; the id is the file stem. Files that
  /// fail to parse or validate are skipped and described in `warnings`.
  /// Throws Error{Io} when the directory cannot be read.
  static ModelRegistry load_directory(const std::filesystem::path& dir, std::vector<std::string>& warnings);

 private:
  std::vector<ModelRegistryEntry> entries_;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// The request router, transport-free. Every method is const and touches
/// only immutable state, so one instance can serve concurrent requests.
///
///   GET  /api/schema
///   GET  /api/models
///   GET  /api/models/{id}
///   GET  /api/models/{id}/graph
///   POST /api/models/{id}/predict   body: {"evidence": {name: value}}
///
/// Errors are `{"error": {"code": ..., "detail": ...}}` with 400, 404 or 405.
class PredictionService {
 public:
  explicit PredictionService(ModelRegistry registry);

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  const ModelRegistry& registry() const noexcept { return registry_; }

  /// Serialised builtin schema; GET /api/schema returns exactly this.
  static std::string schema_document();

 private:
  HttpResponse list_models() const;
  HttpResponse model_metadata(const ModelRegistryEntry& entry) const;
  HttpResponse model_graph(const ModelRegistryEntry& entry) const;
  HttpResponse predict(const ModelRegistryEntry& entry, std::string_view body) const;

  ModelRegistry registry_;
};

HttpResponse error_response(int status, std::string_view code, const std::string& detail);

/// Parses the JSON evidence object of a predict request against the builtin
/// schema. Values may be level labels, integer ranks, or null (unset).
/// Throws Error{BadEvidence} naming the offending key.
Evidence parse_evidence(const nlohmann::json& evidence);

/// HTTP/1.1 front end for a PredictionService.
class HttpServer {
 public:
  explicit HttpServer(const PredictionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to host:port (port 0 picks a free port). Throws
  /// Error{PortUnavailable}. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();
  bool running() const;
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace natal_risk
