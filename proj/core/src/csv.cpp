#include "natal_risk/csv.hpp"

#include <optional>
#include <vector>

#include "natal_risk/error.hpp"

namespace natal_risk {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return cells;
}

}  // namespace

Dataset parse_dataset(std::string_view csv_text, const RiskFactorSchema& schema) {
  const auto lines = split_lines(csv_text);
  if (lines.empty()) throw Error(ErrorCode::EmptyInput, "no header row");

  const auto header = split_cells(lines.front());
  // column position -> schema variable (nullopt for the provenance column)
  std::vector<std::optional<std::size_t>> column_var;
  std::vector<bool> seen(schema.variable_count(), false);
  bool seen_provenance = false;
  for (auto name : header) {
    if (name == kProvenanceColumn) {
      if (seen_provenance) throw Error(ErrorCode::DuplicateColumn, std::string(name));
      seen_provenance = true;
      column_var.emplace_back(std::nullopt);
      continue;
    }
    auto idx = schema.find(name);
    if (!idx) throw Error(ErrorCode::UnknownColumn, std::string(name));
    if (seen[*idx]) throw Error(ErrorCode::DuplicateColumn, std::string(name));
    seen[*idx] = true;
    column_var.emplace_back(*idx);
  }
  for (std::size_t f = 0; f < schema.factors().size(); ++f) {
    if (!seen[f]) throw Error(ErrorCode::MissingColumn, schema.factors()[f].name);
  }

  std::vector<PatientRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto cells = split_cells(lines[row]);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::BadValue, "row " + std::to_string(row) + ": expected " +
                                           std::to_string(header.size()) + " cells, got " +
                                           std::to_string(cells.size()));
    }
    PatientRecord record{std::vector<Level>(schema.variable_count(), kMissing), Provenance::Real};
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = cells[c];
      if (!column_var[c]) {
        auto p = parse_provenance(cell);
        if (!p) {
          throw Error(ErrorCode::BadValue, "row " + std::to_string(row) + ", column provenance, value '" +
                                               std::string(cell) + "'");
        }
        record.provenance = *p;
        continue;
      }
      if (cell.empty()) continue;
      const auto& def = schema.variable(*column_var[c]);
      std::optional<Level> level;
      if (def.kind == FactorKind::Binary) {
        if (cell == "0") level = kAbsent;
        if (cell == "1") level = kPresent;
      } else {
        for (std::size_t b = 0; b < def.bins.size(); ++b) {
          if (def.bins[b] == cell) level = static_cast<Level>(b);
        }
      }
      if (!level) {
        throw Error(ErrorCode::BadValue, "row " + std::to_string(row) + ", column " + def.name + ", value '" +
                                             std::string(cell) + "'");
      }
      record.values[*column_var[c]] = *level;
    }
    records.push_back(std::move(record));
  }
  return Dataset(schema, std::move(records));
}

std::string write_dataset(const Dataset& dataset, const CsvWriteOptions& options) {
  const auto& schema = dataset.schema();
  std::string out;
  for (std::size_t v = 0; v < schema.variable_count(); ++v) {
    if (v > 0) out += ',';
    out += schema.variable(v).name;
  }
  if (options.provenance_column) {
    out += ',';
    out += kProvenanceColumn;
  }
  out += '\n';
  for (const auto& record : dataset.records()) {
    for (std::size_t v = 0; v < schema.variable_count(); ++v) {
      if (v > 0) out += ',';
      const Level level = record.values[v];
      if (level == kMissing) continue;
      const auto& def = schema.variable(v);
      if (def.kind == FactorKind::Binary) {
        out += level == kPresent ? '1' : '0';
      } else {
        out += def.bins[static_cast<std::size_t>(level)];
      }
    }
    if (options.provenance_column) {
      out += ',';
      out += to_string(record.provenance);
    }
    out += '\n';
  }
  return out;
}

}  // namespace natal_risk
