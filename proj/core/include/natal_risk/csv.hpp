#pragma once

#include <string>
#include <string_view>

#include "natal_risk/dataset.hpp"

namespace natal_risk {

/// Name of the optional trailing column that carries record provenance.
inline constexpr std::string_view kProvenanceColumn = "provenance";

/// Parses comma-separated text with a header row. Every factor must have a
/// column; outcome columns are optional (absent ones read as missing). Cells
/// are `0`/`1` for binary variables, a bin label for ordinal ones, and empty
/// for missing. Records default to provenance `real` unless a `provenance`
/// column is present.
///
/// Errors: EmptyInput, UnknownColumn, DuplicateColumn, MissingColumn, BadValue.
Dataset parse_dataset(std::string_view csv_text, const RiskFactorSchema& schema);

struct CsvWriteOptions {
  bool provenance_column = false;
};

/// Canonical form: all schema columns in schema order, LF line endings, one
/// trailing newline.
std::string write_dataset(const Dataset& dataset, const CsvWriteOptions& options = {});

}  // namespace natal_risk
