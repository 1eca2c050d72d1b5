#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "natal_risk/dataset.hpp"
#include "natal_risk/random.hpp"
#include "natal_risk/view.hpp"

namespace natal_risk {

struct SmoteParams {
  /// Oversampling amount; must be a multiple of 100 (200 = two synthetic
  /// records per minority record).
  unsigned percent = 200;
  /// Neighbour count; clamped to minority - 1 by `smote`.
  unsigned k = 5;
  std::uint64_t seed = 1;
};

/// Least frequent target level that occurs in the view (ties -> lower level).
/// Throws Error{DegenerateTarget} when fewer than two levels occur.
Level minority_class(const DatasetView& view);

/// The k nearest other minority rows of the minority row at `position`,
/// nearest first, ties broken by lower position. Distance is summed over the
/// view's predictors: 0/1 per binary feature, |rank difference| / bin count
/// per ordinal one. A missing value is replaced by the minority-class mode of
/// that feature for distance purposes.
///
/// Errors: NotMinorityRecord, InsufficientMinority, InvalidParams (k == 0).
std::vector<std::size_t> minority_neighbors(const DatasetView& view, std::size_t position, std::size_t k);

/// Interpolates one synthetic record between `base` and `neighbor` at
/// `lambda` in [0, 1). Every variable moves from the base's rank toward the
/// neighbour's rank by lambda of the gap, rounded to the nearest level (a
/// half-step rounds toward the neighbour), so binary values come from the base
/// when lambda < 0.5 and from the neighbour otherwise. Missing base values stay
/// missing; a missing neighbour value keeps the base value. The target is set
/// to `minority` and provenance to `smote`.
///
/// Throws Error{SchemaMismatch} when either record does not fit `schema`.
PatientRecord synthesize_one(const RiskFactorSchema& schema, const PatientRecord& base,
                             const PatientRecord& neighbor, double lambda, std::size_t target, Level minority);

/// Same, drawing lambda from `rng`.
PatientRecord synthesize_one(const RiskFactorSchema& schema, const PatientRecord& base,
                             const PatientRecord& neighbor, Rng& rng, std::size_t target, Level minority);

/// SMOTE over the view's minority class. The result holds the view's rows in
/// order followed by minority_count * percent / 100 synthetic records.
///
/// Errors: InvalidParams, DegenerateTarget, MinorityTooSmall.
Dataset smote(const DatasetView& view, const SmoteParams& params);

}  // namespace natal_risk
