#include "natal_risk/smote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "natal_risk/error.hpp"

namespace natal_risk {
namespace {

/// Minority rows of a view with missing predictor values imputed by the
/// minority mode, ready for distance queries.
class MinorityIndex {
 public:
  MinorityIndex(const DatasetView& view, Level minority) {
    const auto predictors = view.predictors();
    for (std::size_t i = 0; i < view.size(); ++i) {
      if (view.label(i) == minority) positions_.push_back(i);
    }
    std::vector<Level> mode(predictors.size(), 0);
    for (std::size_t f = 0; f < predictors.size(); ++f) {
      const auto& def = view.schema().variable(predictors[f]);
      std::vector<std::size_t> counts(def.cardinality(), 0);
      for (auto p : positions_) {
        const Level v = view.value(p, predictors[f]);
        if (v != kMissing) ++counts[static_cast<std::size_t>(v)];
      }
      mode[f] = static_cast<Level>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      scale_.push_back(def.kind == FactorKind::Binary ? 1.0 : 1.0 / static_cast<double>(def.cardinality()));
    }
    encoded_.reserve(positions_.size() * predictors.size());
    for (auto p : positions_) {
      for (std::size_t f = 0; f < predictors.size(); ++f) {
        const Level v = view.value(p, predictors[f]);
        encoded_.push_back(v == kMissing ? mode[f] : v);
      }
    }
  }

  std::size_t size() const noexcept { return positions_.size(); }
  std::size_t position(std::size_t m) const { return positions_[m]; }

  /// Index into the minority list of view position `pos`, or npos.
  std::size_t find(std::size_t pos) const {
    auto it = std::lower_bound(positions_.begin(), positions_.end(), pos);
    if (it == positions_.end() || *it != pos) return npos;
    return static_cast<std::size_t>(it - positions_.begin());
  }

  double distance(std::size_t a, std::size_t b) const {
    const std::size_t width = scale_.size();
    double d = 0.0;
    for (std::size_t f = 0; f < width; ++f) {
      const int diff = encoded_[a * width + f] - encoded_[b * width + f];
      if (diff != 0) d += std::abs(diff) * scale_[f];
    }
    return d;
  }

  /// k nearest minority list indices of minority list index m.
  std::vector<std::size_t> nearest(std::size_t m, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(size() - 1);
    for (std::size_t o = 0; o < size(); ++o) {
      if (o != m) cand.emplace_back(distance(m, o), o);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(cand[i].second);
    return out;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::size_t> positions_;
  std::vector<double> scale_;
  std::vector<Level> encoded_;
};

void check_fits(const RiskFactorSchema& schema, const PatientRecord& r, const char* which) {
  if (r.values.size() != schema.variable_count())
    throw Error(ErrorCode::SchemaMismatch, std::string(which) + " record width does not match the schema");
  for (std::size_t v = 0; v < r.values.size(); ++v) {
    const Level level = r.values[v];
    if (level != kMissing && (level < 0 || static_cast<std::size_t>(level) >= schema.variable(v).cardinality()))
      throw Error(ErrorCode::SchemaMismatch, std::string(which) + " record has an out-of-range level for " +
                                                 schema.variable(v).name);
  }
}

}  // namespace

Level minority_class(const DatasetView& view) {
  const auto counts = view.class_counts();
  std::size_t present = 0;
  Level best = kMissing;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    ++present;
    if (best == kMissing || counts[c] < counts[static_cast<std::size_t>(best)]) best = static_cast<Level>(c);
  }
  if (present < 2) throw Error(ErrorCode::DegenerateTarget, "target " + view.target_name() + " has a single class");
  return best;
}

std::vector<std::size_t> minority_neighbors(const DatasetView& view, std::size_t position, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidParams, "k must be at least 1");
  const Level minority = minority_class(view);
  const MinorityIndex index(view, minority);
  const std::size_t m = index.find(position);
  if (m == MinorityIndex::npos)
    throw Error(ErrorCode::NotMinorityRecord, "position " + std::to_string(position) + " is not a minority record");
  const std::size_t available = index.size() - 1;
  if (k > available) {
    throw Error(ErrorCode::InsufficientMinority,
                "k=" + std::to_string(k) + " but only " + std::to_string(available) + " other minority records");
  }
  std::vector<std::size_t> out;
  for (auto n : index.nearest(m, k)) out.push_back(index.position(n));
  return out;
}

PatientRecord synthesize_one(const RiskFactorSchema& schema, const PatientRecord& base,
                             const PatientRecord& neighbor, double lambda, std::size_t target, Level minority) {
  check_fits(schema, base, "base");
  check_fits(schema, neighbor, "neighbour");
  PatientRecord out{base.values, Provenance::Smote};
  for (std::size_t v = 0; v < out.values.size(); ++v) {
    const Level b = base.values[v];
    const Level n = neighbor.values[v];
    if (b == kMissing || n == kMissing || b == n) continue;
    const double gap = static_cast<double>(n - b);
    const auto steps = static_cast<int>(std::floor(lambda * std::abs(gap) + 0.5));
    out.values[v] = static_cast<Level>(b + (gap > 0 ? steps : -steps));
  }
  out.values[target] = minority;
  return out;
}

PatientRecord synthesize_one(const RiskFactorSchema& schema, const PatientRecord& base,
                             const PatientRecord& neighbor, Rng& rng, std::size_t target, Level minority) {
  return synthesize_one(schema, base, neighbor, unit_real(rng), target, minority);
}

Dataset smote(const DatasetView& view, const SmoteParams& params) {
  if (params.percent % 100 != 0)
    throw Error(ErrorCode::InvalidParams, "percent must be a multiple of 100, got " + std::to_string(params.percent));
  if (params.k == 0) throw Error(ErrorCode::InvalidParams, "k must be at least 1");

  std::vector<PatientRecord> records;
  records.reserve(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) records.push_back(view.record(i));
  if (params.percent == 0) return Dataset(view.schema(), std::move(records));

  const Level minority = minority_class(view);
  const MinorityIndex index(view, minority);
  if (index.size() < 2)
    throw Error(ErrorCode::MinorityTooSmall, "need at least 2 minority records, have " + std::to_string(index.size()));
  const std::size_t k = std::min<std::size_t>(params.k, index.size() - 1);
  const std::size_t per_record = params.percent / 100;

  Rng rng(params.seed);
  records.reserve(view.size() + index.size() * per_record);
  for (std::size_t m = 0; m < index.size(); ++m) {
    const auto neighbours = index.nearest(m, k);
    const auto& base = view.record(index.position(m));
    for (std::size_t s = 0; s < per_record; ++s) {
      const std::size_t pick = neighbours[uniform_index(rng, neighbours.size())];
      const auto& neighbour = view.record(index.position(pick));
      records.push_back(synthesize_one(view.schema(), base, neighbour, rng, view.target(), minority));
    }
  }
  return Dataset(view.schema(), std::move(records));
}

}  // namespace natal_risk
