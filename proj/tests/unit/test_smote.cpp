#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "natal_risk/error.hpp"
#include "natal_risk/smote.hpp"

using namespace natal_risk;

namespace {

const std::vector<std::string> kFeatures = {"age_gt35", "hypertension", "twins", "birth_weight"};

/// `minority` positives and `majority` negatives with random feature values.
DatasetView random_view(std::size_t minority, std::size_t majority, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PatientRecord> records;
  for (std::size_t i = 0; i < minority + majority; ++i) {
    auto r = fixture::record({{"apgar1_leq7", i < minority ? kPresent : kAbsent}});
    for (const auto& f : kFeatures) {
      const auto idx = builtin_schema().index_of(f);
      r.values[idx] = static_cast<Level>(rng() % builtin_schema().variable(idx).cardinality());
    }
    records.push_back(r);
  }
  std::shuffle(records.begin(), records.end(), rng);
  return feature_view(fixture::dataset(records), "apgar1_leq7", kFeatures);
}

double distance(const DatasetView& view, std::size_t a, std::size_t b) {
  double d = 0;
  for (auto p : view.predictors()) {
    const auto& def = view.schema().variable(p);
    const double x = view.value(a, p);
    const double y = view.value(b, p);
    d += def.kind == FactorKind::Binary ? (x != y ? 1.0 : 0.0) : std::abs(x - y) / static_cast<double>(def.cardinality());
  }
  return d;
}

std::size_t count_class(const Dataset& ds, Level cls) {
  const auto t = builtin_schema().index_of("apgar1_leq7");
  return static_cast<std::size_t>(
      std::count_if(ds.records().begin(), ds.records().end(), [&](const PatientRecord& r) { return r[t] == cls; }));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("minority class is the rarest present level") {
  CHECK(minority_class(random_view(3, 10, 1)) == kPresent);
  CHECK(minority_class(random_view(10, 3, 1)) == kAbsent);
  CHECK(minority_class(random_view(5, 5, 1)) == kAbsent);
  CHECK(code_of([] { (void)minority_class(random_view(0, 5, 1)); }) == ErrorCode::DegenerateTarget);
}

TEST_CASE("neighbours match a brute-force ranking") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto view = random_view(9, 12, seed);
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < view.size(); ++i) {
      if (view.label(i) == kPresent) minority.push_back(i);
    }
    for (auto pos : minority) {
      std::vector<std::size_t> others;
      for (auto o : minority) {
        if (o != pos) others.push_back(o);
      }
      std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
        return distance(view, pos, a) < distance(view, pos, b);
      });
      others.resize(4);
      CHECK(minority_neighbors(view, pos, 4) == others);
    }
  }
}

TEST_CASE("neighbour errors") {
  const auto view = random_view(3, 6, 2);
  std::size_t maj = 0;
  std::size_t min = 0;
  for (std::size_t i = 0; i < view.size(); ++i) (view.label(i) == kPresent ? min : maj) = i;
  CHECK(code_of([&] { (void)minority_neighbors(view, maj, 1); }) == ErrorCode::NotMinorityRecord);
  CHECK(code_of([&] { (void)minority_neighbors(view, min, 3); }) == ErrorCode::InsufficientMinority);
  CHECK(code_of([&] { (void)minority_neighbors(view, min, 0); }) == ErrorCode::InvalidParams);
  CHECK(minority_neighbors(view, min, 2).size() == 2);
}

TEST_CASE("missing predictor values use the minority mode for distance") {
  // Minority rows: A has hypertension missing; mode of hypertension among
  // minority is present, so A sits at distance 0 from B and 1 from C.
  auto a = fixture::record({{"apgar1_leq7", 1}});
  a.values[builtin_schema().index_of("hypertension")] = kMissing;
  auto b = fixture::record({{"apgar1_leq7", 1}, {"hypertension", 1}});
  auto c = fixture::record({{"apgar1_leq7", 1}, {"hypertension", 0}});
  auto d = fixture::record({{"apgar1_leq7", 1}, {"hypertension", 1}, {"twins", 1}});
  auto e = fixture::record({{"apgar1_leq7", 0}});
  auto f = fixture::record({{"apgar1_leq7", 0}});
  auto g = fixture::record({{"apgar1_leq7", 0}});
  auto h = fixture::record({{"apgar1_leq7", 0}});
  const auto view = feature_view(fixture::dataset({c, d, a, b, e, f, g, h, h}), "apgar1_leq7", {"hypertension", "twins"});
  CHECK(minority_neighbors(view, 2, 3) == std::vector<std::size_t>{3, 0, 1});
}

TEST_CASE("interpolation moves each rank toward the neighbour") {
  const auto& s = builtin_schema();
  const auto bw = s.index_of("birth_weight");
  const auto tw = s.index_of("twins");
  const auto target = s.index_of("apgar1_leq7");
  auto base = fixture::record({{"birth_weight", 0}, {"twins", 0}});
  auto nb = fixture::record({{"birth_weight", 2}, {"twins", 1}});
  base.values[s.index_of("iugr")] = kMissing;
  nb.values[s.index_of("iugr")] = kPresent;
  nb.values[s.index_of("macrosomia")] = kMissing;

  auto r = synthesize_one(s, base, nb, 0.0, target, kPresent);
  CHECK(r[bw] == 0);
  CHECK(r[tw] == 0);
  CHECK(r[target] == kPresent);
  CHECK(r.provenance == Provenance::Smote);
  CHECK(r[s.index_of("iugr")] == kMissing);
  CHECK(r[s.index_of("macrosomia")] == kAbsent);

  r = synthesize_one(s, base, nb, 0.3, target, kPresent);
  CHECK(r[bw] == 1);  // 0.6 steps -> 1
  CHECK(r[tw] == 0);
  r = synthesize_one(s, base, nb, 0.5, target, kPresent);
  CHECK(r[bw] == 1);
  CHECK(r[tw] == 1);  // half step rounds toward the neighbour
  r = synthesize_one(s, base, nb, 0.9, target, kPresent);
  CHECK(r[bw] == 2);
  CHECK(r[tw] == 1);

  auto narrow = fixture::blank();
  narrow.values.pop_back();
  CHECK(code_of([&] { (void)synthesize_one(s, narrow, nb, 0.1, target, kPresent); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("synthetic ordinal values stay within the bins") {
  const auto view = random_view(12, 30, 4);
  const auto out = smote(view, {300, 5, 9});
  const auto bw = builtin_schema().index_of("birth_weight");
  std::set<Level> seen;
  for (std::size_t i = view.size(); i < out.size(); ++i) seen.insert(out[i][bw]);
  for (auto l : seen) CHECK((l >= 0 && l <= 2));
}

TEST_CASE("smote output: view rows then minority * percent / 100 synthetic records") {
  for (unsigned percent : {100u, 200u, 500u}) {
    const auto view = random_view(18, 60, percent);
    const auto out = smote(view, {percent, 5, 7});
    REQUIRE(out.size() == view.size() + 18 * percent / 100);
    for (std::size_t i = 0; i < view.size(); ++i) CHECK(out[i] == view.record(i));
    for (std::size_t i = view.size(); i < out.size(); ++i) CHECK(out[i].provenance == Provenance::Smote);
    CHECK(count_class(out, kPresent) == 18 + 18 * percent / 100);
    CHECK(count_class(out, kAbsent) == 60);
  }
}

TEST_CASE("smote is deterministic in its seed") {
  const auto view = random_view(10, 40, 3);
  CHECK(smote(view, {200, 3, 1}) == smote(view, {200, 3, 1}));
  CHECK_FALSE(smote(view, {200, 3, 1}) == smote(view, {200, 3, 2}));
}

TEST_CASE("smote edge cases") {
  const auto view = random_view(6, 20, 5);
  CHECK(smote(view, {0, 5, 1}).size() == view.size());
  CHECK(code_of([&] { (void)smote(view, {150, 5, 1}); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { (void)smote(random_view(1, 20, 5), {100, 5, 1}); }) == ErrorCode::MinorityTooSmall);
  CHECK(code_of([&] { (void)smote(random_view(0, 20, 5), {100, 5, 1}); }) == ErrorCode::DegenerateTarget);
  // k larger than minority - 1 is clamped.
  CHECK(smote(random_view(3, 20, 5), {100, 10, 1}).size() == 26);
}
