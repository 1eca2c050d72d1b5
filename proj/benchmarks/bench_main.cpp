#include <memory>

#include <benchmark/benchmark.h>

#include "natal_risk/bayesnet.hpp"
#include "natal_risk/dtree.hpp"
#include "natal_risk/smote.hpp"
#include "natal_risk/synthetic.hpp"

using namespace natal_risk;

namespace {

DatasetView cohort(std::size_t n) {
  auto ds = std::make_shared<const Dataset>(generate_synthetic(planted_cohort_spec(1), n));
  auto predictors = factor_names(builtin_schema());
  predictors.push_back("ventilated_at_birth");
  return feature_view(ds, "apgar1_leq7", predictors);
}

void BM_InduceTree(benchmark::State& state) {
  const auto view = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(induce(view, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InduceTree)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Smote(benchmark::State& state) {
  const auto view = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(smote(view, {200, 5, 1}));
}
BENCHMARK(BM_Smote)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_LearnStructure(benchmark::State& state) {
  const auto view = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(learn_structure(view, {}));
}
BENCHMARK(BM_LearnStructure)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Eliminate(benchmark::State& state) {
  const auto view = cohort(2000);
  const auto model = fit_cpts(learn_structure(view, {}), view, 1.0);
  const Evidence evidence{{"ventilated_at_birth", kPresent}, {"twins", kAbsent}, {"birth_weight", 1}};
  for (auto _ : state) benchmark::DoNotOptimize(eliminate(model, "apgar1_leq7", evidence));
}
BENCHMARK(BM_Eliminate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
